"""Board-plane and action-index encodings, board/text pair extraction, move search.

Plane layout of the 8x8x112 tensor (last axis), all slots oriented to the side to
move (ranks mirrored when black is to move):

* 8 history slots, newest first, 13 planes each:
  our P N B R Q K, their P N B R Q K, repetition
* 104..107: our king-side castling, our queen-side, their king-side, their queen-side
* 108: side to move (ones when black)
* 109: halfmove clock / 100
* 110: zeros, 111: ones

The action table lists 1858 from/to geometries: for every from-square a1..h8, the
queen-ray and knight-jump targets in ascending to-square order (1792 entries),
followed by 66 under-promotions (rank 7 to rank 8, to-square ascending, then
knight, bishop, rook). Queen promotions use the plain from/to entry.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import core
from .core import BISHOP, BLACK, KNIGHT, QUEEN, ROOK, IllegalMove, Move, Position
from .notation import GameRecord, clean_comments, format_movetext

N_PLANES = 112
N_SLOTS = 8
PLANES_PER_SLOT = 13
N_ACTIONS = 1858
TENSOR_HEADER = b"8 8 112\n"


class InvalidHistory(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    history_k: int = 8

    def __post_init__(self):
        if self.history_k < 1:
            raise ValueError("history_k must be >= 1")


@lru_cache(maxsize=None)
def _action_table() -> Tuple[Move, ...]:
    table: List[Move] = []
    for f in range(64):
        targets = core.ROOK_EMPTY[f] | core.BISHOP_EMPTY[f] | core.KNIGHT_ATTACKS[f]
        table.extend(Move(f, t) for t in core.iter_squares(targets))
    for f in range(48, 56):
        for t in (f + 7, f + 8, f + 9):
            if 56 <= t < 64 and abs((t & 7) - (f & 7)) <= 1:
                table.extend(Move(f, t, kind) for kind in (KNIGHT, BISHOP, ROOK))
    return tuple(table)


@lru_cache(maxsize=None)
def _action_index() -> Dict[Move, int]:
    return {m: i for i, m in enumerate(_action_table())}


def build_action_table() -> List[Move]:
    return list(_action_table())


def encode_move(p: Position, m: Move) -> int:
    if not core.is_legal(p, m):
        raise IllegalMove(f"illegal move {m.uci}")
    f, t = m.from_square, m.to_square
    if p.turn == BLACK:
        f ^= 56
        t ^= 56
    promo = m.promotion if m.promotion in (KNIGHT, BISHOP, ROOK) else None
    return _action_index()[Move(f, t, promo)]


def decode_move(p: Position, index: int) -> Move:
    """Inverse of encode_move for the given position."""
    d = _action_table()[index]
    f, t = d.from_square, d.to_square
    if p.turn == BLACK:
        f ^= 56
        t ^= 56
    promo = d.promotion
    if promo is None and p.pawns & (1 << f) and t >> 3 in (0, 7):
        promo = QUEEN
    return Move(f, t, promo)


def _planes(bb: int, flip: bool) -> np.ndarray:
    bits = np.unpackbits(np.array([bb], dtype="<u8").view(np.uint8), bitorder="little").reshape(8, 8)
    return bits[::-1] if flip else bits


def check_history(states: Sequence[Position]) -> None:
    if not states:
        raise InvalidHistory("history is empty")
    for i in range(1, len(states)):
        prev, nxt = states[i - 1], states[i]
        if not any(core._apply_code(prev, c) == nxt for c in core._legal_codes(prev)):
            raise InvalidHistory(f"state {i} is not reachable from state {i - 1}")


def encode_history(states: Sequence[Position], cfg: EncoderConfig = EncoderConfig()) -> np.ndarray:
    """Encode a position history (oldest first, current last) as an 8x8x112 array."""
    check_history(states)
    cur = states[-1]
    us = cur.turn
    them = 1 - us
    flip = us == BLACK
    out = np.zeros((8, 8, N_PLANES), dtype=np.float32)
    n_slots = min(N_SLOTS, cfg.history_k, len(states))
    keys = [s.key() for s in states]
    for slot in range(n_slots):
        idx = len(states) - 1 - slot
        s = states[idx]
        base = slot * PLANES_PER_SLOT
        for kind in range(1, 7):
            out[:, :, base + kind - 1] = _planes(s.pieces(kind, us), flip)
            out[:, :, base + 5 + kind] = _planes(s.pieces(kind, them), flip)
        if keys[idx] in keys[:idx]:
            out[:, :, base + 12] = 1.0
    rights = cur.castling_rights
    ours = rights[0:2] if us == core.WHITE else rights[2:4]
    theirs = rights[2:4] if us == core.WHITE else rights[0:2]
    for offset, flag in enumerate(ours + theirs):
        if flag:
            out[:, :, 104 + offset] = 1.0
    if us == BLACK:
        out[:, :, 108] = 1.0
    out[:, :, 109] = cur.halfmove_clock / 100.0
    out[:, :, 111] = 1.0
    return out


def write_tensor(path, tensor: np.ndarray) -> None:
    """Header line then little-endian float32 values in (plane, rank, file) order."""
    if tensor.shape != (8, 8, N_PLANES):
        raise ValueError(f"bad tensor shape {tensor.shape}")
    data = np.ascontiguousarray(tensor.transpose(2, 0, 1)).astype("<f4").tobytes()
    Path(path).write_bytes(TENSOR_HEADER + data)


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    header, _, body = raw.partition(b"\n")
    dims = tuple(int(x) for x in header.split())
    if dims != (8, 8, N_PLANES):
        raise ValueError(f"unexpected tensor header {header!r}")
    flat = np.frombuffer(body, dtype="<f4")
    return flat.reshape(N_PLANES, 8, 8).transpose(1, 2, 0).copy()


@dataclass
class AnnotationPair:
    states: List[Position]
    action: Move
    text: str
    ply: int = 0
    movetext: str = ""  # PGN movetext up to and including the annotated move
    game_id: str = ""


def extract_pairs(g: GameRecord, cfg: EncoderConfig = EncoderConfig(), game_id: str = "") -> List[AnnotationPair]:
    """One pair per move carrying commentary; the window ends at the pre-move position."""
    g = clean_comments(g)
    if not any(tm.comments for tm in g.moves):
        return []
    positions = g.positions()
    pairs = []
    for i, tm in enumerate(g.moves):
        if not tm.comments:
            continue
        lo = max(0, i - cfg.history_k)
        pairs.append(
            AnnotationPair(
                states=positions[lo : i + 1],
                action=tm.move,
                text=" ".join(tm.comments),
                ply=i,
                movetext=format_movetext(g, upto=i + 1),
                game_id=game_id,
            )
        )
    return pairs


# --- similarity-driven search ---------------------------------------------------

Scorer = Callable[[Tuple[Position, ...], Tuple[Move, ...]], float]


class SearchResult(NamedTuple):
    moves: Tuple[Move, ...]
    score: float


def replay(p: Position, moves: Sequence[Move]) -> Position:
    for m in moves:
        p = core.apply(p, m)
    return p


def search_moves(
    p: Position,
    scorer: Scorer,
    width: float = 1,
    depth: int = 1,
    history: Sequence[Position] = (),
    workers: Optional[int] = None,
) -> List[SearchResult]:
    """Beam search over legal move sequences, maximising ``scorer``.

    ``scorer(history, moves)`` receives the position history ending at ``p`` and a
    candidate sequence from ``p``. With ``workers`` > 1 the scorer is called from
    a thread pool and must be thread-safe. ``width=1`` is greedy search; pass
    ``math.inf`` for an unbounded beam. Equal scores keep move-generation order.
    """
    if width < 1 or depth < 1:
        raise ValueError("width and depth must be >= 1")
    hist = tuple(history) + (p,)
    beams: List[Tuple[Tuple[Move, ...], Position, Optional[float]]] = [((), p, None)]
    pool = ThreadPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        for _ in range(depth):
            cands = []
            fresh = []
            for seq, pos, score in beams:
                codes = sorted(core._legal_codes(pos))
                if not codes:
                    if seq:
                        cands.append([seq, pos, score])
                    continue
                for c in codes:
                    entry = [seq + (core.decode_move_code(c),), core._apply_code(pos, c), None]
                    cands.append(entry)
                    fresh.append(entry)
            if not fresh:
                break
            seqs = [e[0] for e in fresh]
            if pool is not None:
                scores = list(pool.map(lambda s: scorer(hist, s), seqs))
            else:
                scores = [scorer(hist, s) for s in seqs]
            for e, s in zip(fresh, scores):
                e[2] = float(s)
            cands.sort(key=lambda e: -e[2])
            if not math.isinf(width):
                cands = cands[: int(width)]
            beams = [tuple(e) for e in cands]
    finally:
        if pool is not None:
            pool.shutdown()
    return [SearchResult(seq, score) for seq, _, score in beams if seq]
