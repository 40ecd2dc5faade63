"""Evaluation task construction and the synthetic chess-modeling dataset.

Every generator is a pure function of its inputs and an explicit seed.  Random
choices use ``random.Random`` instances keyed by a string such as
``"{seed}:{kind}:{index}"`` so results do not depend on iteration order or on
how work is split across processes.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import core
from .core import BLACK, WHITE, Move, Position
from .notation import (
    GameRecord,
    Result,
    ascii_board,
    format_fen,
    format_movetext,
    format_san,
    game_from_moves,
    parse_fen,
)

log = logging.getLogger(__name__)

TASK_KINDS = (
    "state_tracking",
    "uci_to_fen",
    "pgn_to_fen",
    "state_value",
    "annotation_mc",
    "opening2pgn",
    "pgn2opening",
    "checkmate_in_one",
    "general_policy",
    "modeling_synthetic",
)

MODELING_TASKS = (
    "pgn_to_fen",
    "uci_to_fen",
    "fen_uci_to_san",
    "fen_san_to_uci",
    "fen_to_ascii",
    "fen_uci_to_next_fen",
    "fen_san_to_next_fen",
    "fen_to_legal_san",
    "fen_to_legal_uci",
    "pgn_to_legal_san",
    "pgn_to_legal_uci",
)

MOVE_TASKS = frozenset({"fen_uci_to_san", "fen_san_to_uci", "fen_uci_to_next_fen", "fen_san_to_next_fen"})

STATE_VALUE_CHOICES = ("Black has advantage.", "The game is equal.", "White has advantage.")
STATE_VALUE_PROMPT = "Evaluate the following PGN to see whether black or white takes advantage."
ANNOTATION_PROMPT = "Annotate the last step of the following PGN."
OPENING2PGN_PROMPT = "Show me the PGN of the following opening."
PGN2OPENING_PROMPT = "Show me the opening name of the following PGN."
STATE_TRACKING_PROMPT = (
    "For each game prefix in UCI notation, the last token is the square of the piece about to move. "
    "Give one square it can legally move to."
)
FEN_PROMPTS = {
    "uci": "Give the FEN of the position reached after these UCI moves from the standard start.",
    "pgn": "Give the FEN of the position reached after these PGN moves from the standard start.",
}
CHECKMATE_PROMPT = "Find the move that checkmates the opponent immediately."
CHECKMATE_HINT = "{{Now {color} can checkmate in one move.}}"

SPLIT_LIMITS = (("short", 20), ("medium", 60), ("long", None))
SPLIT_LABELS = {"short": "Short", "medium": "Med", "long": "Long"}
SOURCE_LABELS = {"real": "Real", "synthetic": "Syn"}


class NoMateAvailable(ValueError):
    pass


class MissingEloHeader(ValueError):
    pass


@dataclass
class TaskInstance:
    task_kind: str
    prompt_prefix: str
    input: str
    targets: Optional[List[str]] = None
    target_scores: Optional[Dict[str, float]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        if (self.targets is None) == (self.target_scores is None):
            raise ValueError("exactly one of targets / target_scores must be set")
        if self.target_scores is not None:
            if not self.target_scores:
                raise ValueError("empty choice set")
            if any(not 0.0 <= v <= 1.0 for v in self.target_scores.values()):
                raise ValueError("choice scores must lie in [0, 1]")
            if max(self.target_scores.values()) != 1.0:
                raise ValueError("best choice must score 1.0")

    @property
    def id(self) -> Optional[str]:
        return self.metadata.get("id")

    @property
    def choices(self) -> List[str]:
        return list(self.target_scores or ())

    @property
    def is_multiple_choice(self) -> bool:
        return self.target_scores is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task_kind": self.task_kind,
            "prompt_prefix": self.prompt_prefix,
            "input": self.input,
            "targets": self.targets,
            "target_scores": self.target_scores,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TaskInstance":
        return cls(
            task_kind=d["task_kind"],
            prompt_prefix=d["prompt_prefix"],
            input=d["input"],
            targets=d.get("targets"),
            target_scores=d.get("target_scores"),
            metadata=dict(d.get("metadata") or {}),
        )

    @classmethod
    def from_json(cls, line: str) -> "TaskInstance":
        return cls.from_dict(json.loads(line))


def write_jsonl(instances: Iterable[TaskInstance], fh) -> int:
    n = 0
    for inst in instances:
        fh.write(inst.to_json() + "\n")
        n += 1
    return n


def read_jsonl(path) -> List[TaskInstance]:
    with open(path, encoding="utf-8") as fh:
        return [TaskInstance.from_json(line) for line in fh if line.strip()]


# --- Elo stratification ------------------------------------------------------------


@dataclass(frozen=True)
class EloBand:
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bad Elo band {self.lo}-{self.hi}")

    def __contains__(self, elo: float) -> bool:
        return self.lo <= elo < self.hi

    def __str__(self) -> str:
        return f"{self.lo}-{self.hi}"

    @classmethod
    def parse(cls, text: str) -> "EloBand":
        lo, _, hi = text.partition("-")
        return cls(int(lo), int(hi))


MODELING_BANDS = tuple(
    EloBand(lo, hi)
    for lo, hi in [(0, 1000), (1000, 1200), (1200, 1400), (1400, 1600), (1600, 1800),
                   (1800, 2000), (2000, 2200), (2200, 2400), (2400, 3000)]
)
POLICY_BANDS = (EloBand(700, 1000), EloBand(1200, 1500), EloBand(1700, 2000), EloBand(2700, 3000))


def game_elo(g: GameRecord) -> float:
    """Mean of the WhiteElo and BlackElo headers."""
    try:
        return (int(g.header("WhiteElo")) + int(g.header("BlackElo"))) / 2
    except (TypeError, ValueError):
        raise MissingEloHeader("game lacks numeric WhiteElo/BlackElo headers") from None


def stratify_by_elo(
    games: Iterable[GameRecord],
    bands: Sequence[EloBand] = MODELING_BANDS,
    per_band: int = 10000,
    seed: int = 0,
    stats: Optional[Dict[str, int]] = None,
) -> List[GameRecord]:
    """Seeded reservoir sample of up to ``per_band`` games per band.

    Streams over ``games`` once and keeps at most ``per_band * len(bands)`` games.
    The result lists bands in order, each band's games in input order.
    """
    stats = stats if stats is not None else {}
    for key in ("seen", "missing_elo", "out_of_band"):
        stats.setdefault(key, 0)
    rngs = [random.Random(f"{seed}:band:{i}") for i in range(len(bands))]
    reservoirs: List[List[Tuple[int, GameRecord]]] = [[] for _ in bands]
    counts = [0] * len(bands)
    for idx, g in enumerate(games):
        stats["seen"] += 1
        try:
            elo = game_elo(g)
        except MissingEloHeader:
            stats["missing_elo"] += 1
            continue
        b = next((i for i, band in enumerate(bands) if elo in band), None)
        if b is None:
            stats["out_of_band"] += 1
            continue
        counts[b] += 1
        res = reservoirs[b]
        if len(res) < per_band:
            res.append((idx, g))
        else:
            j = rngs[b].randrange(counts[b])
            if j < per_band:
                res[j] = (idx, g)
    out = []
    for res in reservoirs:
        out.extend(g for _, g in sorted(res, key=lambda t: t[0]))
    return out


# --- helpers --------------------------------------------------------------------------


def split_for_plies(n: int) -> str:
    for name, limit in SPLIT_LIMITS:
        if limit is None or n <= limit:
            return name
    raise AssertionError


def report_split(source: str, split: str) -> str:
    return f"{SOURCE_LABELS[source]} {SPLIT_LABELS[split]}"


def game_source(g: GameRecord) -> str:
    return "synthetic" if g.header("Source") == "synthetic" else "real"


def _positions(game: GameRecord, upto: int) -> List[Position]:
    p = game.starting_position()
    out = [p]
    for tm in game.moves[:upto]:
        p = core.apply(p, tm.move)
        out.append(p)
    return out


def _check_cut(game: GameRecord, cut_ply: int) -> None:
    if not 0 <= cut_ply <= len(game.moves):
        raise ValueError(f"cut_ply {cut_ply} outside game of {len(game.moves)} plies")


def _uci_prefix(game: GameRecord, cut_ply: int) -> str:
    return " ".join(tm.move.uci for tm in game.moves[:cut_ply])


def choice_san(p: Position, m: Move) -> str:
    """SAN label used for checkmate-in-one choices: a mate is written with ``+``."""
    san = format_san(p, m)
    return san[:-1] + "+" if san.endswith("#") else san


# --- synthetic modeling data -----------------------------------------------------------


@lru_cache(maxsize=None)
def modeling_templates() -> Dict[str, List[Dict[str, str]]]:
    text = resources.files("chessbench").joinpath("data/modeling_templates.json").read_text("utf-8")
    templates = json.loads(text)
    missing = set(MODELING_TASKS) - set(templates)
    if missing:
        raise ValueError(f"template file lacks tasks {sorted(missing)}")
    return templates


def _fill(template: str, values: Mapping[str, str]) -> str:
    # str.format would choke on braces inside PGN comments, so substitute by hand.
    for key, value in values.items():
        template = template.replace("{" + key + "}", value)
    return template


def make_modeling(
    task: str,
    position: Position,
    move: Optional[Move] = None,
    game: Optional[GameRecord] = None,
    cut_ply: Optional[int] = None,
    template_id: int = 0,
) -> TaskInstance:
    """One modeling_synthetic instance.

    PGN/UCI tasks need ``game`` and ``cut_ply`` (``position`` must then be the
    cut position); move tasks need ``move`` legal in ``position``.
    """
    if task not in MODELING_TASKS:
        raise ValueError(f"unknown modeling task {task!r}")
    templates = modeling_templates()[task]
    tpl = templates[template_id]
    values = {"fen": format_fen(position)}
    if game is not None and cut_ply is not None:
        values["pgn"] = format_movetext(game, upto=cut_ply)
        values["uci"] = _uci_prefix(game, cut_ply)
    if move is not None:
        if not core.is_legal(position, move):
            raise core.IllegalMove(f"{move.uci} is not legal in {values['fen']}")
        values["uci"] = move.uci
        values["san"] = format_san(position, move)

    if task in ("pgn_to_fen", "uci_to_fen"):
        answer = values["fen"]
    elif task == "fen_uci_to_san":
        answer = values["san"]
    elif task == "fen_san_to_uci":
        answer = values["uci"]
    elif task == "fen_to_ascii":
        answer = ascii_board(position)
    elif task in ("fen_uci_to_next_fen", "fen_san_to_next_fen"):
        answer = format_fen(core.apply(position, move))
    elif task.endswith("legal_san"):
        answer = " ".join(format_san(position, m) for m in core.legal_moves(position))
    else:
        answer = " ".join(m.uci for m in core.legal_moves(position))

    question = _fill(tpl["question"], values)
    meta = {"task": task, "template_id": template_id, "fen": values["fen"]}
    if cut_ply is not None:
        meta["cut_ply"] = cut_ply
    return TaskInstance(
        task_kind="modeling_synthetic",
        prompt_prefix="",
        input=question,
        targets=[answer],
        metadata={**meta, "text": question + " " + _fill(tpl["answer"], {"answer": answer})},
    )


def _modeling_for_game(game: GameRecord, rng: random.Random, game_id: str) -> List[TaskInstance]:
    n = len(game.moves)
    if n < 4:
        return []
    positions = game.positions()
    cut = rng.randint(4, n)
    if not core.has_legal_moves(positions[cut]):
        cut -= 1  # move tasks need a move to play
    p = positions[cut]
    move = game.moves[cut].move if cut < n else core.legal_moves(p)[0]
    out = []
    templates = modeling_templates()
    for task in MODELING_TASKS:
        tid = rng.randrange(len(templates[task]))
        inst = make_modeling(task, p, move=move if task in MOVE_TASKS else None, game=game, cut_ply=cut, template_id=tid)
        inst.metadata["id"] = f"modeling-{game_id}-{task}"
        inst.metadata["game_id"] = game_id
        out.append(inst)
    return out


def gen_modeling(games: Iterable[GameRecord], seed: int = 0, start_index: int = 0) -> List[TaskInstance]:
    """Instances for all 11 modeling tasks per game (games shorter than 4 plies are skipped)."""
    out = []
    for i, g in enumerate(games, start=start_index):
        rng = random.Random(f"{seed}:modeling:{i}")
        out.extend(_modeling_for_game(g, rng, f"{i:07d}"))
    for inst in out:
        inst.metadata["seed"] = seed
    return out


# --- section-5 evaluation tasks ------------------------------------------------------------


def make_state_tracking(
    game: GameRecord, cut_ply: int, seed: int = 0, from_square: Optional[int] = None
) -> TaskInstance:
    """Prefix of ``cut_ply`` UCI moves plus the from-square of the next move.

    ``from_square`` overrides the square taken from the move at ``cut_ply``.
    """
    _check_cut(game, cut_ply)
    p = _positions(game, cut_ply)[-1]
    if from_square is None:
        if cut_ply >= len(game.moves):
            raise ValueError("no move at cut_ply")
        from_square = game.moves[cut_ply].move.from_square
    if p.piece_at(from_square) is None:
        raise ValueError(f"no piece on {core.square_name(from_square)}")
    dests = sorted({m.to_square for m in core.legal_moves(p) if m.from_square == from_square})
    if not dests:
        raise ValueError(f"piece on {core.square_name(from_square)} has no legal move")
    prefix = _uci_prefix(game, cut_ply)
    start = core.square_name(from_square)
    source = game_source(game)
    split = split_for_plies(cut_ply)
    return TaskInstance(
        task_kind="state_tracking",
        prompt_prefix=STATE_TRACKING_PROMPT,
        input=f"{prefix} {start}" if prefix else start,
        targets=[core.square_name(t) for t in dests],
        metadata={
            "split": split,
            "source": source,
            "report_split": report_split(source, split),
            "cut_ply": cut_ply,
            "fen": format_fen(p),
            "from_square": start,
            "seed": seed,
        },
    )


def make_fen_conversion(game: GameRecord, cut_ply: int, source: str = "pgn") -> TaskInstance:
    if source not in FEN_PROMPTS:
        raise ValueError(f"source must be 'uci' or 'pgn', not {source!r}")
    _check_cut(game, cut_ply)
    p = _positions(game, cut_ply)[-1]
    text = _uci_prefix(game, cut_ply) if source == "uci" else format_movetext(game, upto=cut_ply)
    split = split_for_plies(cut_ply)
    origin = game_source(game)
    return TaskInstance(
        task_kind=f"{source}_to_fen",
        prompt_prefix=FEN_PROMPTS[source],
        input=text,
        targets=[format_fen(p)],
        metadata={
            "split": split,
            "source": origin,
            "report_split": report_split(origin, split),
            "cut_ply": cut_ply,
            "fen": format_fen(p),
        },
    )


def state_value_bin(white_winrate: float) -> int:
    """0 = black advantage (0-33), 1 = equal (34-66), 2 = white advantage (67-100)."""
    if not 0.0 <= white_winrate <= 1.0:
        raise ValueError("winrate must lie in [0, 1]")
    pct = int(100 * white_winrate + 0.5)  # half-up; Python's round() is banker's
    return 0 if pct <= 33 else 1 if pct <= 66 else 2


def make_state_value(
    game: GameRecord, cut_ply: int, white_winrate: float, brace_suffix: bool = False
) -> TaskInstance:
    _check_cut(game, cut_ply)
    p = _positions(game, cut_ply)[-1]
    right = state_value_bin(white_winrate)
    return TaskInstance(
        task_kind="state_value",
        prompt_prefix=STATE_VALUE_PROMPT,
        input=format_movetext(game, upto=cut_ply),
        target_scores={c: 1.0 if i == right else 0.0 for i, c in enumerate(STATE_VALUE_CHOICES)},
        metadata={
            "cut_ply": cut_ply,
            "fen": format_fen(p),
            "white_winrate": white_winrate,
            "brace_suffix": brace_suffix,
            "report_split": "With { suffix" if brace_suffix else "W/O { suffix",
        },
    )


def make_annotation_mc(pairs: Sequence, i: int, seed: int = 0, brace_suffix: bool = False) -> TaskInstance:
    """Four-way choice between the true comment of ``pairs[i]`` and three others.

    ``pairs`` items need ``text`` and ``movetext`` attributes (AnnotationPair).
    """
    if len(pairs) < 4:
        raise ValueError("need at least 4 annotation pairs")
    true_text = pairs[i].text
    pool = []
    for j, pair in enumerate(pairs):
        if j != i and pair.text != true_text and pair.text not in pool:
            pool.append(pair.text)
    if len(pool) < 3:
        raise ValueError("fewer than 3 distinct distractor annotations")
    rng = random.Random(f"{seed}:annotation:{i}")
    choices = [true_text] + rng.sample(pool, 3)
    rng.shuffle(choices)
    meta = {"seed": seed, "brace_suffix": brace_suffix,
            "report_split": "With { suffix" if brace_suffix else "W/O { suffix"}
    if getattr(pairs[i], "game_id", ""):
        meta["game_id"] = pairs[i].game_id
    if getattr(pairs[i], "states", None):
        meta["fen"] = format_fen(pairs[i].states[-1])
    return TaskInstance(
        task_kind="annotation_mc",
        prompt_prefix=ANNOTATION_PROMPT,
        input=pairs[i].movetext,
        target_scores={c: 1.0 if c == true_text else 0.0 for c in choices},
        metadata=meta,
    )


@dataclass(frozen=True)
class Opening:
    eco: str
    name: str
    pgn: str


def read_openings(path) -> List[Opening]:
    """Tab-separated (eco, name, pgn) rows; a header row starting with 'eco' is skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) < 3 or parts[0].strip().lower() == "eco":
                continue
            out.append(Opening(parts[0].strip(), parts[1].strip(), parts[2].strip()))
    return out


def make_opening_mc(openings: Sequence, i: int, direction: str, seed: int = 0) -> TaskInstance:
    """Five-way opening name/PGN matching; ``openings`` holds Opening or (name, pgn) items."""
    items = [(o.name, o.pgn) if isinstance(o, Opening) else (o[0], o[1]) for o in openings]
    if len(items) < 5:
        raise ValueError("need at least 5 openings")
    if direction not in ("opening2pgn", "pgn2opening"):
        raise ValueError(f"bad direction {direction!r}")
    name, pgn = items[i]
    answer_of = (lambda it: it[1]) if direction == "opening2pgn" else (lambda it: it[0])
    answer = answer_of(items[i])
    pool = []
    for j, it in enumerate(items):
        a = answer_of(it)
        if j != i and a != answer and a not in pool:
            pool.append(a)
    if len(pool) < 4:
        raise ValueError("fewer than 4 distinct distractor openings")
    rng = random.Random(f"{seed}:{direction}:{i}")
    choices = [answer] + rng.sample(pool, 4)
    rng.shuffle(choices)
    if direction == "opening2pgn":
        prompt, text = OPENING2PGN_PROMPT, f"{name} Opening"
    else:
        prompt, text = PGN2OPENING_PROMPT, f"{pgn}. The opening name of this PGN is."
    return TaskInstance(
        task_kind=direction,
        prompt_prefix=prompt,
        input=text,
        target_scores={c: 1.0 if c == answer else 0.0 for c in choices},
        metadata={"seed": seed, "opening_index": i, "report_split": "all"},
    )


def mating_moves(p: Position) -> List[Move]:
    return [m for m in core.legal_moves(p) if core.is_checkmate(core.apply(p, m))]


def find_mate_plies(game: GameRecord) -> List[int]:
    """Cut plies whose position offers at least one mate in one."""
    out = []
    for ply, p in enumerate(game.positions()):
        if mating_moves(p):
            out.append(ply)
    return out


def _checkmate_instance(p: Position, text: str, variant: str, hint: bool, meta: dict) -> TaskInstance:
    if variant not in ("mc", "esm"):
        raise ValueError(f"variant must be 'mc' or 'esm', not {variant!r}")
    mates = mating_moves(p)
    if not mates:
        raise NoMateAvailable(f"no mate in one in {format_fen(p)}")
    if hint:
        text = text + " " + CHECKMATE_HINT.format(color="white" if p.turn == WHITE else "black")
    meta = {
        **meta,
        "fen": format_fen(p),
        "variant": variant,
        "hint": hint,
        "report_split": ("With suffix" if hint else "W/O suffix") + (" ESM" if variant == "esm" else " MC"),
    }
    if variant == "mc":
        mate_set = set(mates)
        scores = {choice_san(p, m): 1.0 if m in mate_set else 0.0 for m in core.legal_moves(p)}
        return TaskInstance("checkmate_in_one", CHECKMATE_PROMPT, text, target_scores=scores, metadata=meta)
    targets = []
    for m in mates:
        san = format_san(p, m)
        targets += [choice_san(p, m), san]
    return TaskInstance("checkmate_in_one", CHECKMATE_PROMPT, text, targets=targets, metadata=meta)


def make_checkmate_in_one(
    game: GameRecord, cut_ply: int, variant: str = "mc", hint: bool = False
) -> TaskInstance:
    _check_cut(game, cut_ply)
    p = _positions(game, cut_ply)[-1]
    text = format_movetext(game, upto=cut_ply)
    return _checkmate_instance(p, text, variant, hint, {"cut_ply": cut_ply})


def make_checkmate_from_fen(fen: str, variant: str = "mc", hint: bool = False) -> TaskInstance:
    """Puzzle route: the input is the FEN itself."""
    return _checkmate_instance(parse_fen(fen), fen, variant, hint, {"route": "puzzle"})


def general_policy_headers(white_elo: int, black_elo: int) -> List[Tuple[str, str]]:
    return [
        ("Date", "2017.04.01"),
        ("White", "???"),
        ("Black", "???"),
        ("Result", "0-1"),
        ("WhiteElo", str(white_elo)),
        ("BlackElo", str(black_elo)),
        ("WhiteRatingDiff", "??"),
        ("BlackRatingDiff", "??"),
        ("ECO", "??"),
        ("Opening", "??"),
        ("TimeControl", "300+0"),
        ("Termination", "Time forfeit"),
    ]


def rank_scores(moves: Sequence[Move], winrates: Mapping[Move, float]) -> Dict[Move, float]:
    """Score each move by the rank of its winrate, normalised to [0, 1]."""
    order = sorted(range(len(moves)), key=lambda k: winrates[moves[k]])  # stable: ties keep move order
    n = len(moves)
    if n == 1:
        return {moves[0]: 1.0}
    return {moves[k]: r / (n - 1) for r, k in enumerate(order)}


def make_general_policy(
    game: GameRecord,
    cut_ply: int,
    move_winrates: Mapping[Move, float],
    elo_band: EloBand,
    color: Optional[str] = None,
    seed: int = 0,
) -> TaskInstance:
    _check_cut(game, cut_ply)
    p = _positions(game, cut_ply)[-1]
    side = "white" if p.turn == WHITE else "black"
    if color is not None and color != side:
        raise ValueError(f"{color} is not to move at ply {cut_ply}")
    legal = core.legal_moves(p)
    if not legal:
        raise ValueError("no legal moves at cut_ply")
    if set(move_winrates) != set(legal):
        raise ValueError("move_winrates must cover exactly the legal moves")
    rng = random.Random(f"{seed}:policy:{cut_ply}:{format_fen(p)}")
    white_elo = rng.randrange(elo_band.lo, elo_band.hi)
    black_elo = rng.randrange(elo_band.lo, elo_band.hi)
    header_lines = "\n".join(f'[{k} "{v}"]' for k, v in general_policy_headers(white_elo, black_elo))
    scores = rank_scores(legal, move_winrates)
    ordered = sorted(legal, key=lambda m: scores[m])
    return TaskInstance(
        task_kind="general_policy",
        prompt_prefix=f"In the following chess game, you play {side}.",
        input=header_lines + "\n" + format_movetext(game, upto=cut_ply),
        target_scores={format_san(p, m): scores[m] for m in ordered},
        metadata={
            "cut_ply": cut_ply,
            "fen": format_fen(p),
            "elo_band": str(elo_band),
            "white_elo": white_elo,
            "black_elo": black_elo,
            "color": side,
            "seed": seed,
            "report_split": str(elo_band),
        },
    )


def gen_random_game(seed, max_plies: int = 120) -> GameRecord:
    """Uniform random legal play from the start position."""
    if max_plies < 2:
        raise ValueError("max_plies must be >= 2")
    rng = random.Random(seed)
    p = core.startpos()
    history = [p]
    moves = []
    result = Result.UNKNOWN
    while len(moves) < max_plies:
        legal = core.legal_moves(p)
        if not legal:
            break
        m = rng.choice(legal)
        moves.append(m)
        p = core.apply(p, m)
        history.append(p)
        o = core.outcome(p, history[:-1])
        if o.status != core.Status.ONGOING:
            break
    o = core.outcome(p, history[:-1])
    if o.status == core.Status.CHECKMATE:
        result = Result.WHITE_WIN if o.winner == WHITE else Result.BLACK_WIN
    elif o.status != core.Status.ONGOING:
        result = Result.DRAW
    headers = [
        ("Event", "Random game"),
        ("Site", "?"),
        ("Result", result.value),
        ("Source", "synthetic"),
        ("Seed", str(seed)),
    ]
    return game_from_moves(moves, headers=headers, result=result)
