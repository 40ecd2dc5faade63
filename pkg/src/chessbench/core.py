"""Chess rules: positions, legal move generation, move application, outcomes.

Squares are integers 0..63 with a1=0, b1=1, ..., h8=63. Positions are immutable
tuples of bitboards; every operation returns a new value.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

FILE_NAMES = "abcdefgh"
RANK_NAMES = "12345678"
SQUARE_NAMES = [f + r for r in RANK_NAMES for f in FILE_NAMES]
_SQUARE_INDEX = {name: i for i, name in enumerate(SQUARE_NAMES)}

STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

FULL = (1 << 64) - 1


class Color(enum.IntEnum):
    WHITE = 0
    BLACK = 1

    @property
    def other(self) -> "Color":
        return Color(1 - self)


WHITE = Color.WHITE
BLACK = Color.BLACK


class PieceKind(enum.IntEnum):
    PAWN = 1
    KNIGHT = 2
    BISHOP = 3
    ROOK = 4
    QUEEN = 5
    KING = 6

    @property
    def letter(self) -> str:
        return "pnbrqk"[self - 1]


PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = (
    PieceKind.PAWN,
    PieceKind.KNIGHT,
    PieceKind.BISHOP,
    PieceKind.ROOK,
    PieceKind.QUEEN,
    PieceKind.KING,
)
PROMOTION_KINDS = (KNIGHT, BISHOP, ROOK, QUEEN)


class Piece(NamedTuple):
    color: Color
    kind: PieceKind

    @property
    def symbol(self) -> str:
        letter = self.kind.letter
        return letter.upper() if self.color == WHITE else letter

    @classmethod
    def from_symbol(cls, symbol: str) -> "Piece":
        kind = PieceKind("pnbrqk".index(symbol.lower()) + 1)
        return cls(WHITE if symbol.isupper() else BLACK, kind)


def square(file: int, rank: int) -> int:
    return rank * 8 + file


def square_file(sq: int) -> int:
    return sq & 7


def square_rank(sq: int) -> int:
    return sq >> 3


def square_name(sq: int) -> str:
    return SQUARE_NAMES[sq]


def parse_square(name: str) -> int:
    try:
        return _SQUARE_INDEX[name]
    except KeyError:
        raise ValueError(f"invalid square name: {name!r}") from None


class IllegalMove(ValueError):
    pass


class InvalidPosition(ValueError):
    pass


@functools.total_ordering
@dataclass(frozen=True)
class Move:
    from_square: int
    to_square: int
    promotion: Optional[PieceKind] = None

    def _sort_key(self) -> Tuple[int, int, int]:
        return (self.from_square, self.to_square, self.promotion or 0)

    def __lt__(self, other: "Move") -> bool:
        if not isinstance(other, Move):
            return NotImplemented
        return self._sort_key() < other._sort_key()

    @property
    def uci(self) -> str:
        s = SQUARE_NAMES[self.from_square] + SQUARE_NAMES[self.to_square]
        if self.promotion:
            s += PieceKind(self.promotion).letter
        return s

    def __str__(self) -> str:
        return self.uci


# --- precomputed attack tables ---------------------------------------------


def _bb(sq: int) -> int:
    return 1 << sq


def _step_targets(deltas: Sequence[Tuple[int, int]]) -> List[int]:
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        bb = 0
        for df, dr in deltas:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                bb |= 1 << (nr * 8 + nf)
        table.append(bb)
    return table


KNIGHT_DELTAS = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
KING_DELTAS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
ROOK_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))
BISHOP_DIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

KNIGHT_ATTACKS = _step_targets(KNIGHT_DELTAS)
KING_ATTACKS = _step_targets(KING_DELTAS)
# PAWN_ATTACKS[color][sq]: squares a pawn of `color` on sq attacks
PAWN_ATTACKS = (_step_targets(((-1, 1), (1, 1))), _step_targets(((-1, -1), (1, -1))))


def _ray_attacks(sq: int, occ: int, dirs: Iterable[Tuple[int, int]]) -> int:
    f0, r0 = sq & 7, sq >> 3
    bb = 0
    for df, dr in dirs:
        f, r = f0 + df, r0 + dr
        while 0 <= f < 8 and 0 <= r < 8:
            s = 1 << (r * 8 + f)
            bb |= s
            if occ & s:
                break
            f += df
            r += dr
    return bb


def _inner_mask(sq: int, dirs: Iterable[Tuple[int, int]]) -> int:
    # squares whose occupancy can change the attack set: the ray minus its last square
    f0, r0 = sq & 7, sq >> 3
    bb = 0
    for df, dr in dirs:
        f, r = f0 + df, r0 + dr
        while 0 <= f + df < 8 and 0 <= r + dr < 8:
            bb |= 1 << (r * 8 + f)
            f += df
            r += dr
    return bb


def _subsets(mask: int):
    sub = 0
    while True:
        yield sub
        sub = (sub - mask) & mask
        if sub == 0:
            return


def _slider_tables(dirs):
    masks, tables = [], []
    for sq in range(64):
        mask = _inner_mask(sq, dirs)
        masks.append(mask)
        tables.append({sub: _ray_attacks(sq, sub, dirs) for sub in _subsets(mask)})
    return masks, tables


DIAG_MASKS, DIAG_ATTACKS = _slider_tables(BISHOP_DIRS)
FILE_MASKS, FILE_ATTACKS = _slider_tables(((0, 1), (0, -1)))
RANK_MASKS, RANK_ATTACKS = _slider_tables(((1, 0), (-1, 0)))

BISHOP_EMPTY = [DIAG_ATTACKS[sq][0] for sq in range(64)]
ROOK_EMPTY = [FILE_ATTACKS[sq][0] | RANK_ATTACKS[sq][0] for sq in range(64)]


def bishop_attacks(sq: int, occ: int) -> int:
    return DIAG_ATTACKS[sq][DIAG_MASKS[sq] & occ]


def rook_attacks(sq: int, occ: int) -> int:
    return FILE_ATTACKS[sq][FILE_MASKS[sq] & occ] | RANK_ATTACKS[sq][RANK_MASKS[sq] & occ]


def _line_tables():
    between = [[0] * 64 for _ in range(64)]
    line = [[0] * 64 for _ in range(64)]
    for a in range(64):
        for b in range(64):
            if a == b:
                continue
            for dirs, empty in ((ROOK_DIRS, ROOK_EMPTY), (BISHOP_DIRS, BISHOP_EMPTY)):
                if empty[a] & (1 << b):
                    line[a][b] = (_ray_attacks(a, 0, dirs) & _ray_attacks(b, 0, dirs)) | (1 << a) | (1 << b)
                    between[a][b] = _ray_attacks(a, 1 << b, dirs) & _ray_attacks(b, 1 << a, dirs)
    return between, line


BETWEEN, LINE = _line_tables()

# castling bits
WK_CASTLE, WQ_CASTLE, BK_CASTLE, BQ_CASTLE = 1, 2, 4, 8
_CASTLE_KEEP = [15] * 64
for _sq, _bits in ((4, 3), (7, 1), (0, 2), (60, 12), (63, 4), (56, 8)):
    _CASTLE_KEEP[_sq] &= ~_bits & 15

RANK_1, RANK_8 = 0xFF, 0xFF << 56
RANK_2, RANK_7 = 0xFF << 8, 0xFF << 48
RANK_3, RANK_6 = 0xFF << 16, 0xFF << 40
DARK_SQUARES = 0xAA55AA55AA55AA55


def lsb(bb: int) -> int:
    return (bb & -bb).bit_length() - 1


def popcount(bb: int) -> int:
    return bin(bb).count("1")


def iter_squares(bb: int):
    while bb:
        low = bb & -bb
        yield low.bit_length() - 1
        bb ^= low


# --- position ----------------------------------------------------------------


class Position(NamedTuple):
    """Complete game state.

    The first six fields are bitboards per piece kind (both colors), then
    occupancy per color. ``castling`` is a KQkq bitmask, ``ep`` the en-passant
    target square or None.
    """

    pawns: int
    knights: int
    bishops: int
    rooks: int
    queens: int
    kings: int
    white: int
    black: int
    turn: int
    castling: int
    ep: Optional[int]
    halfmove_clock: int
    fullmove_number: int

    @property
    def side_to_move(self) -> Color:
        return Color(self.turn)

    @property
    def en_passant(self) -> Optional[int]:
        return self.ep

    @property
    def castling_rights(self) -> Tuple[bool, bool, bool, bool]:
        c = self.castling
        return (bool(c & WK_CASTLE), bool(c & WQ_CASTLE), bool(c & BK_CASTLE), bool(c & BQ_CASTLE))

    def occupied_by(self, color: int) -> int:
        return self[6 + color]

    @property
    def occupied(self) -> int:
        return self.white | self.black

    def pieces(self, kind: int, color: int) -> int:
        return self[kind - 1] & self[6 + color]

    def piece_at(self, sq: int) -> Optional[Piece]:
        bit = 1 << sq
        if not (self.white | self.black) & bit:
            return None
        color = WHITE if self.white & bit else BLACK
        for kind in range(6):
            if self[kind] & bit:
                return Piece(color, PieceKind(kind + 1))
        return None  # pragma: no cover

    @property
    def placement(self) -> Dict[int, Piece]:
        return {sq: self.piece_at(sq) for sq in iter_squares(self.white | self.black)}

    def key(self) -> tuple:
        """Identity used for repetition detection (ignores the move counters)."""
        return self[:11]

    def king_square(self, color: int) -> int:
        return lsb(self.kings & self[6 + color])


def from_placement(
    placement: Dict[int, Piece],
    side_to_move: int = WHITE,
    castling: int = 0,
    ep: Optional[int] = None,
    halfmove_clock: int = 0,
    fullmove_number: int = 1,
) -> Position:
    bbs = [0] * 8
    for sq, piece in placement.items():
        bbs[piece.kind - 1] |= 1 << sq
        bbs[6 + piece.color] |= 1 << sq
    return Position(*bbs, int(side_to_move), castling, ep, halfmove_clock, fullmove_number)


def startpos() -> Position:
    return Position(
        pawns=RANK_2 | RANK_7,
        knights=0x42 | (0x42 << 56),
        bishops=0x24 | (0x24 << 56),
        rooks=0x81 | (0x81 << 56),
        queens=0x08 | (0x08 << 56),
        kings=0x10 | (0x10 << 56),
        white=0xFFFF,
        black=0xFFFF << 48,
        turn=WHITE,
        castling=15,
        ep=None,
        halfmove_clock=0,
        fullmove_number=1,
    )


def attackers(p: Position, color: int, sq: int, occ: Optional[int] = None) -> int:
    """Pieces of `color` attacking `sq` given occupancy `occ`."""
    if occ is None:
        occ = p.white | p.black
    side = p[6 + color]
    queens = p.queens
    return side & (
        (KNIGHT_ATTACKS[sq] & p.knights)
        | (KING_ATTACKS[sq] & p.kings)
        | (PAWN_ATTACKS[1 - color][sq] & p.pawns)
        | (DIAG_ATTACKS[sq][DIAG_MASKS[sq] & occ] & (p.bishops | queens))
        | ((FILE_ATTACKS[sq][FILE_MASKS[sq] & occ] | RANK_ATTACKS[sq][RANK_MASKS[sq] & occ]) & (p.rooks | queens))
    )


def is_check(p: Position) -> bool:
    own = p[6 + p.turn]
    king = p.kings & own
    if not king:
        return False
    return bool(attackers(p, 1 - p.turn, lsb(king)))


def validate(p: Position) -> None:
    """Raise InvalidPosition unless all position invariants hold."""
    for color in (WHITE, BLACK):
        n = popcount(p.kings & p[6 + color])
        if n != 1:
            raise InvalidPosition(f"{color.name.lower()} has {n} kings")
        if popcount(p[6 + color]) > 16:
            raise InvalidPosition(f"{color.name.lower()} has more than 16 pieces")
        if popcount(p.pawns & p[6 + color]) > 8:
            raise InvalidPosition(f"{color.name.lower()} has more than 8 pawns")
    if p.white & p.black:
        raise InvalidPosition("overlapping colors")
    union = 0
    total = 0
    for bb in p[:6]:
        union |= bb
        total += popcount(bb)
    if union != (p.white | p.black) or total != popcount(union):
        raise InvalidPosition("inconsistent bitboards")
    if p.pawns & (RANK_1 | RANK_8):
        raise InvalidPosition("pawn on back rank")
    if p.ep is not None:
        ep = p.ep
        if p.turn == WHITE:
            ok = ep >> 3 == 5 and p.pawns & p.black & (1 << (ep - 8)) and not p.occupied & (1 << ep | 1 << (ep + 8))
        else:
            ok = ep >> 3 == 2 and p.pawns & p.white & (1 << (ep + 8)) and not p.occupied & (1 << ep | 1 << (ep - 8))
        if not ok:
            raise InvalidPosition(f"invalid en-passant square {square_name(ep)}")
    c = p.castling
    for bit, king_sq, rook_sq, color in (
        (WK_CASTLE, 4, 7, WHITE),
        (WQ_CASTLE, 4, 0, WHITE),
        (BK_CASTLE, 60, 63, BLACK),
        (BQ_CASTLE, 60, 56, BLACK),
    ):
        if c & bit:
            own = p[6 + color]
            if not (p.kings & own & (1 << king_sq) and p.rooks & own & (1 << rook_sq)):
                raise InvalidPosition("castling rights inconsistent with king/rook placement")
    if not 0 <= p.halfmove_clock <= 150:
        raise InvalidPosition("halfmove clock out of range")
    if p.fullmove_number < 1:
        raise InvalidPosition("fullmove number must be positive")
    them = 1 - p.turn
    if attackers(p, p.turn, p.king_square(them)):
        raise InvalidPosition("side not to move is in check")


# --- move generation -----------------------------------------------------------
# Internal move codes: (from << 9) | (to << 3) | promotion. Ascending integer order
# is the public move order (from-square, to-square, promotion kind).


def _slider_pins(p: Position, us: int, ksq: int, occ: int) -> Dict[int, int]:
    them_bb = p[7 - us]
    snipers = them_bb & (
        (ROOK_EMPTY[ksq] & (p.rooks | p.queens)) | (BISHOP_EMPTY[ksq] & (p.bishops | p.queens))
    )
    own = p[6 + us]
    pins = {}
    while snipers:
        low = snipers & -snipers
        snipers ^= low
        s = low.bit_length() - 1
        b = BETWEEN[ksq][s] & occ
        if b and not b & (b - 1) and b & own:
            pins[b.bit_length() - 1] = LINE[ksq][s]
    return pins


def _legal_codes(p: Position) -> List[int]:
    us = p.turn
    them = 1 - us
    own = p[6 + us]
    opp = p[6 + them]
    occ = own | opp
    kbb = p.kings & own
    ksq = kbb.bit_length() - 1
    checkers = attackers(p, them, ksq, occ)
    codes: List[int] = []
    append = codes.append

    # king steps
    occ_noking = occ ^ kbb
    for t in iter_squares(KING_ATTACKS[ksq] & ~own):
        if not attackers(p, them, t, occ_noking):
            append((ksq << 9) | (t << 3))
    if checkers & (checkers - 1):
        return codes

    if checkers:
        csq = checkers.bit_length() - 1
        target = BETWEEN[ksq][csq] | checkers
    else:
        target = ~own & FULL
        # castling
        c = p.castling
        if us == WHITE:
            if c & WK_CASTLE and not occ & 0x60 and not attackers(p, them, 5, occ) and not attackers(p, them, 6, occ):
                append((4 << 9) | (6 << 3))
            if c & WQ_CASTLE and not occ & 0x0E and not attackers(p, them, 3, occ) and not attackers(p, them, 2, occ):
                append((4 << 9) | (2 << 3))
        else:
            if c & BK_CASTLE and not occ & (0x60 << 56) and not attackers(p, them, 61, occ) and not attackers(p, them, 62, occ):
                append((60 << 9) | (62 << 3))
            if c & BQ_CASTLE and not occ & (0x0E << 56) and not attackers(p, them, 59, occ) and not attackers(p, them, 58, occ):
                append((60 << 9) | (58 << 3))

    pins = _slider_pins(p, us, ksq, occ)

    queens = p.queens & own
    for bb, kind in ((p.knights & own, 2), (p.bishops & own, 3), (p.rooks & own, 4), (queens, 5)):
        while bb:
            low = bb & -bb
            bb ^= low
            f = low.bit_length() - 1
            if kind == 2:
                if f in pins:
                    continue
                moves = KNIGHT_ATTACKS[f]
            elif kind == 3:
                moves = DIAG_ATTACKS[f][DIAG_MASKS[f] & occ]
            elif kind == 4:
                moves = FILE_ATTACKS[f][FILE_MASKS[f] & occ] | RANK_ATTACKS[f][RANK_MASKS[f] & occ]
            else:
                moves = (
                    DIAG_ATTACKS[f][DIAG_MASKS[f] & occ]
                    | FILE_ATTACKS[f][FILE_MASKS[f] & occ]
                    | RANK_ATTACKS[f][RANK_MASKS[f] & occ]
                )
            moves &= target
            if f in pins:
                moves &= pins[f]
            fc = f << 9
            while moves:
                lt = moves & -moves
                moves ^= lt
                append(fc | ((lt.bit_length() - 1) << 3))

    # pawns
    pawns = p.pawns & own
    empty = ~occ & FULL
    if us == WHITE:
        push_dir, start_rank, promo_rank = 8, RANK_2, RANK_8
    else:
        push_dir, start_rank, promo_rank = -8, RANK_7, RANK_1
    while pawns:
        low = pawns & -pawns
        pawns ^= low
        f = low.bit_length() - 1
        t1 = f + push_dir
        moves = PAWN_ATTACKS[us][f] & opp
        if empty & (1 << t1):
            moves |= 1 << t1
            if low & start_rank and empty & (1 << (t1 + push_dir)):
                moves |= 1 << (t1 + push_dir)
        moves &= target
        if f in pins:
            moves &= pins[f]
        fc = f << 9
        while moves:
            lt = moves & -moves
            moves ^= lt
            t = lt.bit_length() - 1
            if lt & promo_rank:
                base = fc | (t << 3)
                codes.extend((base | 2, base | 3, base | 4, base | 5))
            else:
                append(fc | (t << 3))

    # en passant, verified by simulation
    ep = p.ep
    if ep is not None:
        cap_sq = ep - push_dir
        for f in iter_squares(PAWN_ATTACKS[them][ep] & p.pawns & own):
            occ2 = (occ ^ (1 << f) ^ (1 << cap_sq)) | (1 << ep)
            opp2 = opp ^ (1 << cap_sq)
            q = p.queens
            hit = opp2 & (
                (KNIGHT_ATTACKS[ksq] & p.knights)
                | (PAWN_ATTACKS[us][ksq] & p.pawns)
                | (DIAG_ATTACKS[ksq][DIAG_MASKS[ksq] & occ2] & (p.bishops | q))
                | ((FILE_ATTACKS[ksq][FILE_MASKS[ksq] & occ2] | RANK_ATTACKS[ksq][RANK_MASKS[ksq] & occ2]) & (p.rooks | q))
            )
            if not hit:
                append((f << 9) | (ep << 3))
    return codes


def _kind_at(p: Position, bit: int) -> int:
    if p.pawns & bit:
        return 1
    if p.knights & bit:
        return 2
    if p.bishops & bit:
        return 3
    if p.rooks & bit:
        return 4
    if p.queens & bit:
        return 5
    return 6


def _apply_code(p: Position, code: int) -> Position:
    f = code >> 9
    t = (code >> 3) & 63
    promo = code & 7
    fb = 1 << f
    tb = 1 << t
    us = p.turn
    b = list(p)
    kind = _kind_at(p, fb)
    reset = kind == 1
    opp_i = 7 - us
    if b[opp_i] & tb:
        b[_kind_at(p, tb) - 1] ^= tb
        b[opp_i] ^= tb
        reset = True
    b[6 + us] ^= fb | tb
    if promo:
        b[0] ^= fb
        b[promo - 1] |= tb
    else:
        b[kind - 1] ^= fb | tb
    ep = None
    if kind == 1:
        if t == p.ep:
            cap = t - 8 if us == WHITE else t + 8
            cb = 1 << cap
            b[0] ^= cb
            b[opp_i] ^= cb
        elif t - f == 16 or f - t == 16:
            ep = (f + t) >> 1
    elif kind == 6 and (t - f == 2 or f - t == 2):
        if t > f:
            rf, rt = f + 3, f + 1
        else:
            rf, rt = f - 4, f - 1
        rb = (1 << rf) | (1 << rt)
        b[3] ^= rb
        b[6 + us] ^= rb
    b[8] = 1 - us
    b[9] = p.castling & _CASTLE_KEEP[f] & _CASTLE_KEEP[t]
    b[10] = ep
    b[11] = 0 if reset else p.halfmove_clock + 1
    b[12] = p.fullmove_number + (1 if us == BLACK else 0)
    return tuple.__new__(Position, b)


def encode_move_code(m: Move) -> int:
    return (m.from_square << 9) | (m.to_square << 3) | (int(m.promotion) if m.promotion else 0)


def decode_move_code(code: int) -> Move:
    promo = code & 7
    return Move(code >> 9, (code >> 3) & 63, PieceKind(promo) if promo else None)


def legal_moves(p: Position) -> List[Move]:
    """All legal moves, ordered by from-square, to-square, promotion kind."""
    codes = _legal_codes(p)
    codes.sort()
    return [decode_move_code(c) for c in codes]


def is_legal(p: Position, m: Move) -> bool:
    return encode_move_code(m) in _legal_codes(p)


def apply(p: Position, m: Move) -> Position:
    code = encode_move_code(m)
    if code not in _legal_codes(p):
        raise IllegalMove(f"illegal move {m.uci} in position")
    return _apply_code(p, code)


def has_legal_moves(p: Position) -> bool:
    return bool(_legal_codes(p))


def is_checkmate(p: Position) -> bool:
    return is_check(p) and not _legal_codes(p)


def is_stalemate(p: Position) -> bool:
    return not is_check(p) and not _legal_codes(p)


class Status(str, enum.Enum):
    ONGOING = "ongoing"
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    DRAW_FIFTY_MOVE = "draw_fifty_move"
    DRAW_INSUFFICIENT_MATERIAL = "draw_insufficient_material"
    DRAW_REPETITION = "draw_repetition"


@dataclass(frozen=True)
class Outcome:
    status: Status
    winner: Optional[Color] = None


def is_insufficient_material(p: Position) -> bool:
    if p.pawns or p.rooks or p.queens:
        return False
    minors = p.knights | p.bishops
    n = popcount(minors)
    if n == 0:
        return True
    if n == 1:
        return True
    if n == 2 and not p.knights and popcount(p.bishops & p.white) == 1:
        # one bishop each, same square color
        b = p.bishops
        return b & DARK_SQUARES in (0, b)
    return False


def outcome(p: Position, history: Sequence[Position] = ()) -> Outcome:
    """Game state after folding in draw rules; history holds prior positions."""
    moves = _legal_codes(p)
    if not moves:
        if is_check(p):
            return Outcome(Status.CHECKMATE, Color(1 - p.turn))
        return Outcome(Status.STALEMATE)
    if is_insufficient_material(p):
        return Outcome(Status.DRAW_INSUFFICIENT_MATERIAL)
    if p.halfmove_clock >= 100:
        return Outcome(Status.DRAW_FIFTY_MOVE)
    key = p.key()
    if sum(1 for h in history if h.key() == key) >= 2:
        return Outcome(Status.DRAW_REPETITION)
    return Outcome(Status.ONGOING)


def perft(p: Position, depth: int) -> int:
    """Leaf count of the legal move tree at exactly `depth` plies."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth == 0:
        return 1
    return _perft(p, depth, {})


def _perft(p: Position, depth: int, cache: dict) -> int:
    k = (p[:11], depth)
    hit = cache.get(k)
    if hit is not None:
        return hit
    codes = _legal_codes(p)
    if depth == 1:
        n = len(codes)
    else:
        n = 0
        for c in codes:
            n += _perft(_apply_code(p, c), depth - 1, cache)
    cache[k] = n
    return n


def perft_uncached(p: Position, depth: int) -> int:
    if depth == 0:
        return 1
    codes = _legal_codes(p)
    if depth == 1:
        return len(codes)
    return sum(perft_uncached(_apply_code(p, c), depth - 1) for c in codes)


def mirror(p: Position) -> Position:
    """Flip the board vertically and swap colors; the side to move flips too."""

    def flip(bb: int) -> int:
        return int.from_bytes(bb.to_bytes(8, "little"), "big")

    c = p.castling
    castling = ((c & 3) << 2) | ((c >> 2) & 3)
    return Position(
        *(flip(bb) for bb in p[:6]),
        flip(p.black),
        flip(p.white),
        1 - p.turn,
        castling,
        None if p.ep is None else p.ep ^ 56,
        p.halfmove_clock,
        p.fullmove_number,
    )
