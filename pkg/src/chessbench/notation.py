"""FEN, SAN, UCI and PGN reading and writing."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import core
from .core import (
    BLACK,
    KING,
    PAWN,
    WHITE,
    IllegalMove,
    InvalidPosition,
    Move,
    Piece,
    PieceKind,
    Position,
    SQUARE_NAMES,
    parse_square,
)

log = logging.getLogger(__name__)


class FenError(ValueError):
    def __init__(self, message: str, field: str, offset: int):
        super().__init__(f"{message} (field {field}, offset {offset})")
        self.field = field
        self.offset = offset


class SanError(ValueError):
    pass


class UciError(ValueError):
    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (token {index})")
        self.index = index


class PgnError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# --- FEN -----------------------------------------------------------------------

_FEN_FIELDS = ("placement", "side_to_move", "castling", "en_passant", "halfmove_clock", "fullmove_number")


def parse_fen(text: str) -> Position:
    parts = text.strip().split(" ")
    offsets = []
    pos = len(text) - len(text.lstrip())
    for part in parts:
        offsets.append(pos)
        pos += len(part) + 1
    if len(parts) != 6 or any(not part for part in parts):
        raise FenError(f"expected 6 space-separated fields, got {len(parts)}", "placement", 0)
    placement_text, side, castling_text, ep_text, half_text, full_text = parts

    placement = {}
    ranks = placement_text.split("/")
    if len(ranks) != 8:
        raise FenError(f"expected 8 ranks, got {len(ranks)}", "placement", offsets[0])
    offset = offsets[0]
    for i, rank_text in enumerate(ranks):
        rank = 7 - i
        file = 0
        prev_digit = False
        for ch in rank_text:
            if ch.isdigit():
                if prev_digit or ch in "09":
                    raise FenError(f"bad empty-square count {ch!r}", "placement", offset)
                file += int(ch)
                prev_digit = True
            elif ch in "pnbrqkPNBRQK":
                if file > 7:
                    raise FenError("rank overflow", "placement", offset)
                placement[core.square(file, rank)] = Piece.from_symbol(ch)
                file += 1
                prev_digit = False
            else:
                raise FenError(f"unexpected character {ch!r}", "placement", offset)
            if file > 8:
                raise FenError("rank overflow", "placement", offset)
            offset += 1
        if file != 8:
            raise FenError(f"rank {rank + 1} has {file} squares", "placement", offset)
        offset += 1

    if side not in ("w", "b"):
        raise FenError(f"side to move must be 'w' or 'b', got {side!r}", "side_to_move", offsets[1])

    castling = 0
    if castling_text != "-":
        for j, ch in enumerate(castling_text):
            bit = {"K": 1, "Q": 2, "k": 4, "q": 8}.get(ch)
            if bit is None or castling & bit:
                raise FenError(f"bad castling flag {ch!r}", "castling", offsets[2] + j)
            castling |= bit

    ep = None
    if ep_text != "-":
        try:
            ep = parse_square(ep_text)
        except ValueError:
            raise FenError(f"bad en-passant square {ep_text!r}", "en_passant", offsets[3]) from None

    counters = []
    for name, value, off in ((_FEN_FIELDS[4], half_text, offsets[4]), (_FEN_FIELDS[5], full_text, offsets[5])):
        if not value.isdigit():
            raise FenError(f"bad counter {value!r}", name, off)
        counters.append(int(value))

    p = core.from_placement(placement, WHITE if side == "w" else BLACK, castling, ep, counters[0], counters[1])
    try:
        core.validate(p)
    except InvalidPosition as exc:
        msg = str(exc)
        if "en-passant" in msg:
            where = ("en_passant", offsets[3])
        elif "castling" in msg:
            where = ("castling", offsets[2])
        elif "halfmove" in msg:
            where = ("halfmove_clock", offsets[4])
        elif "fullmove" in msg:
            where = ("fullmove_number", offsets[5])
        else:
            where = ("placement", offsets[0])
        raise FenError(msg, *where) from None
    return p


def board_fen(p: Position) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row = ""
        empty = 0
        for file in range(8):
            piece = p.piece_at(rank * 8 + file)
            if piece is None:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            row += piece.symbol
        if empty:
            row += str(empty)
        rows.append(row)
    return "/".join(rows)


def format_fen(p: Position) -> str:
    castling = "".join(ch for ch, bit in zip("KQkq", (1, 2, 4, 8)) if p.castling & bit) or "-"
    ep = "-" if p.ep is None else SQUARE_NAMES[p.ep]
    side = "w" if p.turn == WHITE else "b"
    return f"{board_fen(p)} {side} {castling} {ep} {p.halfmove_clock} {p.fullmove_number}"


def ascii_board(p: Position) -> str:
    lines = []
    for rank in range(7, -1, -1):
        cells = []
        for file in range(8):
            piece = p.piece_at(rank * 8 + file)
            cells.append(piece.symbol if piece else ".")
        lines.append(" ".join(cells))
    return "\n".join(lines)


# --- SAN -----------------------------------------------------------------------

_SAN_RE = re.compile(r"^([NBRQK])?([a-h])?([1-8])?(x)?([a-h][1-8])(?:=?([NBRQnbrq]))?$")
_PIECE_LETTERS = {"N": 2, "B": 3, "R": 4, "Q": 5, "K": 6}


def format_san(p: Position, m: Move) -> str:
    codes = core._legal_codes(p)
    code = core.encode_move_code(m)
    if code not in codes:
        raise SanError(f"illegal move {m.uci}")
    san = _san_body(p, m, codes)
    after = core._apply_code(p, code)
    if core.is_check(after):
        san += "#" if not core._legal_codes(after) else "+"
    return san


def _san_body(p: Position, m: Move, codes: Sequence[int]) -> str:
    f, t = m.from_square, m.to_square
    kind = core._kind_at(p, 1 << f)
    if kind == KING and abs(t - f) == 2:
        return "O-O" if t > f else "O-O-O"
    capture = bool(p.occupied & (1 << t)) or (kind == PAWN and t == p.ep)
    to_name = SQUARE_NAMES[t]
    if kind == PAWN:
        san = (SQUARE_NAMES[f][0] + "x" if capture else "") + to_name
        if m.promotion:
            san += "=" + PieceKind(m.promotion).letter.upper()
        return san
    rivals = []
    for c in codes:
        of = c >> 9
        if of != f and (c >> 3) & 63 == t and core._kind_at(p, 1 << of) == kind:
            rivals.append(of)
    disamb = ""
    if rivals:
        same_file = any(r & 7 == f & 7 for r in rivals)
        same_rank = any(r >> 3 == f >> 3 for r in rivals)
        if not same_file:
            disamb = SQUARE_NAMES[f][0]
        elif not same_rank:
            disamb = SQUARE_NAMES[f][1]
        else:
            disamb = SQUARE_NAMES[f]
    return PieceKind(kind).letter.upper() + disamb + ("x" if capture else "") + to_name


def parse_san(p: Position, text: str) -> Move:
    san = text.strip()
    san = san.rstrip("!?")
    san = san.rstrip("+#")
    codes = core._legal_codes(p)
    if san in ("O-O", "0-0", "O-O-O", "0-0-0"):
        f = p.king_square(p.turn)
        t = f + (2 if san in ("O-O", "0-0") else -2)
        code = (f << 9) | (t << 3)
        if code not in codes or core._kind_at(p, 1 << f) != KING:
            raise SanError(f"illegal castling {text!r}")
        return core.decode_move_code(code)
    match = _SAN_RE.match(san)
    if not match:
        raise SanError(f"unparseable SAN {text!r}")
    letter, from_file, from_rank, _capture, to_text, promo = match.groups()
    kind = _PIECE_LETTERS[letter] if letter else PAWN
    t = parse_square(to_text)
    promotion = _PIECE_LETTERS[promo.upper()] if promo else 0
    candidates = []
    for c in codes:
        if (c >> 3) & 63 != t:
            continue
        f = c >> 9
        if core._kind_at(p, 1 << f) != kind:
            continue
        if from_file and "abcdefgh".index(from_file) != f & 7:
            continue
        if from_rank and int(from_rank) - 1 != f >> 3:
            continue
        if (c & 7) != promotion:
            continue
        candidates.append(c)
    if not candidates:
        raise SanError(f"illegal SAN {text!r}")
    if len(candidates) > 1:
        raise SanError(f"ambiguous SAN {text!r}")
    return core.decode_move_code(candidates[0])


# --- UCI move text -----------------------------------------------------------------

_UCI_RE = re.compile(r"^([a-h][1-8])([a-h][1-8])([nbrq])?$")


def parse_uci_move(text: str, index: int = 0) -> Move:
    match = _UCI_RE.match(text.strip())
    if not match:
        raise UciError(f"malformed UCI move {text!r}", index)
    promo = match.group(3)
    return Move(
        parse_square(match.group(1)),
        parse_square(match.group(2)),
        PieceKind("pnbrqk".index(promo) + 1) if promo else None,
    )


def parse_uci_line(text: str, start: Optional[Position] = None) -> List[Position]:
    """Replay space-separated UCI moves; returns the start position and every position after it."""
    p = start if start is not None else core.startpos()
    trace = [p]
    for i, token in enumerate(text.split()):
        m = parse_uci_move(token, i)
        try:
            p = core.apply(p, m)
        except IllegalMove:
            raise UciError(f"illegal move {token!r}", i) from None
        trace.append(p)
    return trace


def format_uci_line(moves: Iterable[Move]) -> str:
    return " ".join(m.uci for m in moves)


# --- PGN -------------------------------------------------------------------------


class Result(str, enum.Enum):
    WHITE_WIN = "1-0"
    BLACK_WIN = "0-1"
    DRAW = "1/2-1/2"
    UNKNOWN = "*"


@dataclass
class TimedMove:
    move: Move
    san: str
    comments: List[str] = field(default_factory=list)
    nags: List[int] = field(default_factory=list)
    suffix: Optional[str] = None


@dataclass
class GameRecord:
    headers: List[Tuple[str, str]] = field(default_factory=list)
    moves: List[TimedMove] = field(default_factory=list)
    result: Result = Result.UNKNOWN
    comments: List[str] = field(default_factory=list)  # before the first move
    variations: int = 0

    def header(self, tag: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.headers:
            if k == tag:
                return v
        return default

    def with_header(self, tag: str, value: str) -> "GameRecord":
        headers = list(self.headers)
        for i, (k, _) in enumerate(headers):
            if k == tag:
                headers[i] = (tag, value)
                break
        else:
            headers.append((tag, value))
        return replace(self, headers=headers)

    def starting_position(self) -> Position:
        fen = self.header("FEN")
        return parse_fen(fen) if fen else core.startpos()

    def positions(self) -> List[Position]:
        """Positions before the first move and after every move."""
        p = self.starting_position()
        out = [p]
        for tm in self.moves:
            p = core.apply(p, tm.move)
            out.append(p)
        return out

    @property
    def uci_moves(self) -> List[str]:
        return [tm.move.uci for tm in self.moves]


_HEADER_RE = re.compile(r'^\s*\[\s*([A-Za-z0-9_]+)\s+"((?:[^"\\]|\\.)*)"\s*\]\s*$')
_TOKEN_RE = re.compile(
    r"""
    (?P<comment>\{[^}]*\})
   |(?P<open_comment>\{)
   |(?P<line_comment>;[^\n]*)
   |(?P<open>\()
   |(?P<close>\))
   |(?P<nag>\$\d+)
   |(?P<result>1-0|0-1|1/2-1/2|\*)
   |(?P<number>\d+\s*\.+)
   |(?P<san>(?:O-O-O|O-O|0-0-0|0-0|[NBRQK]?[a-h]?[1-8]?x?[a-h][1-8](?:=?[NBRQ])?)[+#]{0,2})(?P<suffix>[!?]{1,2})?
   |(?P<ws>\s+)
   |(?P<bad>\S+)
    """,
    re.VERBOSE,
)
_SUFFIX_NAGS = {"!": 1, "?": 2, "!!": 3, "??": 4, "!?": 5, "?!": 6}


def _line_col(text: str, index: int, base_line: int) -> Tuple[int, int]:
    line = text.count("\n", 0, index)
    col = index - (text.rfind("\n", 0, index) + 1)
    return base_line + line, col + 1


def _parse_movetext(text: str, headers, base_line: int) -> List[GameRecord]:
    games: List[GameRecord] = []
    game = GameRecord(headers=list(headers))
    fen = game.header("FEN")
    try:
        position = parse_fen(fen) if fen else core.startpos()
    except FenError as exc:
        raise PgnError(f"bad FEN header: {exc}", base_line, 1) from None
    depth = 0
    seen_tokens = False
    termination: Optional[Result] = None

    def finish():
        header_result = game.header("Result")
        if termination is not None:
            game.result = termination
            if header_result and header_result != termination.value and header_result != "*":
                log.warning(
                    "Result header %r disagrees with movetext termination %r; using the movetext",
                    header_result,
                    termination.value,
                )
        elif header_result in {r.value for r in Result}:
            game.result = Result(header_result)
        games.append(game)

    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind == "suffix":
            kind = "san"
        value = match.group(kind) if kind != "san" else match.group("san")
        if kind == "ws" or kind == "line_comment":
            continue
        if depth > 0:
            if kind == "open":
                depth += 1
            elif kind == "close":
                depth -= 1
            elif kind in ("open_comment", "bad"):
                raise PgnError(f"unexpected token {value!r}", *_line_col(text, match.start(), base_line))
            continue
        if kind == "open":
            if not game.moves:
                raise PgnError("variation before any move", *_line_col(text, match.start(), base_line))
            depth = 1
            game.variations += 1
            continue
        if kind == "close":
            raise PgnError("unbalanced ')'", *_line_col(text, match.start(), base_line))
        if kind in ("open_comment", "bad"):
            raise PgnError(f"unexpected token {value!r}", *_line_col(text, match.start(), base_line))
        if termination is not None:
            # tokens after a termination marker start a new headerless game
            finish()
            game = GameRecord()
            position = core.startpos()
            termination = None
            seen_tokens = False
        seen_tokens = True
        if kind == "comment":
            body = value[1:-1].strip()
            target = game.moves[-1].comments if game.moves else game.comments
            if body:
                target.append(body)
        elif kind == "nag":
            if not game.moves:
                raise PgnError("NAG before any move", *_line_col(text, match.start(), base_line))
            game.moves[-1].nags.append(int(value[1:]))
        elif kind == "number":
            pass
        elif kind == "result":
            termination = Result(value)
        elif kind == "san":
            suffix = match.group("suffix")
            try:
                move = parse_san(position, value)
            except SanError as exc:
                raise PgnError(str(exc), *_line_col(text, match.start(), base_line)) from None
            san = format_san(position, move)
            position = core._apply_code(position, core.encode_move_code(move))
            game.moves.append(TimedMove(move=move, san=san, suffix=suffix))
    if depth:
        raise PgnError("unterminated variation", *_line_col(text, len(text), base_line))
    if seen_tokens or game.headers or termination is not None:
        finish()
    return games


def _chunks(lines: Iterable[str]) -> Iterator[Tuple[int, List[Tuple[str, str]], str]]:
    """Split a PGN stream into (first line number, headers, movetext) chunks."""
    headers: List[Tuple[str, str]] = []
    body: List[str] = []
    start = 1
    lineno = 0
    for raw in lines:
        lineno += 1
        line = raw.rstrip("\r\n")
        if line.startswith("%"):
            body.append("")
            continue
        m = _HEADER_RE.match(line)
        if m and not _in_open_comment(body):
            if any(s.strip() for s in body):
                yield start, headers, "\n".join(body)
                headers, body = [], []
                start = lineno
            if not headers:
                start = lineno
            value = re.sub(r"\\(.)", r"\1", m.group(2))
            headers.append((m.group(1), value))
            continue
        if not headers and not body and not line.strip():
            start = lineno + 1
            continue
        body.append(line)
    if headers or any(s.strip() for s in body):
        yield start, headers, "\n".join(body)


def _in_open_comment(body: List[str]) -> bool:
    if not body:
        return False
    text = "\n".join(body)
    return text.count("{") > text.count("}")


def iter_pgn(
    lines: Iterable[str], lenient: bool = False, errors: Optional[list] = None
) -> Iterator[GameRecord]:
    """Stream games from an iterable of lines (for example an open file).

    With ``lenient`` a malformed game is skipped with a warning and its PgnError
    appended to ``errors``; otherwise the error propagates.
    """
    for start, headers, body in _chunks(lines):
        body_start = start + len(headers)
        try:
            games = _parse_movetext(body, headers, body_start)
        except PgnError as exc:
            if not lenient:
                raise
            log.warning("skipping malformed game: %s", exc)
            if errors is not None:
                errors.append(exc)
            continue
        yield from games


def parse_pgn(text: str, lenient: bool = False) -> List[GameRecord]:
    return list(iter_pgn(text.splitlines(), lenient=lenient))


def read_pgn_file(path, lenient: bool = False, errors: Optional[list] = None) -> Iterator[GameRecord]:
    with open(path, encoding="utf-8", errors="replace") as fh:
        yield from iter_pgn(fh, lenient=lenient, errors=errors)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def movetext_tokens(
    g: GameRecord,
    upto: Optional[int] = None,
    include_comments: bool = True,
    include_result: bool = True,
) -> List[str]:
    p = g.starting_position()
    tokens: List[str] = []
    if include_comments:
        tokens.extend("{" + c + "}" for c in g.comments)
    moves = g.moves if upto is None else g.moves[:upto]
    need_number = True
    turn, number = p.turn, p.fullmove_number
    for tm in moves:
        if turn == WHITE:
            tokens.append(f"{number}.")
        elif need_number:
            tokens.append(f"{number}...")
        tokens.append(tm.san + (tm.suffix or ""))
        need_number = False
        for nag in tm.nags:
            tokens.append(f"${nag}")
            need_number = True
        if include_comments and tm.comments:
            tokens.extend("{" + c + "}" for c in tm.comments)
            need_number = True
        if turn == BLACK:
            number += 1
        turn = 1 - turn
    if include_result and upto is None:
        tokens.append(g.result.value)
    return tokens


def format_movetext(
    g: GameRecord, upto: Optional[int] = None, include_comments: bool = False, include_result: bool = False
) -> str:
    """Single-line movetext such as ``1. e4 e5 2. Nf3``."""
    return " ".join(movetext_tokens(g, upto, include_comments, include_result))


def format_pgn(g: GameRecord, width: int = 79) -> str:
    lines = [f'[{tag} "{_escape(value)}"]' for tag, value in g.headers]
    if lines:
        lines.append("")
    current = ""
    for tok in movetext_tokens(g):
        if current and len(current) + 1 + len(tok) > width:
            lines.append(current)
            current = tok
        else:
            current = f"{current} {tok}" if current else tok
    lines.append(current)
    return "\n".join(lines) + "\n"


def game_from_moves(
    moves: Sequence[Move],
    headers: Optional[List[Tuple[str, str]]] = None,
    start: Optional[Position] = None,
    result: Result = Result.UNKNOWN,
) -> GameRecord:
    p = start if start is not None else core.startpos()
    headers = list(headers or [])
    if start is not None and not any(k == "FEN" for k, _ in headers):
        headers += [("SetUp", "1"), ("FEN", format_fen(start))]
    timed = []
    for m in moves:
        timed.append(TimedMove(move=m, san=format_san(p, m)))
        p = core.apply(p, m)
    return GameRecord(headers=headers, moves=timed, result=result)


# --- comment cleaning ------------------------------------------------------------

_DIRECTIVE_RE = re.compile(r"\[%(?:clk|arrow|cal|evp)\b[^\]]*\]")
_EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"
    "\U00002600-\U000027BF"
    "\U00002B00-\U00002BFF"
    "\U0001F1E6-\U0001F1FF"
    "\u200d\ufe0f\u20e3"
    "]"
)
_WS_RE = re.compile(r"\s+")


def clean_comment(text: str) -> str:
    text = _DIRECTIVE_RE.sub(" ", text)
    text = _EMOJI_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def _clean_list(comments: Sequence[str]) -> List[str]:
    return [c for c in (clean_comment(c) for c in comments) if c]


def clean_comments(g: GameRecord) -> GameRecord:
    """Strip clock, arrow and evp directives and emoji; drop comments left empty."""
    moves = [replace(tm, comments=_clean_list(tm.comments), nags=list(tm.nags)) for tm in g.moves]
    return replace(g, moves=moves, comments=_clean_list(g.comments), headers=list(g.headers))
