import logging
import random

import chess
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chessbench import core
from chessbench.notation import (
    FenError,
    GameRecord,
    PgnError,
    Result,
    SanError,
    UciError,
    ascii_board,
    clean_comment,
    clean_comments,
    format_fen,
    format_movetext,
    format_pgn,
    format_san,
    parse_fen,
    parse_pgn,
    parse_san,
    parse_uci_line,
    parse_uci_move,
    read_pgn_file,
)

from conftest import random_positions
from corpus import build_games
from golden import FOOLS_MATE, MODELING_FEN, PGN_TO_FEN_TARGET, START_FEN, UCI_TO_FEN_INPUT, UCI_TO_FEN_TARGET

FIGURE2_STYLE = """[Event "Rated Bullet tournament"]
[Site "https://lichess.org/PpwPOZMq"]
[White "Abbot"]
[Black "Costello"]
[Result "0-1"]
[WhiteElo "2100"]
[BlackElo "2000"]
[Opening "Sicilian Defense: Old Sicilian"]

1. e4 { [%eval 0.17] [%clk 0:00:30] } 1... c5 { [%eval 0.19] [%clk 0:00:30] }
2. Nf3 { [%eval 0.2] [%clk 0:00:29] } 2... Nc6 { [%clk 0:00:30] } 0-1
"""


# --- FEN -------------------------------------------------------------------------


def test_parse_start_fen():
    assert parse_fen(START_FEN) == core.startpos()
    assert format_fen(core.startpos()) == START_FEN


def test_parse_example_fen():
    p = parse_fen(PGN_TO_FEN_TARGET)
    assert p.turn == core.BLACK
    assert p.castling == 0
    assert format_fen(p) == PGN_TO_FEN_TARGET


@pytest.mark.parametrize(
    "text,field",
    [
        ("9/8/8/8/8/8/8/8 w - - 0 1", "placement"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1", "placement"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1", "side_to_move"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkz - 0 1", "castling"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq e9 0 1", "en_passant"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - x 1", "halfmove_clock"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 0", "fullmove_number"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0", "placement"),
    ],
)
def test_fen_errors(text, field):
    with pytest.raises(FenError) as info:
        parse_fen(text)
    assert info.value.field == field
    assert 0 <= info.value.offset <= len(text)


def test_fen_after_e4_matches_reference():
    p = core.apply(core.startpos(), parse_uci_move("e2e4"))
    assert format_fen(p) == "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1"
    board = chess.Board()
    board.push_uci("e2e4")
    assert format_fen(p) == board.fen(en_passant="fen")


def test_fen_round_trip_10000():
    for p in random_positions(10000, seed=77):
        text = format_fen(p)
        assert parse_fen(text) == p
        assert format_fen(parse_fen(text)) == text


# --- SAN -------------------------------------------------------------------------


def test_modeling_example_rd6():
    p = parse_fen(MODELING_FEN)
    assert format_san(p, parse_uci_move("d8d6")) == "Rd6"
    assert parse_san(p, "Rd6") == parse_uci_move("d8d6")


def test_basic_san():
    p = core.startpos()
    assert parse_san(p, "e4") == parse_uci_move("e2e4")
    assert format_san(p, parse_uci_move("e2e4")) == "e4"
    g = parse_pgn(FOOLS_MATE)[0]
    assert g.moves[-1].san == "Qh4#"
    assert format_san(g.positions()[-2], g.moves[-1].move) == "Qh4#"


def test_san_variants_accepted():
    p = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1")
    assert parse_san(p, "O-O") == parse_san(p, "0-0") == parse_uci_move("e1g1")
    assert parse_san(p, "O-O-O+") == parse_uci_move("e1c1")
    p = parse_fen("8/P6k/8/8/8/8/7K/8 w - - 0 1")
    assert parse_san(p, "a8=Q") == parse_san(p, "a8Q") == parse_uci_move("a7a8q")
    assert format_san(p, parse_uci_move("a7a8n")) == "a8=N"


@pytest.mark.parametrize("text", ["Nf6", "Ke2", "e5", "xx", "Qd4", "Z9"])
def test_san_errors(text):
    with pytest.raises(SanError):
        parse_san(core.startpos(), text)


def test_ambiguous_san():
    p = parse_fen("k7/8/8/8/8/8/8/KR5R w - - 0 1")
    with pytest.raises(SanError):
        parse_san(p, "Rd1")
    assert parse_san(p, "Rbd1") == parse_uci_move("b1d1")


def _positions_from_games(n_games, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(n_games):
        p = core.startpos()
        for _ in range(rng.randint(10, 150)):
            moves = core.legal_moves(p)
            if not moves:
                break
            out.append(p)
            p = core.apply(p, rng.choice(moves))
    return out


def test_san_matches_reference_and_round_trips():
    positions = _positions_from_games(60, seed=8)[::2]
    for p in positions:
        board = chess.Board(format_fen(p))
        for m in core.legal_moves(p):
            san = format_san(p, m)
            assert san == board.san(chess.Move.from_uci(m.uci))
            assert parse_san(p, san) == m


def test_san_disambiguation_is_minimal():
    """Dropping any disambiguation character makes the SAN ambiguous or wrong."""
    checked = 0
    for p in _positions_from_games(50, seed=21):
        for m in core.legal_moves(p):
            san = format_san(p, m)
            if not san[0] in "NBRQK" or san.startswith("O"):
                continue
            body = san.rstrip("+#")
            core_len = 3 + ("x" in body)  # piece + target square (+ capture mark)
            if len(body) == core_len:
                continue
            for i in range(1, len(body) - core_len + 1):
                reduced = body[:i] + body[i + 1 :]
                try:
                    assert parse_san(p, reduced) != m
                except SanError:
                    pass
                checked += 1
    assert checked > 0


# --- UCI -------------------------------------------------------------------------


def test_uci_moves():
    assert parse_uci_move("e2e4") == core.Move(core.parse_square("e2"), core.parse_square("e4"))
    assert parse_uci_move("e7e8q").promotion == core.QUEEN
    with pytest.raises(UciError):
        parse_uci_move("e2e")


def test_uci_line_example():
    trace = parse_uci_line(UCI_TO_FEN_INPUT)
    assert len(trace) == 52
    assert format_fen(trace[-1]) == UCI_TO_FEN_TARGET


def test_uci_line_error_index():
    with pytest.raises(UciError) as info:
        parse_uci_line("e2e4 e7e5 e4e5")
    assert info.value.index == 2
    with pytest.raises(UciError) as info:
        parse_uci_line("e2e4 c2")
    assert info.value.index == 1


# --- PGN -------------------------------------------------------------------------


def test_figure2_style_pgn():
    g = parse_pgn(FIGURE2_STYLE)[0]
    assert g.header("WhiteElo") == "2100"
    assert g.result == Result.BLACK_WIN
    assert "[%eval" in g.moves[0].comments[0]
    cleaned = clean_comments(g)
    assert cleaned.moves[0].comments == ["[%eval 0.17]"]
    assert cleaned.moves[3].comments == []


def test_world_championship_game(fixtures_dir):
    g = list(read_pgn_file(fixtures_dir / "world_championship.pgn"))[0]
    assert len(g.moves) == 81  # 41 full moves, the last one by white only
    assert g.result == Result.WHITE_WIN
    final = g.positions()[-1]
    board = chess.Board()
    for tm in g.moves:
        board.push_uci(tm.move.uci)
    assert format_fen(final) == board.fen(en_passant="fen")


def test_result_conflict_logs_warning(caplog):
    with caplog.at_level(logging.WARNING):
        g = parse_pgn('[Result "1/2-1/2"]\n\n1. e4 e5 1-0\n')[0]
    assert g.result == Result.WHITE_WIN
    assert any("disagrees" in r.message for r in caplog.records)


def test_pgn_features():
    text = """[Event "x"]
[Site "y"]

{ opening remark } 1. e4! $1 { first } { second } 1... e5?! 2. Nf3 (2. f4 exf4 (2... d5) 3. Nf3) 2... Nc6 $14
3. Bb5 a6 *

[Event "second"]

1. d4 d5 1/2-1/2
"""
    games = parse_pgn(text)
    assert len(games) == 2
    g = games[0]
    assert [k for k, _ in g.headers] == ["Event", "Site"]
    assert g.comments == ["opening remark"]
    assert g.moves[0].comments == ["first", "second"]
    assert g.moves[0].suffix == "!" and 1 in g.moves[0].nags
    assert g.moves[1].suffix == "?!"
    assert g.variations == 1
    assert [tm.san for tm in g.moves] == ["e4", "e5", "Nf3", "Nc6", "Bb5", "a6"]
    assert g.moves[3].nags == [14]
    assert g.result == Result.UNKNOWN
    assert games[1].result == Result.DRAW


def test_pgn_from_fen_header():
    g = parse_pgn('[SetUp "1"]\n[FEN "8/P6k/8/8/8/8/7K/8 w - - 0 1"]\n\n1. a8=Q *\n')[0]
    assert format_fen(g.positions()[-1]) == "Q7/7k/8/8/8/8/7K/8 b - - 0 1"


def test_pgn_error_location():
    text = '[Event "x"]\n\n1. e4 e5\n2. Nf3 Qxh7 *\n'
    with pytest.raises(PgnError) as info:
        parse_pgn(text)
    assert info.value.line == 4
    assert info.value.column == 8


def test_lenient_mode_skips_bad_games(tmp_path):
    text = '[Event "bad"]\n\n1. e4 e4 *\n\n[Event "good"]\n\n1. e4 e5 *\n'
    path = tmp_path / "g.pgn"
    path.write_text(text)
    errors = []
    games = list(read_pgn_file(path, lenient=True, errors=errors))
    assert [g.header("Event") for g in games] == ["good"]
    assert len(errors) == 1
    with pytest.raises(PgnError):
        list(read_pgn_file(path))


def test_parse_format_parse_fixed_point():
    games = build_games(40, seed=3)
    for g in games:
        text = format_pgn(g)
        g1 = parse_pgn(text)[0]
        g2 = parse_pgn(format_pgn(g1))[0]
        assert g1 == g2
        assert [tm.move for tm in g1.moves] == [tm.move for tm in g.moves]
        assert g1.headers == g.headers


def test_random_game_round_trips():
    """PGN and UCI text of random games reproduce the same positions."""
    rng = random.Random(4)
    for _ in range(200):
        p = core.startpos()
        moves = []
        for _ in range(rng.randint(1, 120)):
            legal = core.legal_moves(p)
            if not legal:
                break
            m = rng.choice(legal)
            moves.append(m)
            p = core.apply(p, m)
        from chessbench.notation import game_from_moves

        g = game_from_moves(moves)
        assert parse_pgn(format_pgn(g))[0].positions()[-1] == p
        assert parse_uci_line(" ".join(m.uci for m in moves))[-1] == p
        assert parse_pgn(format_movetext(g) + " *")[0].uci_moves == [m.uci for m in moves]


# --- comments and ASCII -----------------------------------------------------------


def test_clean_comment_examples():
    assert clean_comment("[%eval 0.17] [%clk 0:00:30]") == "[%eval 0.17]"
    assert clean_comment("nice move 👍") == "nice move"
    assert clean_comment("[%clk 0:00:30]") == ""
    assert clean_comment("[%cal Gd2d4,Re2e4] plan [%arrow e2e4] [%evp 1,2,3]") == "plan"


def test_clean_comments_drops_empty():
    g = parse_pgn("1. e4 { [%clk 0:00:30] } e5 { 🔥 } 2. Nf3 { keep me } *")[0]
    cleaned = clean_comments(g)
    assert [tm.comments for tm in cleaned.moves] == [[], [], ["keep me"]]
    assert g.moves[0].comments == ["[%clk 0:00:30]"]  # input untouched


@given(st.text(max_size=60))
def test_clean_comment_idempotent(text):
    once = clean_comment(text)
    assert clean_comment(once) == once


def test_clean_comments_idempotent_on_corpus():
    for g in build_games(20, seed=5):
        once = clean_comments(g)
        assert clean_comments(once) == once


def test_ascii_board():
    lines = ascii_board(core.startpos()).splitlines()
    assert len(lines) == 8
    assert lines[0] == "r n b q k b n r"
    assert lines[4] == ". . . . . . . ."
    example = ascii_board(parse_fen(PGN_TO_FEN_TARGET)).splitlines()
    assert example[1].split()[6] == "k"  # rank 7, file g
    empty = core.Position(0, 0, 0, 0, 0, 0, 0, 0, core.WHITE, 0, None, 0, 1)
    assert ascii_board(empty).splitlines() == [". . . . . . . ."] * 8


def test_game_record_defaults():
    g = GameRecord()
    assert g.positions() == [core.startpos()]
    assert g.with_header("Event", "x").header("Event") == "x"
