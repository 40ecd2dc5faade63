import json
import math
import random
import sys
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chessbench import core, engine
from chessbench.engine import (
    EngineConfig,
    EngineError,
    EngineEval,
    EngineTimeout,
    HandshakeTimeout,
    MaterialEvaluator,
    ParseError,
    ProtocolViolation,
    SessionPool,
    SpawnError,
    parse_engine_spec,
    parse_search_output,
    winrate,
)
from chessbench.notation import parse_fen, parse_uci_move

from golden import START_FEN

FAKE = "fake_engine.py"


def fake_config(fixtures_dir, *extra, timeout_ms=5000, **kw):
    return EngineConfig(path=sys.executable, args=(str(fixtures_dir / FAKE), *extra), timeout_ms=timeout_ms, **kw)


@pytest.fixture
def transcript(fixtures_dir):
    return fixtures_dir / "engine_transcript.json"


# --- winrate --------------------------------------------------------------------------------


def test_winrate_values():
    assert winrate(EngineEval("centipawns", 0)) == 0.5
    assert winrate(EngineEval("centipawns", 100)) == pytest.approx(1 / (1 + math.exp(-0.368208)))
    assert winrate(EngineEval("mate_in", 3)) == 1.0
    assert winrate(EngineEval("mate_in", -1)) == 0.0


def test_winrate_monotonic():
    values = [winrate(EngineEval("centipawns", cp)) for cp in range(-1000, 1001)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert all(0.0 < v < 1.0 for v in values)
    for cp in range(0, 1001, 50):
        assert winrate(EngineEval("centipawns", cp)) + winrate(EngineEval("centipawns", -cp)) == pytest.approx(1.0)


def test_engine_eval_validation():
    with pytest.raises(ValueError):
        EngineEval("pawns", 1)
    with pytest.raises(ValueError):
        EngineEval("mate_in", 0)
    with pytest.raises(ValueError):
        EngineEval("centipawns", 0, depth=0)


def test_config_invariants():
    assert EngineConfig(path="x").depth == 12
    assert EngineConfig(path="x", move_time_ms=50).depth is None
    with pytest.raises(ValueError):
        EngineConfig(path="x", depth=5, move_time_ms=50)
    assert parse_engine_spec("uci:/usr/bin/stockfish").path == "/usr/bin/stockfish"
    assert parse_engine_spec("builtin:material", depth=3).depth == 3


# --- output parsing ---------------------------------------------------------------------------


def test_parse_search_output_perspective():
    lines = ["info depth 5 score cp 40 pv e2e4", "bestmove e2e4"]
    assert parse_search_output(lines, core.WHITE) == EngineEval("centipawns", 40, 5)
    assert parse_search_output(lines, core.BLACK) == EngineEval("centipawns", -40, 5)
    mate = ["info depth 7 score mate 2 pv a1a8", "bestmove a1a8"]
    assert parse_search_output(mate, core.BLACK) == EngineEval("mate_in", -2, 7)
    assert parse_search_output(["info depth 1 score mate 0", "bestmove (none)"], core.WHITE).value == -1
    with pytest.raises(ParseError):
        parse_search_output(["info depth 3 nodes 4", "bestmove e2e4"], core.WHITE)
    with pytest.raises(ParseError):
        parse_search_output(["info depth 3 score cp x", "bestmove e2e4"], core.WHITE)


NOISE = st.sampled_from(
    [
        "info string hello",
        "info depth 4 currmove e2e4 currmovenumber 3",
        "info nodes 1000 nps 5000 hashfull 3",
        "",
        "Stockfish banner",
    ]
)


@settings(max_examples=300)
@given(st.lists(st.integers(-3000, 3000), min_size=1, max_size=6), st.lists(NOISE, max_size=8), st.randoms())
def test_parse_last_score_wins(scores, noise, rnd):
    score_lines = [f"info depth {i + 1} score cp {v} pv e2e4" for i, v in enumerate(scores)]
    lines = score_lines + noise
    rnd.shuffle(lines)
    # keep the score lines in order; noise may sit anywhere
    it = iter(score_lines)
    lines = [next(it) if ln.startswith("info depth") and " score " in ln else ln for ln in lines]
    lines += ["bestmove e2e4", "info depth 99 score cp 7777"]
    got = parse_search_output(lines, core.WHITE)
    assert got == EngineEval("centipawns", scores[-1], len(scores))


# --- material evaluator and terminal positions -----------------------------------------------


def test_material_evaluator():
    ev = MaterialEvaluator()
    assert engine.evaluate(ev, core.startpos()) == EngineEval("centipawns", 0, 1)
    p = parse_fen("4k3/8/8/8/8/8/8/Q3K2R w - - 0 1")
    assert engine.evaluate(ev, p).value == 1400
    assert engine.evaluate(ev, core.mirror(p)).value == -1400


def test_terminal_short_circuit():
    ev = MaterialEvaluator()
    mated = parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3")
    assert engine.evaluate(ev, mated) == EngineEval("mate_in", -1, 1)
    assert engine.white_winrate(ev, mated) == 0.0
    stale = parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1")
    assert engine.evaluate(ev, stale) == EngineEval("centipawns", 0, 1)
    bare = parse_fen("8/8/4k3/8/8/3K4/8/8 w - - 0 1")
    assert engine.white_winrate(ev, bare) == 0.5


def test_material_rank_moves_prefers_capture():
    p = parse_fen("4k3/8/8/3q4/8/8/8/3QK3 w - - 0 1")
    ranked = engine.rank_moves(MaterialEvaluator(), p)
    assert set(ranked) == set(core.legal_moves(p))
    assert engine.best_move(MaterialEvaluator(), p) == parse_uci_move("d1d5")
    black = engine.rank_moves(MaterialEvaluator(), core.mirror(p))
    assert max(black.values()) == ranked[parse_uci_move("d1d5")]


# --- fake UCI engine ---------------------------------------------------------------------------


def test_transcript_evaluate(fixtures_dir, transcript):
    with engine.open_engine(fake_config(fixtures_dir, str(transcript))) as s:
        assert engine.evaluate(s, core.startpos()) == EngineEval("centipawns", 34, 12)
        after_a3 = core.apply(core.startpos(), parse_uci_move("b1a3"))
        # black to move, the engine says -100 for black: +100 for white
        assert engine.evaluate(s, after_a3) == EngineEval("centipawns", 100, 9)


def test_transcript_rank_moves(fixtures_dir, transcript):
    script = json.loads(transcript.read_text())
    k = engine.WINRATE_K
    with engine.open_engine(fake_config(fixtures_dir, str(transcript))) as s:
        ranked = engine.rank_moves(s, core.startpos())
        best = engine.best_move(s, core.startpos())
    moves = core.legal_moves(core.startpos())
    assert list(ranked) == moves
    for i, m in enumerate(moves):
        if m.uci == "f2f3":
            expected = 0.0  # black mates
        elif m.uci == "e2e4":
            expected = 1.0  # white mates
        else:
            expected = 1 / (1 + math.exp(-k * (100 - 10 * i)))
        assert ranked[m] == pytest.approx(expected, abs=1e-12), m.uci
    assert ranked[parse_uci_move("b1a3")] == pytest.approx(0.591026, abs=1e-6)
    assert best == parse_uci_move("e2e4")
    assert len(script) == 21


def test_thousand_sequential_calls(fixtures_dir):
    rng = random.Random(3)
    with engine.open_engine(fake_config(fixtures_dir)) as s:
        start = time.monotonic()
        p = core.startpos()
        for _ in range(1000):
            assert s.evaluate(p).value in (34, -34)
            moves = core.legal_moves(p)
            p = core.apply(p, rng.choice(moves)) if moves and not core.is_insufficient_material(p) else core.startpos()
        assert time.monotonic() - start < 30


def test_move_time_mode(fixtures_dir):
    with engine.open_engine(fake_config(fixtures_dir, move_time_ms=10)) as s:
        assert s.evaluate(core.startpos()) == EngineEval("centipawns", 34, 12)


def test_spawn_error():
    with pytest.raises(SpawnError):
        engine.open_engine(EngineConfig(path="/nonexistent/engine-binary"))


def test_handshake_timeout(fixtures_dir):
    with pytest.raises(HandshakeTimeout):
        engine.open_engine(fake_config(fixtures_dir, "--mode", "silent", timeout_ms=500))


def test_protocol_violation(fixtures_dir):
    with pytest.raises(ProtocolViolation):
        engine.open_engine(fake_config(fixtures_dir, "--mode", "garbage"))


def test_search_timeout_breaks_session(fixtures_dir):
    s = engine.open_engine(fake_config(fixtures_dir, "--mode", "hang", timeout_ms=400))
    try:
        with pytest.raises(EngineTimeout):
            s.evaluate(core.startpos())
        with pytest.raises(ProtocolViolation):
            s.evaluate(core.startpos())
    finally:
        engine.close(s)


def test_crash_reports_move(fixtures_dir):
    s = engine.open_engine(fake_config(fixtures_dir, "--mode", "crash"))
    try:
        with pytest.raises(EngineError) as info:
            engine.rank_moves(s, core.startpos())
        assert info.value.move == core.legal_moves(core.startpos())[0]
        assert "after move b1a3" in str(info.value)
    finally:
        s.close()


def test_session_pool(fixtures_dir):
    with SessionPool(fake_config(fixtures_dir), size=2) as pool:
        with pool.session() as a, pool.session() as b:
            assert a is not b
            assert a.evaluate(core.startpos()).value == 34
    with SessionPool("builtin:material") as pool:
        with pool.session() as s:
            assert isinstance(s, MaterialEvaluator)
    with pytest.raises(ValueError):
        SessionPool("builtin:material", size=0)


def test_builtin_spec():
    assert isinstance(engine.open_engine("builtin:material"), MaterialEvaluator)
    assert engine.white_winrate(engine.open_engine("builtin:material"), parse_fen(START_FEN)) == 0.5
