import random
from pathlib import Path

import pytest
from hypothesis import settings

from chessbench import core

from corpus import build_corpus_text

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("repro", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repro")

_acceptance_lines = []


def random_positions(n, seed=1234, max_plies=120):
    """``n`` positions visited by seeded random playouts (restarting at game end)."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        p = core.startpos()
        for _ in range(rng.randint(1, max_plies)):
            moves = core.legal_moves(p)
            if not moves:
                break
            p = core.apply(p, rng.choice(moves))
            out.append(p)
            if len(out) == n:
                break
    return out


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_pgn(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "games.pgn"
    path.write_text(build_corpus_text(40, seed=0), encoding="utf-8")
    return path


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number, description, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number}: {status} - {description}"
        if detail:
            line += f" ({detail})"
        _acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
