"""UCI engine client, winrate conversion and a built-in material evaluator.

Evaluations are always reported from white's point of view: ``value`` is the
centipawn score for white, or a signed mate distance that is positive when
white mates.
"""

from __future__ import annotations

import logging
import math
import queue
import shutil
import subprocess
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Union

from . import core
from .core import WHITE, Move, Position
from .notation import format_fen

log = logging.getLogger(__name__)

WINRATE_K = 0.00368208
PIECE_VALUES = {core.PAWN: 100, core.KNIGHT: 300, core.BISHOP: 300, core.ROOK: 500, core.QUEEN: 900}


class EngineError(RuntimeError):
    move: Optional[Move] = None


class SpawnError(EngineError):
    pass


class HandshakeTimeout(EngineError):
    pass


class ProtocolViolation(EngineError):
    pass


class EngineTimeout(EngineError):
    pass


class ParseError(EngineError):
    pass


@dataclass(frozen=True)
class EngineEval:
    kind: str  # "centipawns" or "mate_in"
    value: int
    depth: int = 1

    def __post_init__(self):
        if self.kind not in ("centipawns", "mate_in"):
            raise ValueError(f"bad eval kind {self.kind!r}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.kind == "mate_in" and self.value == 0:
            raise ValueError("mate distance must be nonzero")


@dataclass(frozen=True)
class EngineConfig:
    path: str
    args: tuple = ()
    depth: Optional[int] = None
    move_time_ms: Optional[int] = None
    hash_mb: int = 16
    threads: int = 1
    timeout_ms: int = 30000
    options: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.depth is not None and self.move_time_ms is not None:
            raise ValueError("set depth or move_time_ms, not both")
        if self.depth is None and self.move_time_ms is None:
            object.__setattr__(self, "depth", 12)
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be >= 1")


def winrate(e: EngineEval, k: float = WINRATE_K) -> float:
    """White's expected score for an evaluation."""
    if e.kind == "mate_in":
        return 1.0 if e.value > 0 else 0.0
    return 1.0 / (1.0 + math.exp(-k * e.value))


def _terminal_eval(p: Position) -> Optional[EngineEval]:
    if not core.has_legal_moves(p):
        if core.is_check(p):
            # side to move is mated
            return EngineEval("mate_in", -1 if p.turn == WHITE else 1, 1)
        return EngineEval("centipawns", 0, 1)
    if core.is_insufficient_material(p):
        return EngineEval("centipawns", 0, 1)
    return None


class MaterialEvaluator:
    """Offline stand-in for an engine: 100 x material difference (P1 N3 B3 R5 Q9)."""

    def evaluate(self, p: Position) -> EngineEval:
        cp = 0
        for kind, value in PIECE_VALUES.items():
            cp += value * (core.popcount(p.pieces(kind, core.WHITE)) - core.popcount(p.pieces(kind, core.BLACK)))
        return EngineEval("centipawns", cp, 1)

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def parse_search_output(lines: Iterable[str], turn: int, default_depth: int = 1) -> EngineEval:
    """Extract the last score before ``bestmove`` and convert it to white's view."""
    last = None
    for line in lines:
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "bestmove":
            break
        if tokens[0] != "info" or "score" not in tokens:
            continue
        i = tokens.index("score")
        try:
            kind, raw = tokens[i + 1], int(tokens[i + 2])
        except (IndexError, ValueError):
            raise ParseError(f"malformed score in {line!r}") from None
        if kind not in ("cp", "mate"):
            raise ParseError(f"unknown score kind in {line!r}")
        depth = default_depth
        if "depth" in tokens:
            try:
                depth = int(tokens[tokens.index("depth") + 1])
            except (IndexError, ValueError):
                raise ParseError(f"malformed depth in {line!r}") from None
        last = (kind, raw, max(depth, 1))
    if last is None:
        raise ParseError("no score reported before bestmove")
    kind, raw, depth = last
    sign = 1 if turn == WHITE else -1
    if kind == "cp":
        return EngineEval("centipawns", sign * raw, depth)
    if raw == 0:
        raw = -1  # "mate 0": the side to move is already mated
    return EngineEval("mate_in", sign * raw, depth)


_UCI_REPLIES = {"id", "option", "uciok", "readyok", "info", "bestmove", "copyprotection", "registration"}


class EngineSession:
    """One engine process.  Not thread-safe: use one session per worker."""

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._broken = False
        exe = shutil.which(cfg.path) or cfg.path
        try:
            self._proc = subprocess.Popen(
                [exe, *cfg.args],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise SpawnError(f"cannot start engine {cfg.path!r}: {e}") from e
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._handshake()
        except BaseException:
            self.close()
            raise

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\r\n"))
        self._lines.put(None)

    def _send(self, command: str) -> None:
        log.debug("engine << %s", command)
        try:
            self._proc.stdin.write(command + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolViolation(f"engine closed its input: {e}") from e

    def _read_until(self, token: str, timeout_s: float, exc, allowed=None) -> List[str]:
        deadline = time.monotonic() + timeout_s
        seen = []
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise exc(f"no {token!r} within {timeout_s:.1f}s")
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                raise exc(f"no {token!r} within {timeout_s:.1f}s") from None
            if line is None:
                raise ProtocolViolation(f"engine exited while waiting for {token!r}")
            log.debug("engine >> %s", line)
            head = line.split(maxsplit=1)[0] if line.strip() else ""
            if head == token:
                seen.append(line)
                return seen
            if allowed is not None and head in _UCI_REPLIES and head not in allowed:
                raise ProtocolViolation(f"unexpected {head!r} while waiting for {token!r}")
            seen.append(line)

    def _handshake(self) -> None:
        timeout = self.cfg.timeout_ms / 1000
        self._send("uci")
        self._read_until("uciok", timeout, HandshakeTimeout, allowed={"id", "option", "info"})
        options = {"Hash": str(self.cfg.hash_mb), "Threads": str(self.cfg.threads), **self.cfg.options}
        for name, value in options.items():
            self._send(f"setoption name {name} value {value}")
        self._send("isready")
        self._read_until("readyok", timeout, HandshakeTimeout, allowed={"info"})

    def evaluate(self, p: Position) -> EngineEval:
        if self._broken or self._proc.poll() is not None:
            raise ProtocolViolation("engine session is no longer usable")
        self._send(f"position fen {format_fen(p)}")
        if self.cfg.move_time_ms is not None:
            self._send(f"go movetime {self.cfg.move_time_ms}")
        else:
            self._send(f"go depth {self.cfg.depth}")
        try:
            lines = self._read_until("bestmove", self.cfg.timeout_ms / 1000, EngineTimeout, allowed={"info"})
        except EngineError:
            # the reply stream is now out of step with our commands
            self._broken = True
            raise
        return parse_search_output(lines, p.turn, self.cfg.depth or 1)

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            self._send("quit")
            proc.stdin.close()
        except (EngineError, OSError):
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


Evaluator = Union[EngineSession, MaterialEvaluator]


def open_engine(cfg: Union[EngineConfig, str]) -> Evaluator:
    """Start a session.  ``"builtin:material"`` returns the material evaluator."""
    if isinstance(cfg, str):
        cfg = parse_engine_spec(cfg)
    if cfg.path == "builtin:material":
        return MaterialEvaluator()
    return EngineSession(cfg)


def close(session: Evaluator) -> None:
    session.close()


def parse_engine_spec(spec: str, **overrides) -> EngineConfig:
    """``builtin:material``, ``uci:/path/to/engine`` or a bare executable path."""
    if spec == "builtin:material":
        return EngineConfig(path=spec, **overrides)
    if spec.startswith("uci:"):
        spec = spec[4:]
    return EngineConfig(path=spec, **overrides)


def evaluate(session: Evaluator, p: Position) -> EngineEval:
    """Evaluate ``p``; finished games are scored without consulting the engine."""
    terminal = _terminal_eval(p)
    if terminal is not None:
        return terminal
    return session.evaluate(p)


def white_winrate(session: Evaluator, p: Position) -> float:
    return winrate(evaluate(session, p))


def rank_moves(session: Evaluator, p: Position) -> Dict[Move, float]:
    """Winrate of every legal move from the mover's point of view."""
    mover = p.turn
    out = {}
    for m in core.legal_moves(p):
        try:
            w = winrate(evaluate(session, core.apply(p, m)))
        except EngineError as e:
            e.move = m
            e.args = (f"{e.args[0] if e.args else e} (after move {m.uci})",)
            raise
        out[m] = w if mover == WHITE else 1.0 - w
    return out


def best_move(session: Evaluator, p: Position) -> Move:
    ranked = rank_moves(session, p)
    best = max(ranked.values())
    return next(m for m, w in ranked.items() if w == best)


class SessionPool:
    """A fixed set of sessions handed out one per borrower."""

    def __init__(self, cfg: Union[EngineConfig, str], size: int = 1):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self._free: "queue.Queue[Evaluator]" = queue.Queue()
        self._all = []
        try:
            for _ in range(size):
                s = open_engine(cfg)
                self._all.append(s)
                self._free.put(s)
        except BaseException:
            self.close()
            raise

    @contextmanager
    def session(self, timeout: Optional[float] = None):
        s = self._free.get(timeout=timeout)
        try:
            yield s
        finally:
            self._free.put(s)

    def close(self) -> None:
        for s in self._all:
            s.close()
        self._all = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
