"""Streaming drivers behind the CLI: dataset generation, labeling and encoding.

Work is fanned out per game to a process pool and collected with ``imap`` so
output order (and bytes) never depend on the worker count.
"""

from __future__ import annotations

import json
import logging
import multiprocessing
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from . import core, encoding, engine, taskgen
from .notation import GameRecord, format_fen, parse_fen, read_pgn_file
from .taskgen import TaskInstance

log = logging.getLogger(__name__)

EVAL_GROUPS = ("state_tracking", "fen_conversion", "state_value", "annotation", "opening", "checkmate", "general_policy")
SYNTHETIC_CUTS = {"short": (1, 20), "medium": (21, 60), "long": (61, 120)}


def default_workers() -> int:
    return os.cpu_count() or 1


def ordered_map(fn: Callable, items: Iterable, workers: int, initializer=None, initargs=(), chunksize: int = 4) -> Iterator:
    """``map`` that preserves input order, in-process when ``workers`` <= 1."""
    if workers <= 1:
        if initializer is not None:
            initializer(*initargs)
        yield from map(fn, items)
        return
    ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
    with ctx.Pool(workers, initializer=initializer, initargs=initargs) as pool:
        yield from pool.imap(fn, items, chunksize=chunksize)


@dataclass
class RunStats:
    games: int = 0
    skipped: int = 0
    instances: Dict[str, int] = field(default_factory=dict)
    notes: Dict[str, int] = field(default_factory=dict)

    def add(self, group: str, n: int) -> None:
        self.instances[group] = self.instances.get(group, 0) + n


def iter_games(path, lenient: bool, errors: list) -> Iterator[GameRecord]:
    return read_pgn_file(path, lenient=lenient, errors=errors)


# --- gen-modeling --------------------------------------------------------------------


def _modeling_job(args) -> List[str]:
    index, game, seed = args
    try:
        return [inst.to_json() for inst in taskgen.gen_modeling([game], seed=seed, start_index=index)]
    except (core.IllegalMove, ValueError) as e:
        log.warning("game %d skipped: %s", index, e)
        return []


def gen_modeling_file(
    pgn_path, out_path, seed: int, per_band: int, workers: int, lenient: bool
) -> RunStats:
    errors: list = []
    stats = RunStats()
    strat: Dict[str, int] = {}
    selected = taskgen.stratify_by_elo(iter_games(pgn_path, lenient, errors), per_band=per_band, seed=seed, stats=strat)
    stats.games = strat.get("seen", 0)
    stats.skipped = len(errors) + strat.get("missing_elo", 0)
    stats.notes.update(strat)
    jobs = ((i, g, seed) for i, g in enumerate(selected))
    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for lines in ordered_map(_modeling_job, jobs, workers):
            for line in lines:
                out.write(line + "\n")
            stats.add("modeling_synthetic", len(lines))
    return stats


# --- gen-eval ------------------------------------------------------------------------

_worker_evaluator = None


def _init_evaluator(engine_spec) -> None:
    global _worker_evaluator
    if _worker_evaluator is not None and not isinstance(_worker_evaluator, engine.MaterialEvaluator):
        _worker_evaluator.close()
    _worker_evaluator = engine.open_engine(engine_spec)


def _close_evaluator() -> None:
    global _worker_evaluator
    if _worker_evaluator is not None:
        _worker_evaluator.close()
        _worker_evaluator = None


def _tag(inst: TaskInstance, ident: str, game_id: str, seed: int) -> TaskInstance:
    inst.metadata["id"] = ident
    inst.metadata["game_id"] = game_id
    inst.metadata.setdefault("seed", seed)
    return inst


def eval_tasks_for_game(index: int, game: GameRecord, seed: int, groups: Sequence[str], evaluator) -> Dict[str, Any]:
    """Instances (as JSON lines) per group for one real game, plus annotation pairs."""
    gid = f"{index:07d}"
    rng = random.Random(f"{seed}:eval:{index}")
    n = len(game.moves)
    out: Dict[str, Any] = {g: [] for g in groups}
    # draw every random number up front so enabling a group never shifts another
    st_cut = rng.randrange(n) if n else None
    fen_cut = rng.randint(1, n) if n else None
    sv_cut = rng.randint(10, min(60, n - 1)) if n >= 11 else None
    gp_cut = rng.randrange(n) if n else None
    gp_band = rng.choice(taskgen.POLICY_BANDS)

    if "state_tracking" in groups and st_cut is not None:
        inst = taskgen.make_state_tracking(game, st_cut, seed=seed)
        out["state_tracking"].append(_tag(inst, f"state_tracking-{gid}", gid, seed))
    if "fen_conversion" in groups and fen_cut is not None:
        for src in ("uci", "pgn"):
            inst = taskgen.make_fen_conversion(game, fen_cut, src)
            out["fen_conversion"].append(_tag(inst, f"{src}_to_fen-{gid}", gid, seed))
    if "state_value" in groups and sv_cut is not None:
        p = game.positions()[sv_cut]
        w = engine.white_winrate(evaluator, p)
        for brace in (False, True):
            inst = taskgen.make_state_value(game, sv_cut, w, brace_suffix=brace)
            out["state_value"].append(_tag(inst, f"state_value-{gid}-{'brace' if brace else 'plain'}", gid, seed))
    if "checkmate" in groups:
        plies = taskgen.find_mate_plies(game)
        if plies:
            cut = plies[-1]
            for variant in ("mc", "esm"):
                for hint in (False, True):
                    inst = taskgen.make_checkmate_in_one(game, cut, variant=variant, hint=hint)
                    ident = f"checkmate_in_one-{gid}-{variant}-{'hint' if hint else 'plain'}"
                    out["checkmate"].append(_tag(inst, ident, gid, seed))
    if "general_policy" in groups and gp_cut is not None:
        p = game.positions()[gp_cut]
        winrates = engine.rank_moves(evaluator, p)
        inst = taskgen.make_general_policy(game, gp_cut, winrates, gp_band, seed=seed)
        out["general_policy"].append(_tag(inst, f"general_policy-{gid}", gid, seed))
    if "annotation" in groups:
        out["annotation"] = [
            {"text": pr.text, "movetext": pr.movetext, "game_id": gid, "fen": format_fen(pr.states[-1]), "ply": pr.ply}
            for pr in encoding.extract_pairs(game, game_id=gid)
        ]
    for g in groups:
        if g != "annotation":
            out[g] = [inst.to_json() for inst in out[g]]
    return out


def _eval_job(args):
    index, game, seed, groups = args
    try:
        return index, eval_tasks_for_game(index, game, seed, groups, _worker_evaluator), None
    except (core.IllegalMove, ValueError, engine.EngineError) as e:
        return index, None, f"{type(e).__name__}: {e}"


def synthetic_state_tracking(j: int, seed: int) -> TaskInstance:
    """State-tracking instance from a random game; splits rotate short/medium/long."""
    split = ("short", "medium", "long")[j % 3]
    lo, hi = SYNTHETIC_CUTS[split]
    rng = random.Random(f"{seed}:synthetic:{j}")
    cut = rng.randint(lo, hi)
    game = taskgen.gen_random_game(f"{seed}:synthetic-game:{j}", max_plies=cut + 1)
    cut = min(cut, len(game.moves) - 1)
    inst = taskgen.make_state_tracking(game, cut, seed=seed)
    return _tag(inst, f"state_tracking-syn{j:07d}", f"syn{j:07d}", seed)


def _synthetic_job(args) -> str:
    j, seed = args
    return synthetic_state_tracking(j, seed).to_json()


class _PairView:
    def __init__(self, d):
        self.text = d["text"]
        self.movetext = d["movetext"]
        self.game_id = d["game_id"]
        self.states = ()


def gen_eval_dir(
    pgn_path,
    out_dir,
    seed: int,
    groups: Sequence[str],
    engine_spec: str = "builtin:material",
    openings_path=None,
    synthetic_games: Optional[int] = None,
    workers: int = 1,
    lenient: bool = False,
) -> Tuple[RunStats, List[str]]:
    """Write one ``<group>.jsonl`` per requested group into ``out_dir``."""
    unknown = set(groups) - set(EVAL_GROUPS)
    if unknown:
        raise ValueError(f"unknown task groups {sorted(unknown)}; choose from {EVAL_GROUPS}")
    groups = [g for g in EVAL_GROUPS if g in groups]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = RunStats()
    outputs = []
    game_groups = [g for g in groups if g != "opening"]
    handles = {g: open(out_dir / f"{g}.jsonl", "w", encoding="utf-8", newline="\n") for g in groups}
    try:
        pairs: List[dict] = []
        if pgn_path is not None and game_groups:
            errors: list = []
            jobs = ((i, g, seed, tuple(game_groups)) for i, g in enumerate(iter_games(pgn_path, lenient, errors)))
            for index, result, err in ordered_map(_eval_job, jobs, workers, _init_evaluator, (engine_spec,)):
                stats.games += 1
                if result is None:
                    stats.skipped += 1
                    log.warning("game %d skipped: %s", index, err)
                    continue
                for g in game_groups:
                    if g == "annotation":
                        pairs.extend(result[g])
                        continue
                    for line in result[g]:
                        handles[g].write(line + "\n")
                    stats.add(g, len(result[g]))
            stats.skipped += len(errors)
        if "state_tracking" in groups:
            n_syn = stats.games if synthetic_games is None else synthetic_games
            for line in ordered_map(_synthetic_job, ((j, seed) for j in range(n_syn)), workers):
                handles["state_tracking"].write(line + "\n")
            stats.add("state_tracking", n_syn)
        if "annotation" in groups:
            views = [_PairView(d) for d in pairs]
            if len(views) >= 4:
                for i, d in enumerate(pairs):
                    for brace in (False, True):
                        try:
                            inst = taskgen.make_annotation_mc(views, i, seed=seed, brace_suffix=brace)
                        except ValueError as e:
                            log.warning("annotation %d skipped: %s", i, e)
                            break
                        inst.metadata["fen"] = d["fen"]
                        inst.metadata["ply"] = d["ply"]
                        ident = f"annotation_mc-{d['game_id']}-{d['ply']:03d}-{'brace' if brace else 'plain'}"
                        handles["annotation"].write(_tag(inst, ident, d["game_id"], seed).to_json() + "\n")
                        stats.add("annotation", 1)
            else:
                stats.notes["annotation_pairs_too_few"] = len(views)
        if "opening" in groups:
            if openings_path is None:
                raise ValueError("the opening tasks need an openings table")
            openings = taskgen.read_openings(openings_path)
            for i in range(len(openings)):
                for direction in ("opening2pgn", "pgn2opening"):
                    inst = taskgen.make_opening_mc(openings, i, direction, seed=seed)
                    inst.metadata["id"] = f"{direction}-{i:05d}"
                    handles["opening"].write(inst.to_json() + "\n")
                    stats.add("opening", 1)
    finally:
        _close_evaluator()
        for g, fh in handles.items():
            fh.close()
            outputs.append(str(out_dir / f"{g}.jsonl"))
    return stats, outputs


# --- label ---------------------------------------------------------------------------


def label_positions(in_path, out_path, engine_spec: str = "builtin:material", moves: bool = False) -> RunStats:
    """Add engine evaluation and white winrate (and optionally per-move winrates) to FEN records."""
    stats = RunStats()
    evaluator = engine.open_engine(engine_spec)
    try:
        with open(in_path, encoding="utf-8") as src, open(out_path, "w", encoding="utf-8", newline="\n") as dst:
            for line in src:
                if not line.strip():
                    continue
                rec = json.loads(line)
                stats.games += 1
                p = parse_fen(rec["fen"])
                e = engine.evaluate(evaluator, p)
                rec["eval"] = {"kind": e.kind, "value": e.value, "depth": e.depth}
                rec["white_winrate"] = engine.winrate(e)
                if moves:
                    rec["move_winrates"] = {m.uci: w for m, w in engine.rank_moves(evaluator, p).items()}
                dst.write(json.dumps(rec, ensure_ascii=False) + "\n")
                stats.add("labels", 1)
    finally:
        evaluator.close()
    return stats


# --- encode --------------------------------------------------------------------------


def _encode_job(args):
    index, game, k = args
    cfg = encoding.EncoderConfig(history_k=k)
    gid = f"{index:07d}"
    out = []
    for pr in encoding.extract_pairs(game, cfg, game_id=gid):
        tensor = encoding.encode_history(pr.states, cfg)
        action = encoding.encode_move(pr.states[-1], pr.action)
        out.append((f"{gid}_{pr.ply:03d}", tensor, action, pr))
    return out


def encode_dir(pgn_path, out_dir, k: int = 8, workers: int = 1, lenient: bool = False) -> RunStats:
    """Tensors, action indices and the pair list for every commented move."""
    out_dir = Path(out_dir)
    (out_dir / "tensors").mkdir(parents=True, exist_ok=True)
    stats = RunStats()
    errors: list = []
    jobs = ((i, g, k) for i, g in enumerate(iter_games(pgn_path, lenient, errors)))
    with open(out_dir / "actions.txt", "w", encoding="utf-8", newline="\n") as actions, open(
        out_dir / "pairs.jsonl", "w", encoding="utf-8", newline="\n"
    ) as pairs:
        for items in ordered_map(_encode_job, jobs, workers):
            stats.games += 1
            for name, tensor, action, pr in items:
                rel = f"tensors/{name}.bin"
                encoding.write_tensor(out_dir / rel, tensor)
                actions.write(f"{action}\n")
                rec = {
                    "id": name,
                    "game_id": pr.game_id,
                    "ply": pr.ply,
                    "tensor": rel,
                    "action": action,
                    "move": pr.action.uci,
                    "fen": format_fen(pr.states[-1]),
                    "text": pr.text,
                }
                pairs.write(json.dumps(rec, ensure_ascii=False) + "\n")
                stats.add("pairs", 1)
    stats.skipped = len(errors)
    return stats
