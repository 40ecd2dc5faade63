"""Command-line entry point: ``chessbench <command> ...``.

Exit codes: 0 success, 1 partial success (some input skipped, or a perft
mismatch), 2 fatal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__, core, modelclient, pipeline, scoring
from .notation import FenError, PgnError, parse_fen
from .taskgen import read_jsonl

log = logging.getLogger("chessbench")

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2

# Hard defaults per command; a config file overrides these, flags override both.
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "global": {"seed": 0, "workers": None, "lenient": False},
    "perft": {"fen": core.STARTING_FEN, "depth": 3},
    "gen-modeling": {"per_band": 10000},
    "gen-eval": {
        "tasks": list(pipeline.EVAL_GROUPS),
        "engine": "builtin:material",
        "openings": None,
        "synthetic": None,
    },
    "label": {"engine": "builtin:material", "moves": False},
    "run-eval": {"responder": None, "endpoint": None, "engine": "builtin:material", "max_in_flight": 4},
    "score": {"figure": True},
    "encode": {"k": 8},
}


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    inputs: List[str]
    outputs: List[str]
    started: str
    finished: str = ""
    tool_version: str = __version__
    settings: Dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0
    stats: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n"


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def load_config(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return data


def resolve_settings(args: argparse.Namespace, config: Dict[str, Any]) -> Dict[str, Any]:
    """Flags beat config entries, which beat built-in defaults."""
    command = args.command
    merged: Dict[str, Any] = {}
    for scope in ("global", command):
        merged.update(DEFAULTS.get(scope, {}))
    merged.update({k: v for k, v in config.items() if not isinstance(v, dict)})
    merged.update(config.get(command, {}) or {})
    for key, value in vars(args).items():
        if key in ("command", "config", "func", "quiet") or value is None:
            continue
        merged[key] = value
    if merged.get("workers") is None:
        merged["workers"] = pipeline.default_workers()
    return merged


def config_hash(settings: Dict[str, Any]) -> str:
    blob = json.dumps(settings, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _exit_for(stats: pipeline.RunStats) -> int:
    if stats.skipped:
        log.warning("%d input game(s) skipped", stats.skipped)
        return EXIT_PARTIAL
    return EXIT_OK


# --- commands --------------------------------------------------------------------------


def cmd_perft(s, manifest: RunManifest) -> int:
    p = parse_fen(s["fen"])
    expect = s.get("expect") or []
    code = EXIT_OK
    for depth in range(1, s["depth"] + 1):
        n = core.perft(p, depth)
        print(n)
        if depth <= len(expect) and expect[depth - 1] != n:
            log.error("depth %d: expected %d, got %d", depth, expect[depth - 1], n)
            code = EXIT_PARTIAL
    return code


def cmd_gen_modeling(s, manifest: RunManifest) -> int:
    stats = pipeline.gen_modeling_file(s["pgn"], s["out"], s["seed"], s["per_band"], s["workers"], s["lenient"])
    manifest.stats = asdict(stats)
    return _exit_for(stats)


def cmd_gen_eval(s, manifest: RunManifest) -> int:
    tasks = s["tasks"]
    if isinstance(tasks, str):
        tasks = [t for t in tasks.split(",") if t]
    stats, outputs = pipeline.gen_eval_dir(
        s.get("pgn"),
        s["out"],
        seed=s["seed"],
        groups=tasks,
        engine_spec=s["engine"],
        openings_path=s.get("openings"),
        synthetic_games=s.get("synthetic"),
        workers=s["workers"],
        lenient=s["lenient"],
    )
    manifest.outputs = outputs
    manifest.stats = asdict(stats)
    return _exit_for(stats)


def cmd_label(s, manifest: RunManifest) -> int:
    stats = pipeline.label_positions(s["positions"], s["out"], s["engine"], moves=s["moves"])
    manifest.stats = asdict(stats)
    return EXIT_OK


def cmd_run_eval(s, manifest: RunManifest) -> int:
    instances = read_jsonl(s["tasks_file"])
    if s.get("endpoint"):
        profile = load_config(s["endpoint"])
        endpoint = modelclient.ModelEndpoint.from_dict(profile)
        client = modelclient.ModelClient(endpoint)
        respond, in_flight = client.respond, endpoint.max_in_flight
    elif s.get("responder"):
        from . import engine

        evaluator = engine.open_engine(s["engine"]) if s["responder"] == "engine_best" else None
        respond = modelclient.builtin_responder(s["responder"], s["seed"], evaluator)
        # UCI sessions are single-owner; only the material evaluator may be shared
        in_flight = s["max_in_flight"] if evaluator is None or isinstance(evaluator, engine.MaterialEvaluator) else 1
        client = evaluator
    else:
        raise ValueError("run-eval needs --responder or --endpoint")
    try:
        responses = modelclient.run_responses(instances, respond, in_flight)
    finally:
        if client is not None:
            client.close()
    with open(s["out"], "w", encoding="utf-8", newline="\n") as fh:
        for r in responses:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    manifest.stats = {"responses": len(responses)}
    return EXIT_OK


def _read_responses(path) -> List[Dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def cmd_score(s, manifest: RunManifest, quiet: bool = False) -> int:
    instances = read_jsonl(s["tasks_file"])
    responses = _read_responses(s["responses"])
    try:
        items = scoring.score_all(instances, responses)
    except scoring.OrphanIds as e:
        for i in e.missing_responses:
            print(f"orphan instance (no response): {i}", file=sys.stderr)
        for i in e.unknown_responses:
            print(f"orphan response (no instance): {i}", file=sys.stderr)
        raise
    results = scoring.report(items)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "items.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for it in items:
            fh.write(json.dumps(it, ensure_ascii=False) + "\n")
    table = scoring.render_table(results)
    (out / "report.txt").write_text(table, encoding="utf-8")
    (out / "report.tsv").write_text(scoring.render_tsv(results), encoding="utf-8")
    (out / "report.json").write_text(scoring.render_json(results), encoding="utf-8")
    manifest.outputs = [str(out / n) for n in ("items.jsonl", "report.txt", "report.tsv", "report.json")]
    if s["figure"] and results:
        from .plotting import plot_report

        plot_report(results, out / "report.png")
        manifest.outputs.append(str(out / "report.png"))
    if not quiet:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_encode(s, manifest: RunManifest) -> int:
    stats = pipeline.encode_dir(s["pgn"], s["out"], k=s["k"], workers=s["workers"], lenient=s["lenient"])
    manifest.stats = asdict(stats)
    return _exit_for(stats)


# --- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--config", default=None, help="YAML or JSON file with default settings")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    common.add_argument("--lenient", action="store_true", default=None, help="skip malformed games instead of failing")
    common.add_argument("--quiet", action="store_true", help="only print errors")

    parser = argparse.ArgumentParser(prog="chessbench", description="Chess language-model benchmark toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perft", parents=[common], help="count leaf nodes of the legal move tree")
    p.add_argument("--fen", default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--expect", type=int, nargs="+", default=None, help="expected counts for depth 1, 2, ...")
    p.set_defaults(func=cmd_perft)

    p = sub.add_parser("gen-modeling", parents=[common], help="synthetic chess-modeling dataset")
    p.add_argument("pgn")
    p.add_argument("out", help="output JSONL file")
    p.add_argument("--per-band", type=int, default=None)
    p.set_defaults(func=cmd_gen_modeling)

    p = sub.add_parser("gen-eval", parents=[common], help="evaluation task files")
    p.add_argument("pgn", nargs="?", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--openings", default=None, help="TSV of eco, name, pgn")
    p.add_argument("--tasks", default=None, help=f"comma list from {','.join(pipeline.EVAL_GROUPS)}")
    p.add_argument("--engine", default=None, help="builtin:material or uci:/path/to/engine")
    p.add_argument("--synthetic", type=int, default=None, help="random games for synthetic state tracking")
    p.set_defaults(func=cmd_gen_eval)

    p = sub.add_parser("label", parents=[common], help="engine winrates for FEN records")
    p.add_argument("positions", help="JSONL with a 'fen' field per line")
    p.add_argument("out")
    p.add_argument("--engine", default=None)
    p.add_argument("--moves", action="store_true", default=None, help="also rank every legal move")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("run-eval", parents=[common], help="collect model responses")
    p.add_argument("tasks_file")
    p.add_argument("out", help="responses JSONL")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--responder", choices=modelclient.RESPONDER_KINDS, default=None)
    group.add_argument("--endpoint", default=None, help="endpoint profile (YAML/JSON)")
    p.add_argument("--engine", default=None, help="engine for the engine_best responder")
    p.add_argument("--max-in-flight", type=int, default=None)
    p.set_defaults(func=cmd_run_eval)

    p = sub.add_parser("score", parents=[common], help="score responses and write a report")
    p.add_argument("tasks_file")
    p.add_argument("responses")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--no-figure", dest="figure", action="store_false", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("encode", parents=[common], help="board tensors and action indices for annotated games")
    p.add_argument("pgn")
    p.add_argument("out", help="output directory")
    p.add_argument("--k", type=int, default=None, help="history length")
    p.set_defaults(func=cmd_encode)
    return parser


def _manifest_path(command: str, s: Dict[str, Any]) -> Optional[Path]:
    out = s.get("out")
    if out is None:
        return None
    out = Path(out)
    if command in ("gen-eval", "score", "encode"):
        return out / "manifest.json"
    return out.with_name(out.name + ".manifest.json")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger("httpx").setLevel(logging.WARNING)
    try:
        config = load_config(args.config)
        s = resolve_settings(args, config)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    inputs = [str(s[k]) for k in ("pgn", "openings", "positions", "tasks_file", "responses") if s.get(k)]
    manifest = RunManifest(
        command=args.command,
        config_hash=config_hash(s),
        seed=s["seed"],
        inputs=inputs,
        outputs=[str(s["out"])] if s.get("out") else [],
        started=_now(),
        settings=s,
    )
    try:
        if args.command == "score":
            code = cmd_score(s, manifest, quiet=args.quiet)
        else:
            code = args.func(s, manifest)
    except FenError as e:
        print(f"error: invalid FEN ({e.field}): {e}", file=sys.stderr)
        code = EXIT_FATAL
    except PgnError as e:
        print(f"error: PGN line {e.line}, column {e.column}: {e}", file=sys.stderr)
        code = EXIT_FATAL
    except scoring.OrphanIds as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_FATAL
    except (OSError, ValueError, RuntimeError, KeyError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        code = EXIT_FATAL
    manifest.finished = _now()
    manifest.exit_code = code
    path = _manifest_path(args.command, s)
    if path is not None and path.parent.exists():
        path.write_text(manifest.to_json(), encoding="utf-8")
    elif not args.quiet:
        sys.stderr.write(manifest.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
