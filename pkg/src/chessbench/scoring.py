"""Response scoring (exact match, multiple-choice grade, Levenshtein) and reports."""

from __future__ import annotations

import json
import math
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .taskgen import TASK_KINDS, TaskInstance


class MissingChoice(KeyError):
    pass


# Per-kind pattern used for the first-token fallback of exact matching.
RESPONSE_PATTERNS: Dict[str, str] = {
    "default": r"\S+",
    "state_tracking": r"\S+",
    "checkmate_in_one": r"\S+",
}

_SAN_CHECK = re.compile(r"[+#]+$")


def _normalize(text: str, strip_check: bool) -> str:
    text = text.strip()
    if text.endswith("."):
        text = text[:-1].rstrip()
    if strip_check:
        text = _SAN_CHECK.sub("", text)
    return text


def exact_string_match(response: str, targets: Sequence[str], pattern: str = r"\S+") -> int:
    """1 if the normalised response, or else its first token, equals a target."""
    strip_check = not any(_SAN_CHECK.search(t) for t in targets)
    wanted = {_normalize(t, strip_check) for t in targets}
    if _normalize(response, strip_check) in wanted:
        return 1
    m = re.search(pattern, response)
    if m is not None and _normalize(m.group(0), strip_check) in wanted:
        return 1
    return 0


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    """Similarity in [0, 1]: 1 - distance / longer length (two empty strings give 1)."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def argmax_first(scores: Mapping[str, float], order: Sequence[str]) -> str:
    best = None
    for c in order:
        if best is None or scores[c] > scores[best]:
            best = c
    return best


def multiple_choice_grade(instance: TaskInstance, model_scores: Mapping[str, float]) -> float:
    """Target score of the choice the model ranks highest (ties go to the earlier choice)."""
    choices = instance.choices
    missing = [c for c in choices if c not in model_scores]
    if missing:
        raise MissingChoice(f"model scores lack choices {missing[:5]}")
    return instance.target_scores[argmax_first(model_scores, choices)]


def closest_choice(response: str, choices: Sequence[str]) -> str:
    """Choice most similar to a free-text response; the first wins ties."""
    text = response.strip()
    sims = {c: normalized_levenshtein(text, c) for c in choices}
    return argmax_first(sims, choices)


@dataclass
class EvalResult:
    task_kind: str
    n: int
    mean: float
    stderr: float
    per_item: List[Tuple[str, float]] = field(default_factory=list)
    split: str = ""
    metric: str = ""

    def render(self) -> str:
        return f"{100 * self.mean:.1f} ± {100 * self.stderr:.1f}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task_kind": self.task_kind,
            "split": self.split,
            "metric": self.metric,
            "n": self.n,
            "mean": self.mean,
            "stderr": self.stderr,
            "display": self.render(),
        }


def aggregate(per_item: Sequence[Tuple[str, float]], task_kind: str = "", split: str = "", metric: str = "") -> EvalResult:
    """Mean and standard error (sample sd / sqrt(n)) of per-item scores."""
    n = len(per_item)
    if n < 1:
        raise ValueError("cannot aggregate zero items")
    scores = [s for _, s in per_item]
    mean = math.fsum(scores) / n
    if n == 1:
        se = 0.0
    else:
        var = math.fsum((s - mean) ** 2 for s in scores) / (n - 1)
        se = math.sqrt(var / n)
    return EvalResult(task_kind, n, mean, se, list(per_item), split, metric)


# --- per-instance scoring --------------------------------------------------------------


def metric_for(instance: TaskInstance) -> str:
    if instance.target_scores is not None:
        return "mc"
    if instance.task_kind in ("uci_to_fen", "pgn_to_fen"):
        return "levenshtein"
    return "esm"


def score_instance(instance: TaskInstance, response: Mapping[str, Any]) -> Tuple[str, float]:
    """Score one response record holding ``response`` text or ``choice_scores``."""
    metric = metric_for(instance)
    if metric == "mc":
        if response.get("choice_scores") is not None:
            return metric, multiple_choice_grade(instance, response["choice_scores"])
        text = response.get("response") or ""
        return metric, instance.target_scores[closest_choice(text, instance.choices)]
    text = response.get("response")
    if text is None:
        raise ValueError(f"response for {instance.id} has no text")
    if metric == "levenshtein":
        return metric, max(normalized_levenshtein(text.strip(), t) for t in instance.targets)
    pattern = RESPONSE_PATTERNS.get(instance.task_kind, RESPONSE_PATTERNS["default"])
    return metric, float(exact_string_match(text, instance.targets, pattern))


class OrphanIds(ValueError):
    def __init__(self, missing_responses: List[str], unknown_responses: List[str]):
        self.missing_responses = missing_responses
        self.unknown_responses = unknown_responses
        super().__init__(
            f"{len(missing_responses)} instances without responses, "
            f"{len(unknown_responses)} responses without instances"
        )


def score_all(
    instances: Sequence[TaskInstance], responses: Iterable[Mapping[str, Any]]
) -> List[Dict[str, Any]]:
    """Per-item records in instance order; raises OrphanIds when ids do not line up."""
    by_id = OrderedDict()
    for r in responses:
        by_id[r["id"]] = r
    ids = [inst.id for inst in instances]
    missing = [i for i in ids if i not in by_id]
    known = set(ids)
    unknown = [i for i in by_id if i not in known]
    if missing or unknown:
        raise OrphanIds(missing, unknown)
    out = []
    for inst in instances:
        metric, score = score_instance(inst, by_id[inst.id])
        out.append(
            {
                "id": inst.id,
                "task_kind": inst.task_kind,
                "split": inst.metadata.get("report_split", inst.metadata.get("split", "all")),
                "metric": metric,
                "score": score,
            }
        )
    return out


def report(items: Sequence[Mapping[str, Any]]) -> List[EvalResult]:
    """Aggregate per-item records per (task kind, split, metric)."""
    groups: Dict[Tuple[str, str, str], List[Tuple[str, float]]] = OrderedDict()
    for it in items:
        groups.setdefault((it["task_kind"], it["split"], it["metric"]), []).append((it["id"], it["score"]))
    kind_rank = {k: i for i, k in enumerate(TASK_KINDS)}
    keys = sorted(groups, key=lambda k: (kind_rank.get(k[0], len(kind_rank)), _split_key(k[1]), k[2]))
    return [aggregate(groups[k], *k) for k in keys]


_SPLIT_ORDER = ["Real Short", "Real Med", "Real Long", "Syn Short", "Syn Med", "Syn Long"]


def _split_key(split: str):
    if split in _SPLIT_ORDER:
        return (0, _SPLIT_ORDER.index(split), "")
    m = re.match(r"^(\d+)-(\d+)$", split)
    if m:
        return (1, int(m.group(1)), split)
    return (2, 0, split)


def render_table(results: Sequence[EvalResult]) -> str:
    rows = [("task", "split", "metric", "n", "score")]
    rows += [(r.task_kind, r.split, r.metric, str(r.n), r.render()) for r in results]
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_tsv(results: Sequence[EvalResult]) -> str:
    lines = ["task_kind\tsplit\tmetric\tn\tmean\tstderr\tdisplay"]
    for r in results:
        lines.append(f"{r.task_kind}\t{r.split}\t{r.metric}\t{r.n}\t{r.mean:.6f}\t{r.stderr:.6f}\t{r.render()}")
    return "\n".join(lines) + "\n"


def render_json(results: Sequence[EvalResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2, ensure_ascii=False) + "\n"
