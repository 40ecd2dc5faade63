"""Model responses: an HTTP completion client and offline built-in responders.

Response records are dicts with an ``id`` plus either ``response`` (text) or
``choice_scores`` (choice -> real).
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import httpx

from . import core, engine
from .notation import format_san, parse_fen
from .scoring import closest_choice
from .taskgen import TaskInstance, choice_san

log = logging.getLogger(__name__)

DEFAULT_PARAMS = {"max_new_tokens": 128, "top_k": 50, "top_p": 0.7, "temperature": 0.7}
TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class ModelError(RuntimeError):
    pass


class HttpError(ModelError):
    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(f"HTTP {status}{': ' + message if message else ''}")


class Timeout(ModelError):
    pass


class RateLimited(ModelError):
    pass


@dataclass
class ModelEndpoint:
    base_url: str
    token_env: Optional[str] = None  # name of the environment variable holding the token
    params: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_PARAMS))
    mode: str = "generate"  # or "choice_rank"
    max_attempts: int = 3
    backoff_ms: int = 200
    rate_limit: Optional[float] = None  # requests per second
    timeout_s: float = 60.0
    max_in_flight: int = 4
    template: str = "{}"
    complete_path: str = "/complete"
    score_path: str = "/score"
    prompt_field: str = "prompt"
    continuation_field: str = "continuation"
    params_field: str = "params"
    text_field: str = "text"
    score_field: str = "score"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.mode not in ("generate", "choice_rank"):
            raise ValueError(f"bad mode {self.mode!r}")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ModelEndpoint":
        d = dict(d)
        if "model" in d and "template" not in d:
            d["template"] = prompt_template(d.pop("model"))
        d.pop("model", None)
        params = {**DEFAULT_PARAMS, **d.pop("params", {})}
        return cls(params=params, **d)


@lru_cache(maxsize=None)
def _templates() -> Dict[str, str]:
    text = resources.files("chessbench").joinpath("data/prompt_templates.json").read_text("utf-8")
    return json.loads(text)


def prompt_template(model: str) -> str:
    try:
        return _templates()[model]
    except KeyError:
        raise ValueError(f"no prompt template for model {model!r}; known: {sorted(_templates())}") from None


def build_prompt(instance: TaskInstance, template: str = "{}") -> str:
    """prefix + newline + input, plus " {" when the instance asks for the brace suffix."""
    text = instance.input
    if instance.prompt_prefix:
        text = instance.prompt_prefix + "\n" + text
    if instance.metadata.get("brace_suffix"):
        text += " {"
    return template.replace("{}", text, 1)


class ModelClient:
    """Thread-safe HTTP client for one endpoint."""

    def __init__(self, endpoint: ModelEndpoint, transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        headers = {}
        if endpoint.token_env:
            token = os.environ.get(endpoint.token_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        self._http = httpx.Client(
            base_url=endpoint.base_url, headers=headers, timeout=endpoint.timeout_s, transport=transport
        )
        self._lock = threading.Lock()
        self._next_slot = 0.0

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _throttle(self) -> None:
        if not self.endpoint.rate_limit:
            return
        gap = 1.0 / self.endpoint.rate_limit
        with self._lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(now, self._next_slot) + gap
        if wait > 0:
            time.sleep(wait)

    def _post(self, path: str, payload: Dict[str, Any], instance_id: Optional[str]) -> Dict[str, Any]:
        ep = self.endpoint
        last: Optional[Exception] = None
        for attempt in range(1, ep.max_attempts + 1):
            self._throttle()
            log.info("request id=%s attempt=%d path=%s payload=%s", instance_id, attempt, path, json.dumps(payload))
            try:
                resp = self._http.post(path, json=payload)
            except httpx.TimeoutException as e:
                last = Timeout(f"request timed out: {e}")
            except httpx.TransportError as e:
                last = HttpError(0, str(e))
            else:
                if resp.status_code == 200:
                    body = resp.json()
                    log.info("response id=%s body=%s", instance_id, json.dumps(body))
                    return body
                if resp.status_code == 429:
                    last = RateLimited("endpoint kept answering 429")
                else:
                    last = HttpError(resp.status_code, resp.text[:200])
                if resp.status_code not in TRANSIENT_STATUS:
                    raise last
            if attempt < ep.max_attempts:
                time.sleep(ep.backoff_ms / 1000 * 2 ** (attempt - 1))
        raise last

    def complete(self, prompt: str, instance_id: Optional[str] = None) -> str:
        ep = self.endpoint
        body = self._post(ep.complete_path, {ep.prompt_field: prompt, ep.params_field: ep.params}, instance_id)
        return str(body[ep.text_field])

    def score(self, prompt: str, continuation: str, instance_id: Optional[str] = None) -> float:
        ep = self.endpoint
        body = self._post(ep.score_path, {ep.prompt_field: prompt, ep.continuation_field: continuation}, instance_id)
        return float(body[ep.score_field])

    def rank_choices(self, instance: TaskInstance) -> Dict[str, float]:
        if instance.target_scores is None:
            raise ValueError("instance has no choices")
        prompt = build_prompt(instance, self.endpoint.template)
        if self.endpoint.mode == "choice_rank":
            return {c: self.score(prompt, c, instance.id) for c in instance.choices}
        text = self.complete(prompt, instance.id)
        pick = closest_choice(text, instance.choices)
        return {c: 1.0 if c == pick else 0.0 for c in instance.choices}

    def respond(self, instance: TaskInstance) -> Dict[str, Any]:
        if instance.target_scores is not None:
            return {"id": instance.id, "choice_scores": self.rank_choices(instance)}
        prompt = build_prompt(instance, self.endpoint.template)
        return {"id": instance.id, "response": self.complete(prompt, instance.id)}


def complete(endpoint: ModelEndpoint, prompt: str) -> str:
    with ModelClient(endpoint) as c:
        return c.complete(prompt)


def rank_choices(endpoint: ModelEndpoint, instance: TaskInstance) -> Dict[str, float]:
    with ModelClient(endpoint) as c:
        return c.rank_choices(instance)


# --- built-in responders --------------------------------------------------------------

RESPONDER_KINDS = ("random_legal", "engine_best", "oracle", "uniform_choice")
_POLICY_KINDS = ("general_policy", "checkmate_in_one")


class BuiltinResponder:
    """Offline responder; state is fixed at construction, so instances can be shared."""

    def __init__(self, kind: str, seed: int = 0, evaluator=None):
        if kind not in RESPONDER_KINDS:
            raise ValueError(f"unknown responder {kind!r}; choose from {RESPONDER_KINDS}")
        self.kind = kind
        self.seed = seed
        self.evaluator = evaluator if evaluator is not None else engine.MaterialEvaluator()

    def _rng(self, instance: TaskInstance) -> random.Random:
        return random.Random(f"{self.seed}:{self.kind}:{instance.id}")

    def _move_label(self, instance: TaskInstance, p, m) -> str:
        return choice_san(p, m) if instance.task_kind == "checkmate_in_one" else format_san(p, m)

    def _answer_move(self, instance: TaskInstance, move_label: str) -> Dict[str, Any]:
        if instance.target_scores is not None:
            return {"id": instance.id, "choice_scores": {c: 1.0 if c == move_label else 0.0 for c in instance.choices}}
        return {"id": instance.id, "response": move_label}

    def __call__(self, instance: TaskInstance) -> Dict[str, Any]:
        return getattr(self, "_" + self.kind)(instance)

    def _oracle(self, instance: TaskInstance) -> Dict[str, Any]:
        if instance.target_scores is not None:
            return {"id": instance.id, "choice_scores": dict(instance.target_scores)}
        return {"id": instance.id, "response": instance.targets[0]}

    def _uniform_choice(self, instance: TaskInstance) -> Dict[str, Any]:
        rng = self._rng(instance)
        if instance.target_scores is not None:
            pick = rng.choice(instance.choices)
            return {"id": instance.id, "choice_scores": {c: 1.0 if c == pick else 0.0 for c in instance.choices}}
        return self._random_legal(instance)

    def _random_legal(self, instance: TaskInstance) -> Dict[str, Any]:
        rng = self._rng(instance)
        fen = instance.metadata.get("fen")
        if instance.task_kind in _POLICY_KINDS and fen:
            p = parse_fen(fen)
            m = rng.choice(core.legal_moves(p))
            return self._answer_move(instance, self._move_label(instance, p, m))
        if instance.task_kind == "state_tracking" and fen:
            p = parse_fen(fen)
            src = core.parse_square(instance.metadata["from_square"])
            dests = sorted({m.to_square for m in core.legal_moves(p) if m.from_square == src})
            return {"id": instance.id, "response": core.square_name(rng.choice(dests))}
        if instance.target_scores is not None:
            pick = rng.choice(instance.choices)
            return {"id": instance.id, "choice_scores": {c: 1.0 if c == pick else 0.0 for c in instance.choices}}
        return {"id": instance.id, "response": ""}

    def _engine_best(self, instance: TaskInstance) -> Dict[str, Any]:
        fen = instance.metadata.get("fen")
        if instance.task_kind in _POLICY_KINDS and fen:
            p = parse_fen(fen)
            m = engine.best_move(self.evaluator, p)
            return self._answer_move(instance, self._move_label(instance, p, m))
        return self._random_legal(instance)


def builtin_responder(kind: str, seed: int = 0, evaluator=None) -> BuiltinResponder:
    return BuiltinResponder(kind, seed, evaluator)


def run_responses(
    instances: Sequence[TaskInstance],
    respond: Callable[[TaskInstance], Dict[str, Any]],
    max_in_flight: int = 4,
) -> List[Dict[str, Any]]:
    """Responses in instance order, with at most ``max_in_flight`` concurrent calls."""
    if max_in_flight <= 1:
        return [respond(inst) for inst in instances]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(respond, instances))
