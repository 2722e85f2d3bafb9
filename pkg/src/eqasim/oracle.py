"""Oracle suite: scripted (deterministic, offline) and remote (wire protocol) judges.

Five capabilities sit behind one interface: semantic scoring, region
classification, stop decisions, answering, and grading. Score ranges are
enforced at this boundary no matter which implementation produced them.
The scripted grader is a deterministic test proxy, not a reimplementation of
model-based grading.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field

import requests


class OracleError(Exception):
    pass


class OracleTransportError(OracleError):
    """Endpoint unreachable after retries."""


class OracleProtocolError(OracleError):
    """Response violated the wire schema or score ranges."""


SIGMA_VALUES = (1, 2, 3, 4, 5)
DELTA_VALUES = (0.0, 0.5, 1.0)


def validate_sigma(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value not in SIGMA_VALUES:
        raise OracleProtocolError(f"sigma out of range: {value!r} (must be an integer 1..5)")
    return value


def validate_delta(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OracleProtocolError(f"delta out of range: {value!r} (must be 0, 0.5, or 1)")
    v = float(value)
    if v not in DELTA_VALUES:
        raise OracleProtocolError(f"delta out of range: {value!r} (must be 0, 0.5, or 1)")
    return v


def validate_unit(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OracleProtocolError(f"{name} must be a number in [0,1], got {value!r}")
    v = float(value)
    if not (math.isfinite(v) and 0.0 <= v <= 1.0):
        raise OracleProtocolError(f"{name} out of range: {value!r} (must be in [0,1])")
    return v


@dataclass(frozen=True)
class ObservationPayload:
    """What the oracle sees for one judgment call.

    Exactly one side is populated: ground-truth fields (scripted oracles) or an
    opaque image reference (remote oracles).
    """

    question: str
    pose: tuple[float, float, float]
    sample_cells: tuple[tuple[int, int], ...] = ()
    # ground-truth mode
    visible_region_counts: dict[str, int] | None = None
    visible_free_count: int | None = None
    region_rep_cells: dict[str, tuple[int, int]] | None = None
    sample_region_types: tuple[str | None, ...] | None = None
    target_visible: bool | None = None
    # remote mode
    image_ref: str | None = None

    def __post_init__(self):
        gt = self.visible_region_counts is not None
        if gt == (self.image_ref is not None):
            raise ValueError("payload must be ground-truth or image mode, not both/neither")
        if gt and (self.visible_free_count is None or self.target_visible is None
                   or self.region_rep_cells is None or self.sample_region_types is None):
            raise ValueError("ground-truth payload is missing fields")

    @property
    def is_ground_truth(self) -> bool:
        return self.image_ref is None


# -- text utilities shared by the scripted judges --------------------------------

_WORD_RE = re.compile(r"[a-z0-9]+")


def normalize_text(text: str) -> str:
    return " ".join(_WORD_RE.findall(text.lower()))


def token_f1(gold: str, answer: str) -> float:
    """Multiset token-overlap F1 between two strings."""
    gold_tokens = normalize_text(gold).split()
    answer_tokens = normalize_text(answer).split()
    if not gold_tokens or not answer_tokens:
        return 0.0
    counts: dict[str, int] = {}
    for t in gold_tokens:
        counts[t] = counts.get(t, 0) + 1
    overlap = 0
    for t in answer_tokens:
        if counts.get(t, 0) > 0:
            counts[t] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0
    precision = overlap / len(answer_tokens)
    recall = overlap / len(gold_tokens)
    return 2.0 * precision * recall / (precision + recall)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


# -- scripted oracle --------------------------------------------------------------

@dataclass(frozen=True)
class Rulebook:
    """Keyword table driving every scripted judgment.

    keyword_regions maps a question keyword to the region types it makes
    relevant, in priority order; baseline_score is the relevance assigned to
    everything else.
    """

    keyword_regions: tuple[tuple[str, tuple[str, ...]], ...] = ()
    baseline_score: float = 0.1

    @classmethod
    def from_mapping(cls, mapping: dict[str, list[str]],
                     baseline_score: float = 0.1) -> "Rulebook":
        return cls(tuple((k, tuple(v)) for k, v in mapping.items()), baseline_score)

    @classmethod
    def from_json(cls, text: str) -> "Rulebook":
        data = json.loads(text)
        return cls.from_mapping(data.get("relevant_regions", {}),
                                data.get("baseline_score", 0.1))

    def to_json(self) -> str:
        return json.dumps({
            "relevant_regions": {k: list(v) for k, v in self.keyword_regions},
            "baseline_score": self.baseline_score,
        }, indent=2) + "\n"

    def regions_for(self, question: str) -> list[str]:
        """Region types relevant to a question, priority order, deduplicated."""
        padded = f" {normalize_text(question)} "
        out: list[str] = []
        for keyword, regions in self.keyword_regions:
            if f" {normalize_text(keyword)} " in padded:
                for r in regions:
                    if r not in out:
                        out.append(r)
        return out


class ScriptedOracle:
    """Deterministic rulebook-driven oracle for tests and offline evaluation.

    Pure function of (payload, rulebook, answer_key); identical inputs give
    identical outputs in any process.
    """

    payload_mode = "ground_truth"

    def __init__(self, rulebook: Rulebook, answer_key: dict[str, str] | None = None):
        self.rulebook = rulebook
        self.answer_key = dict(answer_key or {})

    def semantic_scores(self, payload: ObservationPayload) -> tuple[list[float], float]:
        self._require_ground_truth(payload)
        relevant = set(self.rulebook.regions_for(payload.question))
        base = self.rulebook.baseline_score
        v_l = [1.0 if rtype is not None and rtype in relevant else base
               for rtype in payload.sample_region_types]
        v_g = base
        for rtype in payload.visible_region_counts:
            if rtype in relevant:
                v_g = 1.0
                break
        return v_l, v_g

    def classify_region(self, payload: ObservationPayload
                        ) -> tuple[str, float, tuple[int, int] | None]:
        self._require_ground_truth(payload)
        counts = payload.visible_region_counts
        if not counts or not payload.visible_free_count:
            return "unknown", 0.0, None
        rtype = max(sorted(counts), key=lambda t: counts[t])
        confidence = min(1.0, counts[rtype] / payload.visible_free_count)
        return rtype, confidence, payload.region_rep_cells.get(rtype)

    def should_stop(self, payload: ObservationPayload) -> bool:
        self._require_ground_truth(payload)
        return bool(payload.target_visible)

    def answer(self, payload: ObservationPayload) -> str:
        self._require_ground_truth(payload)
        if payload.target_visible:
            key = normalize_text(payload.question)
            if key in self.answer_key:
                return self.answer_key[key]
        return "unknown"

    def grade(self, question: str, gold: str, answer: str,
              payload: ObservationPayload) -> tuple[int, float]:
        """Deterministic grading proxy: exact-match/token-F1 accuracy, visibility grounding."""
        self._require_ground_truth(payload)
        norm_gold = normalize_text(gold)
        norm_answer = normalize_text(answer)
        if norm_gold == norm_answer:
            sigma = 5
        else:
            sigma = max(1, min(5, _round_half_away(5.0 * token_f1(gold, answer))))
        if payload.target_visible:
            delta = 1.0 if self._key_token_match(norm_gold, norm_answer) else 0.5
        else:
            delta = 0.0
        return validate_sigma(sigma), validate_delta(delta)

    def prioritize_regions(self, question: str) -> list[str]:
        return self.rulebook.regions_for(question)

    @staticmethod
    def _key_token_match(norm_gold: str, norm_answer: str) -> bool:
        # shared content token of 3+ characters counts as describing the target
        gold_tokens = {t for t in norm_gold.split() if len(t) >= 3}
        return any(t in gold_tokens for t in norm_answer.split())

    @staticmethod
    def _require_ground_truth(payload: ObservationPayload) -> None:
        if not payload.is_ground_truth:
            raise ValueError("scripted oracle needs a ground-truth payload")


def answer_key_from_items(items) -> dict[str, str]:
    """Build the scripted answer key (normalized question -> gold) from QA items."""
    return {normalize_text(item.question): item.gold_answer for item in items}


# -- wire protocol -----------------------------------------------------------------

ENDPOINTS = ("semantic_scores", "classify_region", "should_stop", "answer", "grade")


def _require(obj: dict, key: str, types, endpoint: str):
    if key not in obj:
        raise OracleProtocolError(f"{endpoint}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise OracleProtocolError(f"{endpoint}: field {key!r} has wrong type")
    if not isinstance(value, types):
        raise OracleProtocolError(f"{endpoint}: field {key!r} has wrong type")
    return value


def _point_pair(obj, endpoint: str, name: str) -> tuple[int, int]:
    if not isinstance(obj, dict):
        raise OracleProtocolError(f"{endpoint}: {name} must be an object with x, y")
    for k in ("x", "y"):
        if k not in obj or isinstance(obj[k], bool) or not isinstance(obj[k], int):
            raise OracleProtocolError(f"{endpoint}: {name}.{k} must be an integer")
    return int(obj["x"]), int(obj["y"])


def validate_request(endpoint: str, body: dict) -> dict:
    """Check a wire request against the endpoint schema; returns the body."""
    if endpoint not in ENDPOINTS:
        raise OracleProtocolError(f"unknown endpoint {endpoint!r}")
    if not isinstance(body, dict):
        raise OracleProtocolError(f"{endpoint}: request body must be an object")
    _require(body, "question", str, endpoint)
    _require(body, "image_ref", str, endpoint)
    if endpoint == "semantic_scores":
        points = _require(body, "sample_points", list, endpoint)
        for p in points:
            _point_pair(p, endpoint, "sample_points[]")
    if endpoint == "grade":
        _require(body, "gold", str, endpoint)
        _require(body, "answer", str, endpoint)
    return body


def validate_response(endpoint: str, body, n_samples: int | None = None) -> dict:
    """Check a wire response against the endpoint schema, ranges included."""
    if not isinstance(body, dict):
        raise OracleProtocolError(f"{endpoint}: response body must be an object")
    if endpoint == "semantic_scores":
        v_l = _require(body, "v_l", list, endpoint)
        for i, v in enumerate(v_l):
            validate_unit(v, f"v_l[{i}]")
        validate_unit(_require(body, "v_g", (int, float), endpoint), "v_g")
        if n_samples is not None and len(v_l) != n_samples:
            raise OracleProtocolError(
                f"semantic_scores: expected {n_samples} v_l values, got {len(v_l)}")
    elif endpoint == "classify_region":
        _require(body, "region_type", str, endpoint)
        validate_unit(_require(body, "confidence", (int, float), endpoint), "confidence")
        _point_pair(body.get("rep_point"), endpoint, "rep_point")
    elif endpoint == "should_stop":
        _require(body, "stop", bool, endpoint)
    elif endpoint == "answer":
        _require(body, "answer", str, endpoint)
    elif endpoint == "grade":
        validate_sigma(body.get("sigma"))
        validate_delta(body.get("delta"))
    else:
        raise OracleProtocolError(f"unknown endpoint {endpoint!r}")
    return body


class RemoteOracle:
    """HTTP client for the oracle wire protocol, with retries and range validation.

    Out-of-range scores are rejected, never clamped: silent clamping would mask
    bridge bugs. Region prioritization has no wire endpoint and is computed
    client-side from the rulebook keyword table.
    """

    payload_mode = "image"

    def __init__(self, base_url: str, token: str | None = None,
                 rulebook: Rulebook | None = None, retry_max: int = 3,
                 backoff_base_s: float = 0.5, timeout_s: float = 30.0,
                 pool_size: int = 8, sleep=time.sleep):
        self.base_url = base_url.rstrip("/")
        self.retry_max = retry_max
        self.backoff_base_s = backoff_base_s
        self.timeout_s = timeout_s
        self.rulebook = rulebook or Rulebook()
        self._sleep = sleep
        self._session = requests.Session()
        adapter = requests.adapters.HTTPAdapter(pool_connections=pool_size,
                                                pool_maxsize=pool_size)
        self._session.mount("http://", adapter)
        self._session.mount("https://", adapter)
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"

    def close(self) -> None:
        self._session.close()

    def _post(self, endpoint: str, body: dict) -> dict:
        url = f"{self.base_url}/v1/{endpoint}"
        last_error: Exception | None = None
        for attempt in range(self.retry_max + 1):
            if attempt:
                self._sleep(self.backoff_base_s * (2.0 ** (attempt - 1)))
            try:
                resp = self._session.post(url, json=body, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if 500 <= resp.status_code < 600:
                last_error = OracleTransportError(
                    f"{endpoint}: server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise OracleProtocolError(
                    f"{endpoint}: unexpected status {resp.status_code}: "
                    f"{resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise OracleProtocolError(f"{endpoint}: response is not valid JSON") from exc
        raise OracleTransportError(
            f"{endpoint}: transport failed after {self.retry_max + 1} attempts: {last_error}")

    @staticmethod
    def _image_ref(payload: ObservationPayload) -> str:
        if payload.is_ground_truth:
            raise ValueError("remote oracle needs an image payload")
        return payload.image_ref

    def semantic_scores(self, payload: ObservationPayload) -> tuple[list[float], float]:
        body = {
            "question": payload.question,
            "image_ref": self._image_ref(payload),
            "sample_points": [{"x": x, "y": y} for x, y in payload.sample_cells],
        }
        resp = validate_response("semantic_scores", self._post("semantic_scores", body),
                                 n_samples=len(payload.sample_cells))
        return [float(v) for v in resp["v_l"]], float(resp["v_g"])

    def classify_region(self, payload: ObservationPayload
                        ) -> tuple[str, float, tuple[int, int] | None]:
        body = {"question": payload.question, "image_ref": self._image_ref(payload)}
        resp = validate_response("classify_region", self._post("classify_region", body))
        rep = resp["rep_point"]
        return resp["region_type"], float(resp["confidence"]), (int(rep["x"]), int(rep["y"]))

    def should_stop(self, payload: ObservationPayload) -> bool:
        body = {"question": payload.question, "image_ref": self._image_ref(payload)}
        resp = validate_response("should_stop", self._post("should_stop", body))
        return bool(resp["stop"])

    def answer(self, payload: ObservationPayload) -> str:
        body = {"question": payload.question, "image_ref": self._image_ref(payload)}
        resp = validate_response("answer", self._post("answer", body))
        return resp["answer"]

    def grade(self, question: str, gold: str, answer: str,
              payload: ObservationPayload) -> tuple[int, float]:
        body = {"question": question, "gold": gold, "answer": answer,
                "image_ref": self._image_ref(payload)}
        resp = validate_response("grade", self._post("grade", body))
        return validate_sigma(resp["sigma"]), validate_delta(resp["delta"])

    def prioritize_regions(self, question: str) -> list[str]:
        return self.rulebook.regions_for(question)
