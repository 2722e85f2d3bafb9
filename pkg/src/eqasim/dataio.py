"""Readers and writers for QA items, episode traces, and metric reports.

Records are line-delimited JSON with canonical serialization: fixed key order,
shortest round-trip decimals, no NaN or infinities anywhere. Identical inputs
always produce byte-identical output.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

from .episode import EpisodeResult, StepRecord
from .scene import AtomicAction, Pose, TrajectorySpec

QUESTION_TYPES = ("state", "knowledge", "location", "attribute",
                  "counting", "existence", "object")

TRACE_VERSION = 1

_ACTION_LETTERS = {AtomicAction.MOVE_FORWARD: "F",
                   AtomicAction.TURN_LEFT: "L",
                   AtomicAction.TURN_RIGHT: "R"}
_LETTER_ACTIONS = {v: k for k, v in _ACTION_LETTERS.items()}


class DataFormatError(ValueError):
    pass


def canonical_dumps(obj) -> str:
    """Canonical single-line JSON: insertion key order, no NaN, shortest floats."""
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _reject_constants(name):
    raise DataFormatError(f"non-finite numeric {name!r} is not allowed")


def parse_json_line(line: str, line_no: int):
    try:
        return json.loads(line, parse_constant=_reject_constants)
    except DataFormatError as exc:
        raise DataFormatError(f"line {line_no}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"line {line_no}: invalid JSON: {exc.msg}") from None


def _finite(value, name: str, line_no: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataFormatError(f"line {line_no}: {name} must be a number")
    v = float(value)
    if not math.isfinite(v):
        raise DataFormatError(f"line {line_no}: {name} must be finite")
    return v


# -- QA items ----------------------------------------------------------------------

@dataclass(frozen=True)
class QAItem:
    """One benchmark question bound to a scene, start pose, and target position."""

    id: str
    question: str
    gold_answer: str
    question_type: str
    scene: str
    start: Pose
    target: tuple[float, float]
    gt_step_count: int
    gt_geodesic_m: float
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.question_type not in QUESTION_TYPES:
            raise DataFormatError(
                f"invalid question_type {self.question_type!r}; "
                f"must be one of {', '.join(QUESTION_TYPES)}")


def qa_to_dict(item: QAItem) -> dict:
    out = {
        "id": item.id,
        "question": item.question,
        "gold_answer": item.gold_answer,
        "question_type": item.question_type,
        "scene": item.scene,
        "start": {"x": item.start.x, "y": item.start.y, "heading": item.start.heading},
        "target": {"x": item.target[0], "y": item.target[1]},
        "gt_step_count": item.gt_step_count,
        "gt_geodesic_m": item.gt_geodesic_m,
    }
    for key in sorted(item.extras):
        out[key] = item.extras[key]
    return out


_QA_KEYS = ("id", "question", "gold_answer", "question_type", "scene",
            "start", "target", "gt_step_count", "gt_geodesic_m")


def qa_from_dict(data: dict, line_no: int = 0) -> QAItem:
    for key in _QA_KEYS:
        if key not in data:
            raise DataFormatError(f"line {line_no}: missing field {key!r}")
    start = data["start"]
    target = data["target"]
    try:
        pose = Pose(_finite(start["x"], "start.x", line_no),
                    _finite(start["y"], "start.y", line_no),
                    _finite(start["heading"], "start.heading", line_no))
        tgt = (_finite(target["x"], "target.x", line_no),
               _finite(target["y"], "target.y", line_no))
    except (TypeError, KeyError):
        raise DataFormatError(f"line {line_no}: malformed start/target") from None
    if not isinstance(data["gt_step_count"], int) or isinstance(data["gt_step_count"], bool):
        raise DataFormatError(f"line {line_no}: gt_step_count must be an integer")
    try:
        return QAItem(
            id=str(data["id"]),
            question=str(data["question"]),
            gold_answer=str(data["gold_answer"]),
            question_type=str(data["question_type"]),
            scene=str(data["scene"]),
            start=pose,
            target=tgt,
            gt_step_count=data["gt_step_count"],
            gt_geodesic_m=_finite(data["gt_geodesic_m"], "gt_geodesic_m", line_no),
            extras={k: v for k, v in data.items() if k not in _QA_KEYS},
        )
    except DataFormatError as exc:
        raise DataFormatError(f"line {line_no}: {exc}") from None


def read_qa(stream) -> list[QAItem]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    items = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        items.append(qa_from_dict(parse_json_line(line, line_no), line_no))
    return items


def write_qa(items, stream) -> None:
    for item in items:
        stream.write(canonical_dumps(qa_to_dict(item)) + "\n")


def read_qa_file(path) -> list[QAItem]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_qa(fh)


def write_qa_file(items, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_qa(items, fh)


def convert_external_item(record: dict, scene: str | None = None) -> QAItem:
    """Convert a benchmark-style record into a QAItem.

    Integration stub for external EQA datasets whose records carry a question,
    a reference answer, and ground-truth trajectory data. Expected source
    fields (aliases in parentheses):

      question, answer (gold_answer), type (question_type), scene (scene_id),
      start {x, y, heading}, target {x, y},
      steps (gt_step_count), geodesic (gt_geodesic_m)

    Positions must already be in meters on the target scene's grid; callers
    converting from other simulators are responsible for the coordinate
    transform. Unmapped fields are preserved as extras.
    """
    def pick(*names):
        for name in names:
            if name in record:
                return record[name]
        raise DataFormatError(f"external record is missing {names[0]!r}")

    start = pick("start")
    target = pick("target")
    aliases = {"question", "answer", "gold_answer", "type", "question_type",
               "scene", "scene_id", "id", "start", "target", "steps",
               "gt_step_count", "geodesic", "gt_geodesic_m"}
    return QAItem(
        id=str(record.get("id", pick("question"))[:48]),
        question=str(pick("question")),
        gold_answer=str(pick("answer", "gold_answer")),
        question_type=str(pick("type", "question_type")),
        scene=scene or str(pick("scene", "scene_id")),
        start=Pose(float(start["x"]), float(start["y"]), float(start["heading"])),
        target=(float(target["x"]), float(target["y"])),
        gt_step_count=int(pick("steps", "gt_step_count")),
        gt_geodesic_m=float(pick("geodesic", "gt_geodesic_m")),
        extras={k: v for k, v in record.items() if k not in aliases},
    )


# -- sampled trajectories -------------------------------------------------------------

def traj_to_dict(spec: TrajectorySpec, scene_name: str) -> dict:
    return {
        "scene": scene_name,
        "start": {"x": spec.start.x, "y": spec.start.y, "heading": spec.start.heading},
        "target": {"x": spec.target[0], "y": spec.target[1]},
        "actions": "".join(_ACTION_LETTERS[a] for a in spec.actions),
        "step_count": spec.step_count,
        "geodesic_m": spec.geodesic_length,
    }


def traj_from_dict(data: dict, line_no: int = 0) -> tuple[str, TrajectorySpec]:
    try:
        actions = tuple(_LETTER_ACTIONS[ch] for ch in data["actions"])
    except KeyError as exc:
        raise DataFormatError(f"line {line_no}: bad action letter {exc}") from None
    start = data["start"]
    target = data["target"]
    spec = TrajectorySpec(
        start=Pose(_finite(start["x"], "start.x", line_no),
                   _finite(start["y"], "start.y", line_no),
                   _finite(start["heading"], "start.heading", line_no)),
        target=(_finite(target["x"], "target.x", line_no),
                _finite(target["y"], "target.y", line_no)),
        actions=actions,
        step_count=int(data["step_count"]),
        geodesic_length=_finite(data["geodesic_m"], "geodesic_m", line_no),
    )
    return str(data["scene"]), spec


# -- grid run-length coding (map snapshots) ------------------------------------------

def rle_encode(flat) -> list:
    """Row-major run-length pairs [count, value]; exact for ints and floats."""
    runs = []
    count = 0
    current = None
    for v in flat:
        v = v if isinstance(v, int) else float(v)
        if count and v == current:
            count += 1
        else:
            if count:
                runs.append([count, current])
            current = v
            count = 1
    if count:
        runs.append([count, current])
    return runs


def rle_decode(runs, expected_len: int) -> list:
    out = []
    for pair in runs:
        count, value = pair
        out.extend([value] * count)
    if len(out) != expected_len:
        raise DataFormatError(f"run-length data has {len(out)} cells, expected {expected_len}")
    return out


# -- episode traces -------------------------------------------------------------------

def _pose_list(pose) -> list:
    return [pose[0], pose[1], pose[2]]


def record_to_dict(rec: StepRecord) -> dict:
    return {
        "step": rec.step,
        "pose": _pose_list(rec.pose),
        "mode": rec.mode,
        "event": rec.event,
        "waypoint": [rec.waypoint[0], rec.waypoint[1]] if rec.waypoint else None,
        "path": [[x, y] for x, y in rec.path],
        "oracle": rec.oracle_calls,
        "p_m": rec.p_m,
    }


def write_trace(result: EpisodeResult, stream) -> None:
    header = {
        "kind": "trace",
        "version": TRACE_VERSION,
        "scene": result.scene_name,
        "qa_id": result.qa_id,
        "strategy": result.strategy,
        "seed": result.seed,
    }
    stream.write(canonical_dumps(header) + "\n")
    for rec in result.records:
        stream.write(canonical_dumps(record_to_dict(rec)) + "\n")
    summary = {
        "summary": {
            "status": result.status,
            "answer": result.answer,
            "steps": result.steps,
            "p_m": result.p_m,
            "final_pose": _pose_list(result.final_pose),
            "final_payload": result.final_payload,
            "maps": result.maps,
        }
    }
    stream.write(canonical_dumps(summary) + "\n")
    stream.write(canonical_dumps({"trace_end": len(result.records)}) + "\n")


def write_trace_file(result: EpisodeResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(result, fh)


def read_trace(stream) -> EpisodeResult:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = [line for line in stream]
    if not lines:
        raise DataFormatError("empty trace")
    header = parse_json_line(lines[0], 1)
    if header.get("kind") != "trace" or header.get("version") != TRACE_VERSION:
        raise DataFormatError("line 1: not a version-1 trace header")
    records: list[StepRecord] = []
    summary = None
    trace_end = None
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        data = parse_json_line(line, line_no)
        if "trace_end" in data:
            trace_end = data["trace_end"]
        elif "summary" in data:
            summary = data["summary"]
        else:
            pose = data["pose"]
            records.append(StepRecord(
                step=int(data["step"]),
                pose=(_finite(pose[0], "pose.x", line_no),
                      _finite(pose[1], "pose.y", line_no),
                      _finite(pose[2], "pose.heading", line_no)),
                mode=str(data["mode"]),
                event=str(data["event"]),
                waypoint=tuple(data["waypoint"]) if data.get("waypoint") else None,
                path=[(_finite(p[0], "path.x", line_no), _finite(p[1], "path.y", line_no))
                      for p in data["path"]],
                oracle_calls=list(data.get("oracle", [])),
                p_m=_finite(data["p_m"], "p_m", line_no),
            ))
    if trace_end is None or trace_end != len(records):
        raise DataFormatError(
            f"truncated trace: trailing count {trace_end!r}, {len(records)} step records")
    if summary is None:
        raise DataFormatError("truncated trace: missing summary record")
    pose = summary["final_pose"]
    return EpisodeResult(
        scene_name=str(header["scene"]),
        qa_id=str(header["qa_id"]),
        strategy=str(header["strategy"]),
        seed=int(header["seed"]),
        status=str(summary["status"]),
        answer=str(summary["answer"]),
        final_pose=(float(pose[0]), float(pose[1]), float(pose[2])),
        p_m=_finite(summary["p_m"], "summary.p_m", 0),
        steps=int(summary["steps"]),
        records=records,
        maps=dict(summary.get("maps", {})),
        final_payload=dict(summary.get("final_payload", {})),
    )


def read_trace_file(path) -> EpisodeResult:
    with open(path, "r", encoding="utf-8") as fh:
        return read_trace(fh)


def trace_to_text(result: EpisodeResult) -> str:
    buf = io.StringIO()
    write_trace(result, buf)
    return buf.getvalue()
