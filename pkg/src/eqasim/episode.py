"""Episode result types shared by the controller and the trace file format."""

from __future__ import annotations

from dataclasses import dataclass, field

STATUS_EXPLORING = "exploring"
STATUS_COMPLETED = "completed"
STATUS_BUDGET_EXHAUSTED = "budget_exhausted"

EVENT_RELOCATE = "relocate"
EVENT_STOP = "stop"
EVENT_BUDGET = "budget"
EVENT_STUCK = "stuck"


class EpisodeAborted(RuntimeError):
    """An episode failed for external reasons (e.g. oracle transport)."""

    def __init__(self, qa_id: str, cause: Exception):
        super().__init__(f"episode {qa_id} aborted: {cause}")
        self.qa_id = qa_id
        self.cause = cause


@dataclass
class StepRecord:
    """One relocation cycle: where the agent stood, what it chose, how it moved."""

    step: int
    pose: tuple[float, float, float]
    mode: str                                # "frontier" or "goal:<region id>"
    event: str                               # relocate | stop | budget | stuck
    waypoint: tuple[int, int] | None
    path: list[tuple[float, float]]          # positions traversed, pose included
    oracle_calls: list[dict]                 # {"call": name, "digest": hex}
    p_m: float                               # cumulative traveled distance


@dataclass
class EpisodeResult:
    """Everything one episode produced, sufficient to serialize its trace."""

    scene_name: str
    qa_id: str
    strategy: str
    seed: int
    status: str
    answer: str
    final_pose: tuple[float, float, float]
    p_m: float
    steps: int
    records: list[StepRecord] = field(default_factory=list)
    maps: dict = field(default_factory=dict)
    final_payload: dict = field(default_factory=dict)
