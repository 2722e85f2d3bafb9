"""eqasim: a grid-world simulator and evaluation toolkit for exploration-aware
embodied question answering.

The package ships four exploration strategies (random, frontier-based,
goal-oriented, and the hybrid frontier+goal strategy), the belief-map stack
they share, a grading metric suite, deterministic scripted oracles, and an
HTTP client/mock pair for the oracle wire protocol.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import SimConfig
from .controller import Strategy, run_episode
from .dataio import QAItem, read_qa_file, read_trace_file, write_qa_file, write_trace_file
from .demo import build_suite, generate_qa, generate_scene
from .metrics import GradedItem, MetricsReport, aggregate, item_score, sufficient_length
from .oracle import ObservationPayload, RemoteOracle, Rulebook, ScriptedOracle
from .runner import run_batch
from .scene import (AtomicAction, Pose, Scene, TrajectorySpec, apply_action,
                    geodesic_distance, load_scene, plan_actions, sample_trajectory,
                    visible_cells, write_scene)

__all__ = [
    "KERNEL_BACKEND", "SimConfig", "Strategy", "run_episode", "QAItem",
    "read_qa_file", "read_trace_file", "write_qa_file", "write_trace_file",
    "build_suite", "generate_qa", "generate_scene", "GradedItem", "MetricsReport",
    "aggregate", "item_score", "sufficient_length", "ObservationPayload",
    "RemoteOracle", "Rulebook", "ScriptedOracle", "run_batch", "AtomicAction",
    "Pose", "Scene", "TrajectorySpec", "apply_action", "geodesic_distance",
    "load_scene", "plan_actions", "sample_trajectory", "visible_cells",
    "write_scene",
]
