"""Simulation parameters with their documented defaults.

Every knob the strategies, maps, and oracles consume lives here so a single
JSON config file can reproduce a run exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class SimConfig:
    # kinematics
    forward_step_m: float = 0.25
    turn_degrees: float = 30.0

    # observation
    fov_degrees: float = 90.0
    view_range_m: float = 3.0
    ray_step_degrees: float = 1.0
    sample_points_per_observation: int = 8

    # semantic map
    fusion_w_local: float = 0.5
    fusion_w_global: float = 0.5
    kernel_sigma_cells: float = 3.0

    # region map
    region_confidence_threshold: float = 0.5
    region_neighborhood_radius_cells: int = 4
    region_merge_gap_cells: int = 2
    visit_decay_factor: float = 0.5

    # frontier weighting
    alpha_semantic: float = 1.0
    alpha_unexplored: float = 1.0
    alpha_unoccupied: float = 0.5
    lambda_distance_per_m: float = 0.3
    probe_len_m: float = 3.0
    min_cluster_size: int = 3
    frontier_semantic_radius_cells: int = 2
    geodesic_frontier_distance: bool = False

    # episode control
    max_relocation_m: float = 3.0
    region_step_cap: int = 3
    steps_per_free_m2: float = 0.5
    max_steps_cap: int = 100
    stuck_retries: int = 5

    # metrics
    sufficient_length_visibility_slack: bool = False

    # remote oracle
    oracle_retry_max: int = 3
    oracle_backoff_base_s: float = 0.5
    oracle_timeout_s: float = 30.0

    def __post_init__(self):
        if self.forward_step_m <= 0 or self.turn_degrees <= 0:
            raise ValueError("forward_step_m and turn_degrees must be positive")
        if abs(self.fusion_w_local + self.fusion_w_global - 1.0) > 1e-9:
            raise ValueError("fusion weights must sum to 1")
        if self.fusion_w_local < 0 or self.fusion_w_global < 0:
            raise ValueError("fusion weights must be nonnegative")
        if min(self.alpha_semantic, self.alpha_unexplored,
               self.alpha_unoccupied, self.lambda_distance_per_m) < 0:
            raise ValueError("frontier weight parameters must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SimConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())
