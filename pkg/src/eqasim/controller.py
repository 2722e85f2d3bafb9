"""The episode state machine: strategies, mode switching, budgets, oracle calls.

One step is one relocation cycle: observe at the current pose, update beliefs,
ask the stop oracle, then either finish or pick and navigate to the next
waypoint under the per-move distance cap. Strategies differ only in how the
waypoint is chosen and which oracle capabilities they consume.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import frontier as frontier_mod
from . import goal as goal_mod
from . import mapping
from .config import SimConfig
from .dataio import QAItem, canonical_dumps
from .episode import (EVENT_BUDGET, EVENT_RELOCATE, EVENT_STOP, EVENT_STUCK,
                      STATUS_BUDGET_EXHAUSTED, STATUS_COMPLETED, STATUS_EXPLORING,
                      EpisodeAborted, EpisodeResult, StepRecord)
from .geometry import MotionModel, norm_deg
from .oracle import ObservationPayload, OracleError
from .scene import (AtomicAction, Pose, Scene, apply_action, distance_field,
                    path_cells, plan_actions, visible_cells)


class Strategy(Enum):
    RANDOM = "re"
    FRONTIER_BASED = "fbe"
    GOAL_ORIENTED = "goe"
    FINE_EQA = "fineqa"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        for s in cls:
            if s.value == name:
                return s
        raise ValueError(f"unknown strategy {name!r}; expected one of "
                         f"{', '.join(s.value for s in cls)}")


# which machinery each strategy consumes
_USES_SEMANTIC = {Strategy.GOAL_ORIENTED, Strategy.FINE_EQA}
_USES_REGIONS = {Strategy.GOAL_ORIENTED, Strategy.FINE_EQA}
_FRONTIER_COARSE = {Strategy.FRONTIER_BASED, Strategy.FINE_EQA}


@dataclass
class MapStack:
    explo: mapping.ExplorationMap
    sem: mapping.SemanticMap
    reg: mapping.RegionMap
    masked: mapping.MaskedMap | None = None

    @classmethod
    def for_scene(cls, scene: Scene) -> "MapStack":
        return cls(mapping.ExplorationMap.for_scene(scene),
                   mapping.SemanticMap.for_scene(scene),
                   mapping.RegionMap.for_scene(scene))


@dataclass
class EpisodeState:
    pose: Pose
    maps: MapStack
    ledger: goal_mod.VisitLedger
    priorities: goal_mod.RegionPriorityList
    mode: tuple[str, int | None] = ("frontier", None)
    step_index: int = 0
    path_length_m: float = 0.0
    status: str = STATUS_EXPLORING
    records: list[StepRecord] = field(default_factory=list)
    last_payload: ObservationPayload | None = None


def max_steps_for(scene: Scene, cfg: SimConfig) -> int:
    """Budget proportional to free area, hard-capped."""
    return max(1, min(cfg.max_steps_cap,
                      int(math.ceil(cfg.steps_per_free_m2 * scene.free_area_m2))))


def _mode_label(mode: tuple[str, int | None]) -> str:
    return "frontier" if mode[0] == "frontier" else f"goal:{mode[1]}"


def _call_digest(name: str, request, response) -> dict:
    payload = canonical_dumps({"call": name, "request": request, "response": response})
    return {"call": name, "digest": hashlib.sha256(payload.encode()).hexdigest()[:12]}


def _payload_digest_dict(payload: ObservationPayload) -> dict:
    if payload.is_ground_truth:
        return {
            "question": payload.question,
            "pose": list(payload.pose),
            "samples": [list(c) for c in payload.sample_cells],
            "target_visible": payload.target_visible,
        }
    return {
        "question": payload.question,
        "pose": list(payload.pose),
        "samples": [list(c) for c in payload.sample_cells],
        "image_ref": payload.image_ref,
    }


def payload_to_dict(payload: ObservationPayload) -> dict:
    """Serializable payload summary stored in traces (enables offline re-grading)."""
    out = {
        "question": payload.question,
        "pose": list(payload.pose),
        "sample_cells": [list(c) for c in payload.sample_cells],
    }
    if payload.is_ground_truth:
        out["visible_region_counts"] = {k: payload.visible_region_counts[k]
                                        for k in sorted(payload.visible_region_counts)}
        out["visible_free_count"] = payload.visible_free_count
        out["region_rep_cells"] = {k: list(payload.region_rep_cells[k])
                                   for k in sorted(payload.region_rep_cells)}
        out["sample_region_types"] = list(payload.sample_region_types)
        out["target_visible"] = payload.target_visible
    else:
        out["image_ref"] = payload.image_ref
    return out


def payload_from_dict(data: dict) -> ObservationPayload:
    common = {
        "question": data["question"],
        "pose": tuple(data["pose"]),
        "sample_cells": tuple(tuple(c) for c in data["sample_cells"]),
    }
    if "image_ref" in data:
        return ObservationPayload(image_ref=data["image_ref"], **common)
    return ObservationPayload(
        visible_region_counts=dict(data["visible_region_counts"]),
        visible_free_count=data["visible_free_count"],
        region_rep_cells={k: tuple(v) for k, v in data["region_rep_cells"].items()},
        sample_region_types=tuple(data["sample_region_types"]),
        target_visible=data["target_visible"],
        **common)


def _observe(scene: Scene, pose: Pose, cfg: SimConfig,
             four_sweep: bool) -> set[tuple[int, int]]:
    headings = (0.0, 90.0, 180.0, 270.0) if four_sweep else (0.0,)
    visible: set[tuple[int, int]] = set()
    for turn in headings:
        sweep_pose = Pose(pose.x, pose.y, pose.heading + turn)
        visible |= visible_cells(scene, sweep_pose, cfg.fov_degrees,
                                 cfg.view_range_m, cfg.ray_step_degrees)
    return visible


def _build_payload(scene: Scene, qa: QAItem, state: EpisodeState, visible,
                   samples, oracle, step_index: int) -> ObservationPayload:
    pose3 = (state.pose.x, state.pose.y, state.pose.heading)
    sample_cells = tuple(samples)
    if getattr(oracle, "payload_mode", "ground_truth") == "image":
        return ObservationPayload(
            question=qa.question, pose=pose3, sample_cells=sample_cells,
            image_ref=f"sim://{scene.name}/{qa.id}/{step_index}")
    target_cell = scene.cell_of(*qa.target)
    counts: dict[str, int] = {}
    by_type: dict[str, list[tuple[int, int]]] = {}
    visible_free = 0
    for cell in visible:
        if not scene.is_free(cell):
            continue
        visible_free += 1
        rtype = scene.region_type_at(cell)
        if rtype is not None:
            counts[rtype] = counts.get(rtype, 0) + 1
            by_type.setdefault(rtype, []).append(cell)
    rep_cells = {}
    for rtype, cells in by_type.items():
        mx = sum(c[0] for c in cells) / len(cells)
        my = sum(c[1] for c in cells) / len(cells)
        rep_cells[rtype] = min(
            cells, key=lambda c: ((c[0] - mx) ** 2 + (c[1] - my) ** 2, c[1], c[0]))
    sample_types = tuple(scene.region_type_at(c) for c in sample_cells)
    return ObservationPayload(
        question=qa.question, pose=pose3, sample_cells=sample_cells,
        visible_region_counts=counts, visible_free_count=visible_free,
        region_rep_cells=rep_cells, sample_region_types=sample_types,
        target_visible=target_cell in visible)


def sample_relocation_offset(rng, max_relocation_m: float) -> tuple[float, float]:
    """Uniform distance in (0, max] and uniform heading in [0, 360)."""
    d = max_relocation_m * (1.0 - rng.random())
    heading = rng.uniform(0.0, 360.0)
    return d, heading


def random_waypoint(scene: Scene, pose: Pose, rng, max_relocation_m: float,
                    dist_m: np.ndarray, centers: tuple[np.ndarray, np.ndarray]
                    ) -> tuple[int, int]:
    """Uniform distance/heading offset, snapped to the nearest eligible free cell.

    Eligible cells are reachable and within the relocation cap of the pose;
    falls back to the agent's own cell when fully enclosed.
    """
    d, heading = sample_relocation_offset(rng, max_relocation_m)
    ox = pose.x + d * math.cos(math.radians(heading))
    oy = pose.y + d * math.sin(math.radians(heading))
    cx, cy = centers
    within = ((cx - pose.x) ** 2 + (cy - pose.y) ** 2) <= max_relocation_m ** 2
    eligible = np.isfinite(dist_m) & within
    if not eligible.any():
        return pose.cell(scene.resolution)
    d2 = (cx - ox) ** 2 + (cy - oy) ** 2
    d2 = np.where(eligible, d2, np.inf)
    flat = int(np.argmin(d2))  # first minimum in row-major order: lowest row, column
    return (flat % scene.width, flat // scene.width)


def _clamp_waypoint(scene: Scene, pose: Pose, target: tuple[int, int],
                    dist_m: np.ndarray, parents: np.ndarray,
                    max_relocation_m: float) -> tuple[int, int] | None:
    """Last cell on the shortest path to target still within the relocation cap."""
    if not math.isfinite(dist_m[target[1], target[0]]):
        return None
    path = path_cells(parents, pose.cell(scene.resolution), target)
    if path is None:
        return None
    chosen = path[0]
    for cell in path:
        cx, cy = scene.center_of(cell)
        if math.hypot(cx - pose.x, cy - pose.y) <= max_relocation_m:
            chosen = cell
    return chosen


class EpisodeRunner:
    """Runs one episode; owns its per-episode RNG and map stack."""

    def __init__(self, scene: Scene, qa: QAItem, strategy: Strategy,
                 oracle, cfg: SimConfig, seed: int):
        self.scene = scene
        self.qa = qa
        self.strategy = strategy
        self.oracle = oracle
        self.cfg = cfg
        self.seed = seed
        self.rng = random.Random(seed)
        self.motion = MotionModel.build(cfg.forward_step_m, cfg.turn_degrees,
                                        scene.resolution)
        self.max_steps = max_steps_for(scene, cfg)
        cy, cx = np.mgrid[0:scene.height, 0:scene.width]
        self._centers = ((cx + 0.5) * scene.resolution, (cy + 0.5) * scene.resolution)
        start_cell = qa.start.cell(scene.resolution)
        if not scene.is_free(start_cell):
            raise ValueError(f"start pose of {qa.id} is not on a free cell")
        self.motion.heading_index(qa.start.heading)  # validates quantization
        priorities = goal_mod.RegionPriorityList()
        if strategy in _USES_REGIONS:
            priorities = self._oracle_guard(
                lambda: goal_mod.prioritize_regions(qa.question, oracle))
        self.state = EpisodeState(
            pose=qa.start,
            maps=MapStack.for_scene(scene),
            ledger=goal_mod.VisitLedger(),
            priorities=priorities)

    # -- plumbing ---------------------------------------------------------------

    def _oracle_guard(self, fn):
        try:
            return fn()
        except OracleError as exc:
            raise EpisodeAborted(self.qa.id, exc) from exc

    def _rank(self, region_id: int) -> int:
        info = self.state.maps.reg.table.get(region_id)
        if info is None:
            return -1
        rank = self.state.priorities.rank_of(info.region_type)
        return -1 if rank is None else rank

    # -- one relocation cycle ----------------------------------------------------

    def step(self) -> str:
        state = self.state
        if state.status != STATUS_EXPLORING:
            raise RuntimeError("step() called on a finished episode")
        cfg = self.cfg
        scene = self.scene
        calls: list[dict] = []
        obs_pose = state.pose

        four_sweep = state.mode[0] == "goal"
        visible = _observe(scene, state.pose, cfg, four_sweep)
        mapping.update_explored(state.maps.explo, visible, scene)

        sample_pool = [c for c in visible if scene.is_free(c)]
        samples = []
        if sample_pool and cfg.sample_points_per_observation > 0:
            samples = mapping.farthest_point_sample(
                sample_pool, cfg.sample_points_per_observation, self.rng)
        payload = _build_payload(scene, self.qa, state, visible, samples,
                                 self.oracle, state.step_index)
        state.last_payload = payload
        request = _payload_digest_dict(payload)

        if self.strategy in _USES_SEMANTIC:
            v_l, v_g = self._oracle_guard(lambda: self.oracle.semantic_scores(payload))
            calls.append(_call_digest("semantic_scores", request, [v_l, v_g]))
            points = [mapping.SamplePoint(cell, value)
                      for cell, value in zip(samples, v_l)]
            mapping.update_semantic(state.maps.sem, points, v_g, cfg.fusion_w_local,
                                    cfg.fusion_w_global, cfg.kernel_sigma_cells)
        if self.strategy in _USES_REGIONS:
            rtype, conf, rep = self._oracle_guard(
                lambda: self.oracle.classify_region(payload))
            calls.append(_call_digest("classify_region", request, [rtype, conf, rep]))
            if rep is not None:
                rep = tuple(rep)
            # remote oracles may emit arbitrary points; ignore ones off the map
            if rep is not None and rtype != "unknown" and scene.in_bounds(rep):
                mapping.update_region(state.maps.reg, state.maps.explo, rtype, conf,
                                      rep, cfg.region_confidence_threshold,
                                      cfg.region_neighborhood_radius_cells)
                id_map = mapping.merge_regions(state.maps.reg, cfg.region_merge_gap_cells)
                state.priorities.remap_ids(id_map)
                state.ledger.remap_ids(id_map)
                if state.mode[0] == "goal":
                    new_ids = sorted(id_map.get(state.mode[1], set()))
                    state.mode = ("goal", new_ids[0]) if new_ids else ("frontier", None)

        stop = self._oracle_guard(lambda: self.oracle.should_stop(payload))
        calls.append(_call_digest("should_stop", request, stop))
        if stop:
            state.status = STATUS_COMPLETED
            return self._finish_step(EVENT_STOP, None, obs_pose, [obs_pose.position()], calls)
        if state.step_index + 1 >= self.max_steps:
            state.status = STATUS_BUDGET_EXHAUSTED
            return self._finish_step(EVENT_BUDGET, None, obs_pose, [obs_pose.position()], calls)

        self._update_mode()
        dist_m, parents = distance_field(scene, state.pose.cell(scene.resolution))
        waypoint, goal_region, face_cell = self._choose_waypoint(dist_m, parents)
        if waypoint is None:
            return self._finish_step(EVENT_STUCK, None, obs_pose, [obs_pose.position()], calls)
        goal_mod.record_visit(state.ledger, waypoint, goal_region)
        path = self._navigate(waypoint, face_cell)
        return self._finish_step(EVENT_RELOCATE, waypoint, obs_pose, path, calls)

    def _finish_step(self, event: str, waypoint, obs_pose: Pose, path, calls) -> str:
        state = self.state
        state.records.append(StepRecord(
            step=state.step_index,
            pose=(obs_pose.x, obs_pose.y, obs_pose.heading),
            mode=_mode_label(state.mode),
            event=event,
            waypoint=waypoint,
            path=list(path),
            oracle_calls=calls,
            p_m=state.path_length_m,
        ))
        state.step_index += 1
        return event

    def _update_mode(self) -> None:
        """Frontier/goal transitions for the region-aware strategies."""
        if self.strategy not in _USES_REGIONS:
            return
        state = self.state
        best = state.priorities.best_available(state.maps.reg)
        if state.mode[0] == "frontier":
            if best is not None:
                state.mode = ("goal", best)
            return
        current = state.mode[1]
        if current not in state.maps.reg.table:
            state.mode = ("goal", best) if best is not None else ("frontier", None)
        elif best is not None and self._rank(best) > self._rank(current):
            state.mode = ("goal", best)

    def _choose_waypoint(self, dist_m, parents):
        """Waypoint per strategy/mode: (cell or None, goal region or None, face cell)."""
        state = self.state
        cfg = self.cfg
        while state.mode[0] == "goal":
            rid = state.mode[1]
            if state.ledger.consecutive_count(rid) >= cfg.region_step_cap:
                self._exhaust(rid)
                continue
            masked = mapping.mask_semantic(state.maps.sem, state.maps.reg, rid,
                                           state.ledger.cell_counts,
                                           cfg.visit_decay_factor)
            state.maps.masked = masked
            target = goal_mod.select_goal_target(masked, state.maps.explo, dist_m)
            if target is None:
                self._exhaust(rid)
                continue
            waypoint = _clamp_waypoint(self.scene, state.pose, target, dist_m,
                                       parents, cfg.max_relocation_m)
            if waypoint is None:
                self._exhaust(rid)
                continue
            return waypoint, rid, target
        if self.strategy in _FRONTIER_COARSE:
            chosen = self._frontier_waypoint(dist_m, parents)
            if chosen is not None:
                return chosen
        waypoint = random_waypoint(self.scene, state.pose, self.rng,
                                   cfg.max_relocation_m, dist_m, self._centers)
        return waypoint, None, None

    def _exhaust(self, rid: int) -> None:
        state = self.state
        state.priorities.exhausted.add(rid)
        best = state.priorities.best_available(state.maps.reg)
        state.mode = ("goal", best) if best is not None else ("frontier", None)

    def _frontier_waypoint(self, dist_m, parents):
        state = self.state
        cfg = self.cfg
        params = frontier_mod.WeightParams(
            alpha_semantic=(0.0 if self.strategy == Strategy.FRONTIER_BASED
                            else cfg.alpha_semantic),
            alpha_unexplored=cfg.alpha_unexplored,
            alpha_unoccupied=cfg.alpha_unoccupied,
            lambda_per_m=cfg.lambda_distance_per_m)
        cells = frontier_mod.detect_frontiers(state.maps.explo)
        candidates = frontier_mod.cluster_frontiers(cells, cfg.min_cluster_size)
        scored = frontier_mod.score_candidates(
            candidates, state.maps.explo, state.maps.sem, state.pose.position(),
            params, self.scene.resolution, cfg.probe_len_m,
            cfg.frontier_semantic_radius_cells,
            dist_m if cfg.geodesic_frontier_distance else None)
        for _ in range(cfg.stuck_retries):
            if not scored:
                return None
            chosen = frontier_mod.sample_frontier(scored, self.rng)
            waypoint = _clamp_waypoint(self.scene, state.pose, chosen.cell,
                                       dist_m, parents, cfg.max_relocation_m)
            if waypoint is not None:
                return waypoint, None, chosen.cell
            scored = [c for c in scored if c is not chosen]
        return None

    def _navigate(self, waypoint: tuple[int, int],
                  face_cell: tuple[int, int] | None = None) -> list[tuple[float, float]]:
        """Plan to the waypoint and execute the full action path, accumulating p.

        Cells physically traversed become explored (the agent knows its own
        footprint). On arrival the agent turns toward face_cell, so the next
        observation looks at what the relocation was aiming for.
        """
        state = self.state
        scene = self.scene
        goal_pos = scene.center_of(waypoint)
        actions = plan_actions(scene, state.pose, goal_pos, self.motion)
        path = [state.pose.position()]
        if actions is None:  # clamped waypoints sit on a known path; defensive only
            return path
        pose = state.pose
        footprint = {pose.cell(scene.resolution)}
        for action in actions:
            new_pose = apply_action(scene, pose, action, self.motion)
            if action == AtomicAction.MOVE_FORWARD and new_pose.position() != pose.position():
                state.path_length_m += math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)
                path.append(new_pose.position())
                head_idx = self.motion.heading_index(pose.heading)
                cx, cy = pose.cell(scene.resolution)
                for dx, dy in self.motion.crossed[head_idx]:
                    footprint.add((cx + dx, cy + dy))
            pose = new_pose
        pose = self._face_toward(pose, face_cell)
        state.pose = pose
        mapping.update_explored(state.maps.explo, footprint, scene)
        return path

    def _face_toward(self, pose: Pose, face_cell: tuple[int, int] | None) -> Pose:
        """Turn in place toward a cell (no-op when already there or facing it)."""
        if face_cell is None or face_cell == pose.cell(self.scene.resolution):
            return pose
        fx, fy = self.scene.center_of(face_cell)
        angle = math.degrees(math.atan2(fy - pose.y, fx - pose.x))
        target_idx = round(norm_deg(angle) / self.motion.turn_degrees) % self.motion.n_headings
        cur_idx = self.motion.heading_index(pose.heading)
        delta = (target_idx - cur_idx) % self.motion.n_headings
        if delta == 0:
            return pose
        if delta <= self.motion.n_headings // 2:
            turns, action = delta, AtomicAction.TURN_LEFT
        else:
            turns, action = self.motion.n_headings - delta, AtomicAction.TURN_RIGHT
        for _ in range(turns):
            pose = apply_action(self.scene, pose, action, self.motion)
        return pose

    # -- whole episode ------------------------------------------------------------

    def run(self) -> EpisodeResult:
        state = self.state
        while state.status == STATUS_EXPLORING:
            self.step()
        answer = self._oracle_guard(lambda: self.oracle.answer(state.last_payload))
        return EpisodeResult(
            scene_name=self.scene.name,
            qa_id=self.qa.id,
            strategy=self.strategy.value,
            seed=self.seed,
            status=state.status,
            answer=answer,
            final_pose=(state.pose.x, state.pose.y, state.pose.heading),
            p_m=state.path_length_m,
            steps=state.step_index,
            records=state.records,
            maps=self._snapshot_maps(),
            final_payload=payload_to_dict(state.last_payload),
        )

    def _snapshot_maps(self) -> dict:
        from .dataio import rle_encode
        maps = self.state.maps
        masked_values = (maps.masked.values if maps.masked is not None
                         else np.zeros_like(maps.sem.values))
        masked_id = maps.masked.region_id if maps.masked is not None else None
        return {
            "width": self.scene.width,
            "height": self.scene.height,
            "exploration": rle_encode(int(v) for v in maps.explo.grid.ravel()),
            "semantic": rle_encode(maps.sem.values.ravel()),
            "regions": {
                "ids": rle_encode(int(v) for v in maps.reg.ids.ravel()),
                "table": {str(rid): {"type": info.region_type, "cells": info.cell_count}
                          for rid, info in sorted(maps.reg.table.items())},
            },
            "masked": {"region_id": masked_id,
                       "values": rle_encode(masked_values.ravel())},
        }


def run_episode(scene: Scene, qa: QAItem, strategy: Strategy, oracle,
                cfg: SimConfig, seed: int) -> EpisodeResult:
    """Run one full episode; raises EpisodeAborted on oracle transport failure."""
    return EpisodeRunner(scene, qa, strategy, oracle, cfg, seed).run()
