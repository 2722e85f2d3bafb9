"""Goal-oriented exploration: region priorities, visit ledger, target selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mapping import FREE_EXPLORED, ExplorationMap, MaskedMap, RegionMap


@dataclass
class RegionPriorityList:
    """Question-relevant region types, best first, with per-id exhaustion state."""

    ranked: list[tuple[str, int]] = field(default_factory=list)
    exhausted: set[int] = field(default_factory=set)

    @classmethod
    def from_types(cls, types: list[str]) -> "RegionPriorityList":
        seen = []
        for t in types:
            if t not in seen:
                seen.append(t)
        ranked = [(t, len(seen) - i) for i, t in enumerate(seen)]
        return cls(ranked=ranked)

    def rank_of(self, region_type: str) -> int | None:
        for t, rank in self.ranked:
            if t == region_type:
                return rank
        return None

    def best_available(self, reg: RegionMap) -> int | None:
        """Highest-priority non-exhausted region id present in the map, or None.

        Ties within a type resolve to the smallest id.
        """
        best: tuple[int, int] | None = None  # (-rank, id)
        for rid, info in reg.table.items():
            if rid in self.exhausted:
                continue
            rank = self.rank_of(info.region_type)
            if rank is None:
                continue
            key = (-rank, rid)
            if best is None or key < best:
                best = key
        return best[1] if best else None

    def remap_ids(self, mapping: dict[int, set[int]]) -> None:
        """Carry exhaustion across a region-id relabeling (merge_regions output)."""
        new_exhausted: set[int] = set()
        for old in self.exhausted:
            new_exhausted |= mapping.get(old, set())
        self.exhausted = new_exhausted


@dataclass
class VisitLedger:
    """Per-cell visit counts plus the consecutive goal-relocation counter per region."""

    cell_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    consecutive: dict[int, int] = field(default_factory=dict)
    active_region: int | None = None

    def record(self, cell: tuple[int, int], region_id: int | None) -> None:
        """Count a visit; track consecutive same-region goal relocations.

        Visiting a different region (or none) resets the previous region's run.
        """
        self.cell_counts[cell] = self.cell_counts.get(cell, 0) + 1
        if region_id != self.active_region and self.active_region is not None:
            self.consecutive[self.active_region] = 0
        if region_id is not None:
            self.consecutive[region_id] = self.consecutive.get(region_id, 0) + 1
        self.active_region = region_id

    def count(self, cell: tuple[int, int]) -> int:
        return self.cell_counts.get(cell, 0)

    def consecutive_count(self, region_id: int) -> int:
        return self.consecutive.get(region_id, 0)

    def remap_ids(self, mapping: dict[int, set[int]]) -> None:
        new_consecutive: dict[int, int] = {}
        for old, count in self.consecutive.items():
            for new in mapping.get(old, set()):
                new_consecutive[new] = max(new_consecutive.get(new, 0), count)
        self.consecutive = new_consecutive
        if self.active_region is not None:
            targets = sorted(mapping.get(self.active_region, set()))
            self.active_region = targets[0] if targets else None


def prioritize_regions(question: str, oracle) -> RegionPriorityList:
    """Ask the oracle to rank task-relevant region types for this question.

    An empty ranking means goal-oriented mode is never entered.
    """
    if not question:
        raise ValueError("question must be nonempty")
    return RegionPriorityList.from_types(list(oracle.prioritize_regions(question)))


def select_goal_target(masked: MaskedMap, explo: ExplorationMap,
                       dist_m: np.ndarray) -> tuple[int, int] | None:
    """Reachable known-free cell with the highest masked value, or None.

    Ties prefer the smaller geodesic distance, then the lowest row and column.
    dist_m is the distance field from the agent's current cell.
    """
    eligible = ((explo.grid == FREE_EXPLORED)
                & (masked.values > 0.0)
                & np.isfinite(dist_m))
    if not eligible.any():
        return None
    vals = np.where(eligible, masked.values, -1.0)
    vmax = vals.max()
    ys, xs = np.nonzero(vals == vmax)
    best = None
    best_key = (math.inf, 0, 0)
    for x, y in zip(xs, ys):
        key = (float(dist_m[y, x]), int(y), int(x))
        if key < best_key:
            best_key = key
            best = (int(x), int(y))
    return best


def record_visit(ledger: VisitLedger, cell: tuple[int, int],
                 region_id: int | None) -> None:
    ledger.record(cell, region_id)
