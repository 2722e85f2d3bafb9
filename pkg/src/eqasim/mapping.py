"""The agent's belief maps: exploration state, semantic values, functional regions.

Maps are episode-local and mutated in place; nothing here touches the ground-truth
scene except update_explored, which copies occupancy for observed cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import FREE, Scene

UNKNOWN = 0
FREE_EXPLORED = 1
OCCUPIED_EXPLORED = 2


class ExplorationMap:
    """Per-cell exploration state; cells only ever leave UNKNOWN."""

    def __init__(self, width: int, height: int):
        self.grid = np.zeros((height, width), dtype=np.uint8)

    @classmethod
    def for_scene(cls, scene: Scene) -> "ExplorationMap":
        return cls(scene.width, scene.height)

    @property
    def width(self) -> int:
        return self.grid.shape[1]

    @property
    def height(self) -> int:
        return self.grid.shape[0]

    def state(self, cell: tuple[int, int]) -> int:
        return int(self.grid[cell[1], cell[0]])

    def explored_count(self) -> int:
        return int(np.count_nonzero(self.grid != UNKNOWN))


class SemanticMap:
    """Task-relevance values in [0, 1] per cell."""

    def __init__(self, width: int, height: int):
        self.values = np.zeros((height, width), dtype=np.float64)

    @classmethod
    def for_scene(cls, scene: Scene) -> "SemanticMap":
        return cls(scene.width, scene.height)


@dataclass
class RegionInfo:
    region_type: str
    cell_count: int


class RegionMap:
    """Functional-region ids per cell (0 = unlabeled) plus the id table."""

    def __init__(self, width: int, height: int):
        self.ids = np.zeros((height, width), dtype=np.int32)
        self.table: dict[int, RegionInfo] = {}
        self._next_id = 1

    @classmethod
    def for_scene(cls, scene: Scene) -> "RegionMap":
        return cls(scene.width, scene.height)

    def id_at(self, cell: tuple[int, int]) -> int:
        return int(self.ids[cell[1], cell[0]])

    def ids_of_type(self, region_type: str) -> list[int]:
        return sorted(rid for rid, info in self.table.items()
                      if info.region_type == region_type)


@dataclass(frozen=True)
class SamplePoint:
    """A navigable sample cell with its local relevance score."""

    cell: tuple[int, int]
    value: float


class MaskedMap:
    """Semantic values restricted to one region, visit-decayed."""

    def __init__(self, values: np.ndarray, region_id: int):
        self.values = values
        self.region_id = region_id


# -- operations ------------------------------------------------------------------

def update_explored(explo: ExplorationMap, visible, scene: Scene) -> None:
    """Mark observed cells free/occupied per scene truth; others untouched."""
    grid = explo.grid
    occ = scene.occupancy
    for x, y in visible:
        if not (0 <= x < explo.width and 0 <= y < explo.height):
            raise ValueError(f"visible cell {(x, y)} out of bounds")
        grid[y, x] = FREE_EXPLORED if occ[y, x] == FREE else OCCUPIED_EXPLORED


def farthest_point_sample(candidates, k: int, rng) -> list[tuple[int, int]]:
    """Greedy farthest-point subset: uniform first pick, then max-min distance.

    Deterministic given the rng seed; distance ties resolve to the lowest
    (row, column) candidate.
    """
    pool = sorted(set(candidates), key=lambda c: (c[1], c[0]))
    if not pool:
        raise ValueError("farthest_point_sample needs at least one candidate")
    if k < 1:
        raise ValueError("k must be >= 1")
    chosen = [pool.pop(rng.randrange(len(pool)))]
    while pool and len(chosen) < k:
        best_idx = 0
        best_d = -1.0
        for i, (cx, cy) in enumerate(pool):
            d = min((cx - px) ** 2 + (cy - py) ** 2 for px, py in chosen)
            if d > best_d:
                best_d = d
                best_idx = i
        chosen.append(pool.pop(best_idx))
    return chosen


_KERNEL_CACHE: dict[float, np.ndarray] = {}


def _gaussian_patch(sigma_cells: float) -> np.ndarray:
    """Peak-1 Gaussian patch truncated at 3 sigma (zero outside the disk)."""
    patch = _KERNEL_CACHE.get(sigma_cells)
    if patch is None:
        r = int(math.ceil(3.0 * sigma_cells))
        ax = np.arange(-r, r + 1, dtype=np.float64)
        d2 = ax[None, :] ** 2 + ax[:, None] ** 2
        patch = np.exp(-d2 / (2.0 * sigma_cells * sigma_cells))
        patch[d2 > (3.0 * sigma_cells) ** 2] = 0.0
        _KERNEL_CACHE[sigma_cells] = patch
    return patch


def update_semantic(sem: SemanticMap, samples, v_g: float, w_local: float,
                    w_global: float, sigma_cells: float) -> None:
    """Stamp each sample's fused value as a peak-normalized Gaussian, combining
    with the existing map by per-cell maximum (idempotent, order-free)."""
    if w_local < 0 or w_global < 0 or abs(w_local + w_global - 1.0) > 1e-9:
        raise ValueError("fusion weights must be nonnegative and sum to 1")
    if not 0.0 <= v_g <= 1.0:
        raise ValueError(f"v_g out of [0,1]: {v_g}")
    h, w = sem.values.shape
    patch = _gaussian_patch(sigma_cells)
    r = patch.shape[0] // 2
    for sp in samples:
        if not 0.0 <= sp.value <= 1.0:
            raise ValueError(f"sample value out of [0,1]: {sp.value}")
        v = w_local * sp.value + w_global * v_g
        if v <= 0.0:
            continue
        cx, cy = sp.cell
        x0, x1 = max(0, cx - r), min(w, cx + r + 1)
        y0, y1 = max(0, cy - r), min(h, cy + r + 1)
        sub = patch[y0 - cy + r:y1 - cy + r, x0 - cx + r:x1 - cx + r]
        region = sem.values[y0:y1, x0:x1]
        np.maximum(region, v * sub, out=region)


def update_region(reg: RegionMap, explo: ExplorationMap, region_type: str,
                  confidence: float, q: tuple[int, int], threshold: float,
                  neighborhood_radius_cells: int) -> int | None:
    """Stamp a region label over known-free cells around q when confident enough.

    Reuses an adjacent same-type id when one touches the stamped neighborhood,
    else allocates the next id. Returns the id used, or None below threshold.
    """
    if not (0 <= q[0] < reg.ids.shape[1] and 0 <= q[1] < reg.ids.shape[0]):
        raise ValueError(f"representative point {q} out of bounds")
    if confidence <= threshold:
        return None
    r = neighborhood_radius_cells
    h, w = reg.ids.shape
    cells = [(x, y)
             for y in range(max(0, q[1] - r), min(h, q[1] + r + 1))
             for x in range(max(0, q[0] - r), min(w, q[0] + r + 1))
             if explo.grid[y, x] == FREE_EXPLORED]
    if not cells:
        return None
    # adjacency check: any same-type id on or next to the stamped neighborhood
    rid = 0
    for x, y in cells:
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h:
                    other = int(reg.ids[ny, nx])
                    if other > 0 and reg.table[other].region_type == region_type:
                        if rid == 0 or other < rid:
                            rid = other
    if rid == 0:
        rid = reg._next_id
        reg._next_id += 1
        reg.table[rid] = RegionInfo(region_type, 0)
    for x, y in cells:
        old = int(reg.ids[y, x])
        if old == rid:
            continue
        if old > 0:
            reg.table[old].cell_count -= 1
            if reg.table[old].cell_count == 0:
                del reg.table[old]
        reg.ids[y, x] = rid
        reg.table[rid].cell_count += 1
    return rid


def merge_regions(reg: RegionMap, gap_cells: int) -> dict[int, set[int]]:
    """Relabel same-type cells within gap_cells (Chebyshev) of each other as one id.

    Ids are reassigned densely from 1, ordered by each component's first cell in
    row-major order. Returns the old-id -> new-ids mapping so callers can remap
    any state keyed by region id. Idempotent.
    """
    h, w = reg.ids.shape
    by_type: dict[str, list[tuple[int, int]]] = {}
    old_ids = reg.ids.copy()
    for y in range(h):
        for x in range(w):
            rid = int(old_ids[y, x])
            if rid > 0:
                by_type.setdefault(reg.table[rid].region_type, []).append((x, y))

    components: list[tuple[tuple[int, int], str, list[tuple[int, int]]]] = []
    g = gap_cells
    for rtype, cells in by_type.items():
        remaining = set(cells)
        for seed in cells:  # row-major seeds give deterministic component order
            if seed not in remaining:
                continue
            comp = [seed]
            remaining.discard(seed)
            stack = [seed]
            while stack:
                cx, cy = stack.pop()
                for ny in range(cy - g, cy + g + 1):
                    for nx in range(cx - g, cx + g + 1):
                        if (nx, ny) in remaining:
                            remaining.discard((nx, ny))
                            comp.append((nx, ny))
                            stack.append((nx, ny))
            first = min((y, x) for x, y in comp)
            components.append((first, rtype, comp))

    components.sort(key=lambda item: item[0])
    mapping: dict[int, set[int]] = {}
    reg.ids.fill(0)
    reg.table.clear()
    for new_id, (_, rtype, comp) in enumerate(components, start=1):
        reg.table[new_id] = RegionInfo(rtype, len(comp))
        for x, y in comp:
            reg.ids[y, x] = new_id
            old = int(old_ids[y, x])
            mapping.setdefault(old, set()).add(new_id)
    reg._next_id = len(components) + 1
    return mapping


def mask_semantic(sem: SemanticMap, reg: RegionMap, region_id: int,
                  visit_counts: dict[tuple[int, int], int],
                  decay_factor: float) -> MaskedMap:
    """Semantic values inside one region, scaled down per recorded visit."""
    if region_id not in reg.table:
        raise KeyError(f"unknown region id {region_id}")
    values = np.where(reg.ids == region_id, sem.values, 0.0)
    h, w = values.shape
    for (x, y), count in visit_counts.items():
        if 0 <= x < w and 0 <= y < h and count > 0:
            values[y, x] *= decay_factor ** count
    return MaskedMap(values, region_id)
