"""Frontier detection, clustering, composite weighting, and probabilistic choice."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mapping import FREE_EXPLORED, OCCUPIED_EXPLORED, UNKNOWN, ExplorationMap, SemanticMap


@dataclass
class FrontierCandidate:
    """A clustered frontier with the features feeding its selection weight."""

    cell: tuple[int, int]
    cluster_size: int
    v_sem: float = 0.0
    r_e: float = 0.0
    r_o: float = 0.0
    dis_m: float = 0.0
    weight: float = 0.0


@dataclass(frozen=True)
class WeightParams:
    alpha_semantic: float = 1.0
    alpha_unexplored: float = 1.0
    alpha_unoccupied: float = 0.5
    lambda_per_m: float = 0.3

    def __post_init__(self):
        if min(self.alpha_semantic, self.alpha_unexplored,
               self.alpha_unoccupied, self.lambda_per_m) < 0:
            raise ValueError("weight parameters must be nonnegative")


def detect_frontiers(explo: ExplorationMap) -> set[tuple[int, int]]:
    """Known-free cells with at least one unknown 8-neighbor."""
    grid = explo.grid
    free = grid == FREE_EXPLORED
    unknown = np.pad(grid == UNKNOWN, 1, constant_values=False)
    near_unknown = np.zeros_like(free)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dx == 1 and dy == 1:
                continue
            near_unknown |= unknown[dy:dy + grid.shape[0], dx:dx + grid.shape[1]]
    ys, xs = np.nonzero(free & near_unknown)
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


def cluster_frontiers(cells, min_cluster_size: int) -> list[FrontierCandidate]:
    """8-connected components of the frontier set, small ones dropped.

    The representative is the member nearest the component centroid (ties:
    lowest row, then column); candidates come back sorted by representative.
    """
    remaining = set(cells)
    candidates = []
    for seed in sorted(remaining, key=lambda c: (c[1], c[0])):
        if seed not in remaining:
            continue
        comp = [seed]
        remaining.discard(seed)
        stack = [seed]
        while stack:
            cx, cy = stack.pop()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    nbr = (cx + dx, cy + dy)
                    if nbr in remaining:
                        remaining.discard(nbr)
                        comp.append(nbr)
                        stack.append(nbr)
        if len(comp) < min_cluster_size:
            continue
        mx = sum(c[0] for c in comp) / len(comp)
        my = sum(c[1] for c in comp) / len(comp)
        rep = min(comp, key=lambda c: ((c[0] - mx) ** 2 + (c[1] - my) ** 2, c[1], c[0]))
        candidates.append(FrontierCandidate(cell=rep, cluster_size=len(comp)))
    candidates.sort(key=lambda c: (c.cell[1], c.cell[0]))
    return candidates


def direction_rates(explo: ExplorationMap, p_cur: tuple[float, float],
                    f: tuple[int, int], probe_len_m: float,
                    resolution: float) -> tuple[float, float]:
    """Unexplored and unoccupied fractions along the outward ray through f.

    Samples the ray from the frontier cell away from the agent at one-cell
    spacing; out-of-bounds samples count as explored and occupied.
    """
    fx = (f[0] + 0.5) * resolution
    fy = (f[1] + 0.5) * resolution
    dx = fx - p_cur[0]
    dy = fy - p_cur[1]
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("frontier cell coincides with the agent position")
    dx /= norm
    dy /= norm
    n = max(1, int(round(probe_len_m / resolution)))
    h, w = explo.grid.shape
    unexplored = 0
    unoccupied = 0
    for i in range(1, n + 1):
        sx = fx + i * resolution * dx
        sy = fy + i * resolution * dy
        cx = int(math.floor(sx / resolution))
        cy = int(math.floor(sy / resolution))
        if not (0 <= cx < w and 0 <= cy < h):
            continue  # counts as explored and occupied
        state = explo.grid[cy, cx]
        if state == UNKNOWN:
            unexplored += 1
        if state != OCCUPIED_EXPLORED:
            unoccupied += 1
    return unexplored / n, unoccupied / n


def semantic_near(sem: SemanticMap, cell: tuple[int, int], radius_cells: int) -> float:
    """Mean semantic value in the square window around a cell (clipped at borders)."""
    h, w = sem.values.shape
    x0, x1 = max(0, cell[0] - radius_cells), min(w, cell[0] + radius_cells + 1)
    y0, y1 = max(0, cell[1] - radius_cells), min(h, cell[1] + radius_cells + 1)
    return float(sem.values[y0:y1, x0:x1].mean())


def frontier_weight(c: FrontierCandidate, params: WeightParams) -> float:
    """Log-linear weight: exponential feature boost times exponential distance decay."""
    boost = (params.alpha_semantic * c.v_sem
             + params.alpha_unexplored * c.r_e
             + params.alpha_unoccupied * c.r_o)
    return math.exp(boost) * math.exp(-params.lambda_per_m * c.dis_m)


def score_candidates(candidates: list[FrontierCandidate], explo: ExplorationMap,
                     sem: SemanticMap, p_cur: tuple[float, float], params: WeightParams,
                     resolution: float, probe_len_m: float, sem_radius_cells: int,
                     geodesic_m: np.ndarray | None = None) -> list[FrontierCandidate]:
    """Fill features and weights in place; drops candidates with no finite distance.

    geodesic_m, when given, is a per-cell distance array used instead of the
    default Euclidean distance to the agent.
    """
    scored = []
    for c in candidates:
        fx = (c.cell[0] + 0.5) * resolution
        fy = (c.cell[1] + 0.5) * resolution
        if fx == p_cur[0] and fy == p_cur[1]:
            continue  # standing on the frontier: no outward direction, no relocation
        c.v_sem = semantic_near(sem, c.cell, sem_radius_cells)
        c.r_e, c.r_o = direction_rates(explo, p_cur, c.cell, probe_len_m, resolution)
        if geodesic_m is not None:
            c.dis_m = float(geodesic_m[c.cell[1], c.cell[0]])
        else:
            cx = (c.cell[0] + 0.5) * resolution
            cy = (c.cell[1] + 0.5) * resolution
            c.dis_m = math.hypot(cx - p_cur[0], cy - p_cur[1])
        if not math.isfinite(c.dis_m):
            continue
        c.weight = frontier_weight(c, params)
        scored.append(c)
    return scored


def sample_frontier(candidates: list[FrontierCandidate], rng) -> FrontierCandidate:
    """Draw a candidate with probability proportional to its weight."""
    if not candidates:
        raise ValueError("no frontier candidates to sample")
    total = 0.0
    for c in candidates:
        if not c.weight > 0.0:
            raise ValueError(f"candidate weight must be positive, got {c.weight}")
        total += c.weight
    x = rng.random() * total
    acc = 0.0
    for c in candidates:
        acc += c.weight
        if x < acc:
            return c
    return candidates[-1]
