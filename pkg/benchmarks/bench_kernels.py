"""Benchmark the compiled kernels against the pure-Python fallback.

Run: python benchmarks/bench_kernels.py [--repeats N]
Also verifies that both backends produce identical outputs on the benchmark
inputs before timing them.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from eqasim._kernels import load_backend
from eqasim.geometry import MotionModel


def make_inputs(seed: int = 0, size: int = 96):
    rng = np.random.default_rng(seed)
    occ = (rng.random((size, size)) < 0.25).astype(np.uint8)
    occ[size // 2, :] = 0
    occ[:, size // 2] = 0
    occ[1, 1] = 0
    motion = MotionModel.build(0.25, 30.0, 0.25)
    offsets = np.array(motion.offsets, dtype=np.int32)
    starts = np.zeros(motion.n_headings + 1, dtype=np.int32)
    cells = []
    for h, crossed in enumerate(motion.crossed):
        cells.extend(crossed)
        starts[h + 1] = len(cells)
    crossed_cells = np.array(cells, dtype=np.int32)
    angles = [math.radians(a) for a in range(0, 360, 1)]
    dirs_x = np.array([math.cos(a) for a in angles])
    dirs_y = np.array([math.sin(a) for a in angles])
    return occ, (offsets, starts, crossed_cells), (dirs_x, dirs_y)


def bench(backend, occ, tables, dirs, repeats: int):
    h, w = occ.shape
    results = {}

    out = np.zeros_like(occ)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out.fill(0)
        backend.raycast_mask(occ, w / 2 + 0.5, h / 2 + 0.5, dirs[0], dirs[1], 12.0, out)
    results["raycast_mask"] = (time.perf_counter() - t0) / repeats
    ray_out = out.copy()

    dist = np.empty((h, w))
    parent = np.empty((h, w), dtype=np.int32)
    t0 = time.perf_counter()
    for _ in range(repeats):
        backend.distance_field(occ, 1, 1, dist, parent)
    results["distance_field"] = (time.perf_counter() - t0) / repeats

    goal = (w - 2, h - 2)
    t0 = time.perf_counter()
    for _ in range(repeats):
        plan = backend.plan_route(occ, tables[0], tables[1], tables[2],
                                  1, 1, 0, goal[0], goal[1])
    results["plan_route"] = (time.perf_counter() - t0) / repeats
    return results, (ray_out, dist.copy(), parent.copy(),
                     None if plan is None else plan.copy())


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--size", type=int, default=96)
    args = parser.parse_args()

    occ, tables, dirs = make_inputs(size=args.size)
    pure = load_backend("pure")
    try:
        compiled = load_backend("compiled")
    except Exception as exc:
        print(f"compiled backend unavailable ({exc}); nothing to compare")
        return 1

    times_pure, out_pure = bench(pure, occ, tables, dirs, args.repeats)
    times_comp, out_comp = bench(compiled, occ, tables, dirs, args.repeats)

    names = ("raycast_mask", "distance_field", "plan_route")
    identical = (np.array_equal(out_pure[0], out_comp[0])
                 and np.array_equal(out_pure[1], out_comp[1])
                 and np.array_equal(out_pure[2], out_comp[2])
                 and ((out_pure[3] is None and out_comp[3] is None)
                      or np.array_equal(out_pure[3], out_comp[3])))
    print(f"grid {args.size}x{args.size}, repeats {args.repeats}, "
          f"outputs identical: {identical}")
    print(f"{'kernel':<16} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>8}")
    for name in names:
        p = times_pure[name] * 1e3
        c = times_comp[name] * 1e3
        print(f"{name:<16} {p:>10.3f} {c:>14.3f} {p / c:>8.1f}x")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
