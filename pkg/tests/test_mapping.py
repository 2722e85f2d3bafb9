import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_scene
from eqasim.mapping import (FREE_EXPLORED, OCCUPIED_EXPLORED, UNKNOWN, ExplorationMap,
                            RegionMap, SamplePoint, SemanticMap, farthest_point_sample,
                            mask_semantic, merge_regions, update_explored,
                            update_region, update_semantic)
from oracles import components_ref


def _explored_scene():
    return grid_scene([
        "....#",
        ".....",
        "..#..",
        ".....",
    ])


def _all_explored(scene):
    explo = ExplorationMap.for_scene(scene)
    update_explored(explo, [(x, y) for x in range(scene.width)
                            for y in range(scene.height)], scene)
    return explo


# -- update_explored -------------------------------------------------------------

def test_update_explored_empty_is_identity():
    scene = _explored_scene()
    explo = ExplorationMap.for_scene(scene)
    before = explo.grid.copy()
    update_explored(explo, [], scene)
    assert np.array_equal(explo.grid, before)


def test_update_explored_single_cell():
    scene = _explored_scene()
    explo = ExplorationMap.for_scene(scene)
    update_explored(explo, [(1, 1)], scene)
    assert explo.state((1, 1)) == FREE_EXPLORED
    assert explo.explored_count() == 1
    update_explored(explo, [(4, 0)], scene)
    assert explo.state((4, 0)) == OCCUPIED_EXPLORED


def test_update_explored_order_independent():
    scene = _explored_scene()
    rng = random.Random(0)
    cells = scene.free_cells()
    obs1 = set(rng.sample(cells, 6))
    obs2 = set(rng.sample(cells, 6))
    a = ExplorationMap.for_scene(scene)
    update_explored(a, obs1, scene)
    update_explored(a, obs2, scene)
    b = ExplorationMap.for_scene(scene)
    update_explored(b, obs1 | obs2, scene)
    assert np.array_equal(a.grid, b.grid)


# -- farthest_point_sample ---------------------------------------------------------

def test_fps_single():
    rng = random.Random(1)
    out = farthest_point_sample({(2, 3)}, 1, rng)
    assert out == [(2, 3)]


def test_fps_square_corners_picks_diagonal():
    corners = [(0, 0), (10, 0), (0, 10), (10, 10)]
    for seed in range(10):
        out = farthest_point_sample(corners, 2, random.Random(seed))
        first, second = out
        assert second == (10 - first[0], 10 - first[1])


def test_fps_empty_candidates_error():
    with pytest.raises(ValueError, match="candidate"):
        farthest_point_sample([], 1, random.Random(0))


def test_fps_matches_greedy_maximizer_oracle():
    rng = random.Random(2)
    for trial in range(10):
        cells = {(rng.randrange(40), rng.randrange(40)) for _ in range(100)}
        out = farthest_point_sample(cells, 5, random.Random(trial))
        # each pick after the first must maximize min distance to prior picks
        for i in range(1, len(out)):
            chosen_d = min((out[i][0] - p[0]) ** 2 + (out[i][1] - p[1]) ** 2
                           for p in out[:i])
            best = max(min((c[0] - p[0]) ** 2 + (c[1] - p[1]) ** 2 for p in out[:i])
                       for c in cells if c not in out[:i])
            assert chosen_d == best


# -- update_semantic -----------------------------------------------------------------

def test_semantic_empty_samples_identity():
    sem = SemanticMap(10, 10)
    before = sem.values.copy()
    update_semantic(sem, [], 0.7, 0.5, 0.5, 3.0)
    assert np.array_equal(sem.values, before)


def test_semantic_peak_and_radial_decay():
    sem = SemanticMap(21, 21)
    update_semantic(sem, [SamplePoint((10, 10), 1.0)], 1.0, 0.5, 0.5, 3.0)
    assert sem.values[10, 10] == pytest.approx(1.0)
    for r in range(1, 9):
        assert sem.values[10, 10 + r] <= sem.values[10, 10 + r - 1] + 1e-12
    assert sem.values[10, 20] == 0.0  # beyond 3 sigma truncation


def test_semantic_stamp_idempotent():
    sem = SemanticMap(15, 15)
    samples = [SamplePoint((7, 7), 0.8)]
    update_semantic(sem, samples, 0.4, 0.5, 0.5, 2.0)
    once = sem.values.copy()
    update_semantic(sem, samples, 0.4, 0.5, 0.5, 2.0)
    assert np.array_equal(sem.values, once)


def test_semantic_rejects_bad_weights():
    sem = SemanticMap(5, 5)
    with pytest.raises(ValueError, match="fusion"):
        update_semantic(sem, [], 0.5, 0.7, 0.7, 2.0)


def test_semantic_commutative_over_sample_order():
    rng = random.Random(6)
    samples = [SamplePoint((rng.randrange(15), rng.randrange(15)), rng.random())
               for _ in range(8)]
    a = SemanticMap(15, 15)
    b = SemanticMap(15, 15)
    update_semantic(a, samples, 0.6, 0.5, 0.5, 2.0)
    update_semantic(b, list(reversed(samples)), 0.6, 0.5, 0.5, 2.0)
    assert np.array_equal(a.values, b.values)


def test_explored_count_monotone_under_random_streams():
    scene = grid_scene(["." * 10 + "#" * 2] * 8)
    rng = random.Random(5)
    explo = ExplorationMap.for_scene(scene)
    last = 0
    cells = [(x, y) for x in range(12) for y in range(8)]
    for _ in range(20):
        update_explored(explo, rng.sample(cells, rng.randrange(0, 10)), scene)
        count = explo.explored_count()
        assert count >= last
        last = count


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_semantic_values_stay_in_unit_interval(seed):
    rng = random.Random(seed)
    sem = SemanticMap(12, 12)
    for _ in range(rng.randrange(1, 8)):
        samples = [SamplePoint((rng.randrange(12), rng.randrange(12)), rng.random())
                   for _ in range(rng.randrange(0, 5))]
        update_semantic(sem, samples, rng.random(), 0.5, 0.5,
                        rng.choice([1.0, 2.0, 3.0]))
    assert float(sem.values.min()) >= 0.0
    assert float(sem.values.max()) <= 1.0


# -- update_region / merge_regions ----------------------------------------------------

def test_region_below_threshold_unchanged():
    scene = grid_scene(["....", "...."])
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    out = update_region(reg, explo, "kitchen", 0.4, (1, 1), 0.5, 2)
    assert out is None
    assert not reg.table
    assert not reg.ids.any()


def test_region_first_stamp_allocates_id_one():
    scene = grid_scene(["......", "......", "......"])
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    rid = update_region(reg, explo, "kitchen", 0.9, (2, 1), 0.5, 1)
    assert rid == 1
    assert reg.table[1].region_type == "kitchen"
    assert reg.table[1].cell_count == 9  # 3x3 neighborhood all free+explored
    assert reg.id_at((2, 1)) == 1


def test_region_overlapping_stamps_merge_to_one_component():
    scene = grid_scene(["." * 12] * 6)
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    update_region(reg, explo, "kitchen", 0.9, (2, 2), 0.5, 2)
    update_region(reg, explo, "kitchen", 0.9, (4, 2), 0.5, 2)
    merge_regions(reg, 2)
    kitchen_ids = reg.ids_of_type("kitchen")
    assert len(kitchen_ids) == 1
    cells = {(x, y) for y in range(6) for x in range(12)
             if reg.id_at((x, y)) == kitchen_ids[0]}
    assert components_ref(cells, 2) == [cells]


def test_merge_single_region_identity():
    scene = grid_scene(["....", "...."])
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    update_region(reg, explo, "bath", 0.8, (1, 0), 0.5, 1)
    before_ids = reg.ids.copy()
    mapping = merge_regions(reg, 2)
    assert np.array_equal(reg.ids, before_ids)
    assert mapping == {1: {1}}


def test_merge_two_blobs_within_gap():
    scene = grid_scene(["." * 14] * 3)
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    update_region(reg, explo, "bath", 0.9, (1, 1), 0.5, 1)
    update_region(reg, explo, "bath", 0.9, (5, 1), 0.5, 1)  # blobs 1 column apart
    assert len(reg.table) == 2
    merge_regions(reg, 2)
    assert len(reg.ids_of_type("bath")) == 1


def test_merge_matches_dilated_components_oracle():
    rng = random.Random(9)
    scene = grid_scene(["." * 30] * 20)
    explo = _all_explored(scene)
    for gap in (1, 2, 3):
        reg = RegionMap.for_scene(scene)
        for _ in range(12):
            rtype = rng.choice(["kitchen", "bath"])
            q = (rng.randrange(30), rng.randrange(20))
            update_region(reg, explo, rtype, 0.9, q, 0.5, 1)
        merge_regions(reg, gap)
        for rtype in ("kitchen", "bath"):
            cells = {(x, y) for y in range(20) for x in range(30)
                     if reg.id_at((x, y)) in reg.ids_of_type(rtype)}
            if not cells:
                continue
            want = components_ref(cells, gap)
            got = []
            for rid in reg.ids_of_type(rtype):
                got.append({(x, y) for y in range(20) for x in range(30)
                            if reg.id_at((x, y)) == rid})
            got.sort(key=lambda g: min((y, x) for x, y in g))
            assert got == want
        # ids dense from 1
        assert sorted(reg.table) == list(range(1, len(reg.table) + 1))


def test_merge_idempotent():
    rng = random.Random(4)
    scene = grid_scene(["." * 20] * 12)
    explo = _all_explored(scene)
    reg = RegionMap.for_scene(scene)
    for _ in range(8):
        update_region(reg, explo, rng.choice(["a", "b"]), 0.9,
                      (rng.randrange(20), rng.randrange(12)), 0.5, 2)
    merge_regions(reg, 2)
    ids_once = reg.ids.copy()
    table_once = {k: (v.region_type, v.cell_count) for k, v in reg.table.items()}
    mapping = merge_regions(reg, 2)
    assert np.array_equal(reg.ids, ids_once)
    assert {k: (v.region_type, v.cell_count) for k, v in reg.table.items()} == table_once
    assert all(mapping[k] == {k} for k in table_once)


# -- mask_semantic ---------------------------------------------------------------------

def _masked_setup():
    scene = grid_scene(["....", "...."])
    explo = _all_explored(scene)
    sem = SemanticMap.for_scene(scene)
    reg = RegionMap.for_scene(scene)
    update_region(reg, explo, "kitchen", 0.9, (0, 0), 0.5, 4)  # whole map
    return scene, sem, reg


def test_mask_whole_map_region_identity():
    _, sem, reg = _masked_setup()
    sem.values[:] = 0.7
    masked = mask_semantic(sem, reg, 1, {}, 0.5)
    assert np.array_equal(masked.values, sem.values)


def test_mask_zeroes_outside_region():
    scene = grid_scene(["......", "......"])
    explo = _all_explored(scene)
    sem = SemanticMap.for_scene(scene)
    sem.values[:] = 0.9
    reg = RegionMap.for_scene(scene)
    update_region(reg, explo, "kitchen", 0.9, (1, 0), 0.5, 1)
    masked = mask_semantic(sem, reg, 1, {}, 0.5)
    assert masked.values[0, 5] == 0.0
    assert masked.values[0, 1] == 0.9


def test_mask_visit_decay():
    _, sem, reg = _masked_setup()
    sem.values[1, 2] = 0.8
    masked = mask_semantic(sem, reg, 1, {(2, 1): 2}, 0.5)
    assert masked.values[1, 2] == pytest.approx(0.8 * 0.25, abs=1e-12)


def test_mask_unknown_region_error():
    _, sem, reg = _masked_setup()
    with pytest.raises(KeyError, match="region id"):
        mask_semantic(sem, reg, 99, {}, 0.5)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_mask_support_subset_of_region(seed):
    rng = random.Random(seed)
    scene = grid_scene(["." * 10] * 8)
    explo = _all_explored(scene)
    sem = SemanticMap.for_scene(scene)
    sem.values[:] = np.random.default_rng(seed).random((8, 10))
    reg = RegionMap.for_scene(scene)
    for _ in range(4):
        update_region(reg, explo, rng.choice(["a", "b", "c"]), 0.9,
                      (rng.randrange(10), rng.randrange(8)), 0.5, 1)
    if not reg.table:
        return
    rid = rng.choice(sorted(reg.table))
    visits = {(rng.randrange(10), rng.randrange(8)): rng.randrange(3)
              for _ in range(6)}
    masked = mask_semantic(sem, reg, rid, visits, 0.5)
    ys, xs = np.nonzero(masked.values > 0)
    assert all(reg.id_at((int(x), int(y))) == rid for x, y in zip(xs, ys))
