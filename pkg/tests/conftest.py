import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make tests/oracles.py importable

from eqasim.geometry import MotionModel
from eqasim.scene import Scene

SHARE_DIR = Path(__file__).parent.parent / "share"


def grid_scene(rows, resolution=0.25, name="test", legend=None, region_rows=None):
    """Build a Scene straight from ASCII rows ('.' free, '#' occupied)."""
    occ = np.array([[0 if ch == "." else 1 for ch in row] for row in rows],
                   dtype=np.uint8)
    region_types = tuple(legend) if legend else ()
    region_grid = np.full(occ.shape, -1, dtype=np.int16)
    if region_rows:
        letters = {chr(ord("A") + i): i for i in range(len(region_types))}
        for y, row in enumerate(region_rows):
            for x, ch in enumerate(row):
                if ch != ".":
                    region_grid[y, x] = letters[ch]
    return Scene(name, resolution, occ, region_types, region_grid)


def random_occupancy(rng, width, height, p_occupied=0.3):
    occ = (rng.random((height, width)) < p_occupied).astype(np.uint8)
    return occ


@pytest.fixture
def motion():
    return MotionModel.build(0.25, 30.0, 0.25)


@pytest.fixture
def open_room():
    return grid_scene(["." * 21] * 21)
