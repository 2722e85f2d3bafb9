"""Heading arithmetic and the discrete motion model shared by kinematics and planning.

Coordinates: cell (ix, iy) spans [ix, ix+1) x [iy, iy+1) in cell units, center at
(ix+0.5, iy+0.5); metric position = cell units * resolution. Headings are degrees,
counter-clockwise from +x toward +y, quantized to multiples of the turn increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


def norm_deg(deg: float) -> float:
    """Normalize an angle to [0, 360)."""
    d = math.fmod(deg, 360.0)
    return d + 360.0 if d < 0.0 else d


def cosd(deg: float) -> float:
    """Cosine of an angle in degrees, exact at axis multiples and mirror-symmetric.

    Folding to the first quadrant guarantees e.g. cosd(120) == -cosd(60) bit for
    bit, which keeps the discrete motion model symmetric under reflection.
    """
    d = norm_deg(deg)
    if d <= 90.0:
        return _cos_acute(d)
    if d <= 180.0:
        return -_cos_acute(180.0 - d)
    if d <= 270.0:
        return -_cos_acute(d - 180.0)
    return _cos_acute(360.0 - d)


def sind(deg: float) -> float:
    return cosd(deg - 90.0)


def _cos_acute(d: float) -> float:
    if d == 0.0:
        return 1.0
    if d == 90.0:
        return 0.0
    return math.cos(math.radians(d))


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (sign-symmetric)."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def _segment_hits_cell(ox: int, oy: int, i: int, j: int) -> bool:
    """Exact test: does the center-to-center segment (0,0)->(ox,oy) touch cell (i,j)?

    Uses rational Liang-Barsky clipping against the closed unit square, so corner
    grazes count as hits (supercover): a diagonal move cannot slip between two
    diagonally-touching obstacles.
    """
    half = Fraction(1, 2)
    t0, t1 = Fraction(0), Fraction(1)
    for delta, lo, hi in ((ox, i, i + 1), (oy, j, j + 1)):
        if delta == 0:
            if not (lo <= half <= hi):
                return False
            continue
        ta = (Fraction(lo) - half) / delta
        tb = (Fraction(hi) - half) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def crossed_cells(ox: int, oy: int) -> tuple[tuple[int, int], ...]:
    """Cells swept by a center-to-center move of (ox, oy), origin excluded.

    All returned cells (destination included) must be free for the move to be
    collision-free.
    """
    cells = []
    for i in range(min(0, ox), max(0, ox) + 1):
        for j in range(min(0, oy), max(0, oy) + 1):
            if (i, j) == (0, 0):
                continue
            if _segment_hits_cell(ox, oy, i, j):
                cells.append((i, j))
    cells.sort(key=lambda c: (max(abs(c[0]), abs(c[1])), c[1], c[0]))
    return tuple(cells)


@dataclass(frozen=True)
class MotionModel:
    """Per-heading displacement table for the forward action.

    offsets[h] is the cell displacement of one MoveForward at heading index h;
    crossed[h] lists every cell (relative, origin excluded) that must be free.
    A zero offset means the forward step is shorter than a cell and degenerates
    to a no-op.
    """

    turn_degrees: float
    n_headings: int
    offsets: tuple[tuple[int, int], ...]
    crossed: tuple[tuple[tuple[int, int], ...], ...]

    @classmethod
    def build(cls, forward_step_m: float, turn_degrees: float, resolution: float) -> "MotionModel":
        if forward_step_m <= 0 or resolution <= 0:
            raise ValueError("forward_step_m and resolution must be positive")
        n = round(360.0 / turn_degrees)
        if n < 1 or abs(n * turn_degrees - 360.0) > 1e-9:
            raise ValueError(f"turn_degrees must divide 360 evenly, got {turn_degrees}")
        k = forward_step_m / resolution
        offsets = []
        crossed = []
        for h in range(n):
            angle = h * turn_degrees
            off = (round_half_away(k * cosd(angle)), round_half_away(k * sind(angle)))
            offsets.append(off)
            crossed.append(crossed_cells(*off) if off != (0, 0) else ())
        return cls(turn_degrees, n, tuple(offsets), tuple(crossed))

    def heading_index(self, heading_deg: float) -> int:
        idx = round(norm_deg(heading_deg) / self.turn_degrees) % self.n_headings
        if abs(norm_deg(heading_deg) - norm_deg(idx * self.turn_degrees)) > 1e-6:
            raise ValueError(f"heading {heading_deg} not a multiple of {self.turn_degrees}")
        return idx

    def heading_of(self, idx: int) -> float:
        return norm_deg((idx % self.n_headings) * self.turn_degrees)
