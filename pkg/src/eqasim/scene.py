"""Immutable grid-world scenes: occupancy, visibility, geodesics, kinematics.

A scene is loaded once from its text format and never mutated afterwards, so it
can be shared freely across concurrent episodes. All operations here are pure
functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import _kernels
from .geometry import MotionModel, norm_deg

FREE = 0
OCCUPIED = 1

UNREACHABLE = math.inf


class AtomicAction(IntEnum):
    """The agent's three primitive moves. Values fix the planner's tie-break order."""

    MOVE_FORWARD = 0
    TURN_LEFT = 1
    TURN_RIGHT = 2


class SceneFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


class TrajectorySamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Pose:
    """Agent pose: planar position in meters plus quantized heading in degrees."""

    x: float
    y: float
    heading: float

    def cell(self, resolution: float) -> tuple[int, int]:
        return (int(math.floor(self.x / resolution)), int(math.floor(self.y / resolution)))

    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Scene:
    name: str
    resolution: float
    occupancy: np.ndarray  # uint8 [h, w]; FREE / OCCUPIED
    region_types: tuple[str, ...]
    region_grid: np.ndarray  # int16 [h, w]; index into region_types, -1 unlabeled

    def __post_init__(self):
        self.occupancy.setflags(write=False)
        self.region_grid.setflags(write=False)

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and self.occupancy[cell[1], cell[0]] == FREE

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution)))

    def center_of(self, cell: tuple[int, int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.resolution, (cell[1] + 0.5) * self.resolution)

    def center_pose(self, cell: tuple[int, int], heading: float) -> Pose:
        cx, cy = self.center_of(cell)
        return Pose(cx, cy, norm_deg(heading))

    def region_type_at(self, cell: tuple[int, int]) -> str | None:
        idx = self.region_grid[cell[1], cell[0]]
        return self.region_types[idx] if idx >= 0 else None

    def free_cells(self) -> list[tuple[int, int]]:
        ys, xs = np.nonzero(self.occupancy == FREE)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    @property
    def free_area_m2(self) -> float:
        n_free = int(np.count_nonzero(self.occupancy == FREE))
        return n_free * self.resolution * self.resolution


@dataclass(frozen=True)
class TrajectorySpec:
    """A sampled ground-truth trajectory: start pose, target, and minimal actions."""

    start: Pose
    target: tuple[float, float]
    actions: tuple[AtomicAction, ...]
    step_count: int
    geodesic_length: float


# -- scene file format ---------------------------------------------------------

_GLYPH_TO_CELL = {".": FREE, "#": OCCUPIED}


def load_scene(text: str) -> Scene:
    """Parse the scene text format; errors carry line/column positions."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    pos = 0

    def expect(prefix: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise SceneFormatError(f"missing '{prefix}' header", pos + 1)
        line = lines[pos]
        if not line.startswith(prefix):
            raise SceneFormatError(f"expected '{prefix}' header, got {line!r}", pos + 1)
        pos += 1
        return line[len(prefix):].strip()

    name = expect("name:")
    if not name:
        raise SceneFormatError("empty scene name", 1)
    res_text = expect("resolution:")
    try:
        resolution = float(res_text)
    except ValueError:
        raise SceneFormatError(f"resolution is not a number: {res_text!r}", 2) from None
    if not (resolution > 0 and math.isfinite(resolution)):
        raise SceneFormatError(f"resolution must be positive, got {res_text}", 2)
    header = expect("map:")
    if header:
        raise SceneFormatError("unexpected text after 'map:'", 3)

    rows = []
    while pos < len(lines) and not lines[pos].startswith(("legend:", "regions:")):
        rows.append((pos + 1, lines[pos]))
        pos += 1
    if not rows:
        raise SceneFormatError("map has no rows", pos + 1)
    width = len(rows[0][1])
    if width == 0:
        raise SceneFormatError("map row is empty", rows[0][0])
    occupancy = np.zeros((len(rows), width), dtype=np.uint8)
    for y, (line_no, row) in enumerate(rows):
        if len(row) != width:
            raise SceneFormatError(
                f"ragged map row: expected {width} glyphs, got {len(row)}",
                line_no, len(row) + 1)
        for x, glyph in enumerate(row):
            if glyph not in _GLYPH_TO_CELL:
                raise SceneFormatError(f"unknown map glyph {glyph!r}", line_no, x + 1)
            occupancy[y, x] = _GLYPH_TO_CELL[glyph]
    if not np.any(occupancy == FREE):
        raise SceneFormatError("scene has no free cells", rows[0][0])

    region_types: list[str] = []
    region_grid = np.full(occupancy.shape, -1, dtype=np.int16)
    if pos < len(lines):
        legend_line = pos + 1
        legend_text = expect("legend:")
        letter_to_index: dict[str, int] = {}
        for item in legend_text.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise SceneFormatError(f"malformed legend entry {item!r}", legend_line)
            letter, _, rtype = item.partition("=")
            letter = letter.strip()
            rtype = rtype.strip()
            if len(letter) != 1 or not letter.isalpha() or not letter.isupper():
                raise SceneFormatError(f"legend key must be a single letter A-Z, got {letter!r}",
                                       legend_line)
            if not rtype:
                raise SceneFormatError(f"legend entry {item!r} has empty region type", legend_line)
            if letter in letter_to_index:
                raise SceneFormatError(f"duplicate legend letter {letter!r}", legend_line)
            letter_to_index[letter] = len(region_types)
            region_types.append(rtype)
        header = expect("regions:")
        if header:
            raise SceneFormatError("unexpected text after 'regions:'", pos)
        for y in range(len(rows)):
            if pos >= len(lines):
                raise SceneFormatError(
                    f"regions block has {y} rows, map has {len(rows)}", pos + 1)
            line_no, row = pos + 1, lines[pos]
            pos += 1
            if len(row) != width:
                raise SceneFormatError(
                    f"ragged regions row: expected {width} glyphs, got {len(row)}",
                    line_no, len(row) + 1)
            for x, glyph in enumerate(row):
                if glyph == ".":
                    continue
                if glyph not in letter_to_index:
                    raise SceneFormatError(f"region letter {glyph!r} not in legend", line_no, x + 1)
                if occupancy[y, x] != FREE:
                    raise SceneFormatError("region label on occupied cell", line_no, x + 1)
                region_grid[y, x] = letter_to_index[glyph]
    if pos < len(lines):
        raise SceneFormatError(f"unexpected trailing content: {lines[pos]!r}", pos + 1)

    return Scene(name, resolution, occupancy, tuple(region_types), region_grid)


def write_scene(scene: Scene) -> str:
    """Serialize a scene back to its text format (canonical form)."""
    out = [f"name: {scene.name}", f"resolution: {scene.resolution!r}", "map:"]
    glyphs = {FREE: ".", OCCUPIED: "#"}
    for y in range(scene.height):
        out.append("".join(glyphs[int(scene.occupancy[y, x])] for x in range(scene.width)))
    if scene.region_types:
        letters = [chr(ord("A") + i) for i in range(len(scene.region_types))]
        legend = ",".join(f"{letter}={rtype}" for letter, rtype in zip(letters, scene.region_types))
        out.append(f"legend: {legend}")
        out.append("regions:")
        for y in range(scene.height):
            row = []
            for x in range(scene.width):
                idx = scene.region_grid[y, x]
                row.append(letters[idx] if idx >= 0 else ".")
            out.append("".join(row))
    return "\n".join(out) + "\n"


# -- observation ---------------------------------------------------------------

def visible_cells(scene: Scene, pose: Pose, fov_degrees: float, range_m: float,
                  ray_step_degrees: float = 1.0) -> set[tuple[int, int]]:
    """Cells hit by view rays before (and including) the first wall on each ray.

    Rays fan across the field of view at ray_step_degrees spacing. A
    non-positive field of view degenerates to the agent's own cell.
    """
    if ray_step_degrees <= 0:
        raise ValueError("ray_step_degrees must be positive")
    cell = pose.cell(scene.resolution)
    if not scene.in_bounds(cell):
        raise ValueError(f"pose {pose} outside scene bounds")
    if fov_degrees <= 0 or range_m <= 0:
        return {cell}
    fov = min(fov_degrees, 360.0)
    n_rays = int(math.floor(fov / ray_step_degrees + 1e-9)) + 1
    start = pose.heading - fov / 2.0
    angles = [math.radians(start + i * ray_step_degrees) for i in range(n_rays)]
    dirs_x = np.array([math.cos(a) for a in angles], dtype=np.float64)
    dirs_y = np.array([math.sin(a) for a in angles], dtype=np.float64)
    mask = np.zeros_like(scene.occupancy)
    _kernels.raycast_mask(scene.occupancy, pose.x / scene.resolution,
                          pose.y / scene.resolution, dirs_x, dirs_y,
                          range_m / scene.resolution, mask)
    ys, xs = np.nonzero(mask)
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


# -- geodesics -----------------------------------------------------------------

def distance_field(scene: Scene, src: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Geodesic distances in meters from src to every cell, plus parent indices.

    Unreachable cells get inf; parents are flat (y*width+x) indices, -1 at the
    source and unreachable cells.
    """
    if not scene.in_bounds(src):
        raise ValueError(f"source cell {src} out of bounds")
    dist = np.empty(scene.occupancy.shape, dtype=np.float64)
    parent = np.empty(scene.occupancy.shape, dtype=np.int32)
    _kernels.distance_field(scene.occupancy, src[0], src[1], dist, parent)
    return dist * scene.resolution, parent


def path_cells(parent: np.ndarray, src: tuple[int, int], dst: tuple[int, int]
               ) -> list[tuple[int, int]] | None:
    """Cell path src..dst recovered from a distance_field parent array."""
    w = parent.shape[1]
    flat = parent.ravel()
    path = [dst]
    cur = dst[1] * w + dst[0]
    src_flat = src[1] * w + src[0]
    while cur != src_flat:
        cur = int(flat[cur])
        if cur < 0:
            return None
        path.append((cur % w, cur // w))
    path.reverse()
    return path


def geodesic_distance(scene: Scene, a: tuple[float, float], b: tuple[float, float]) -> float:
    """Shortest 8-connected path length in meters between the cells of a and b.

    Returns UNREACHABLE (inf) when no free path exists or an endpoint is on an
    occupied cell.
    """
    ca = scene.cell_of(*a)
    cb = scene.cell_of(*b)
    if not (scene.in_bounds(ca) and scene.in_bounds(cb)):
        raise ValueError("geodesic endpoints must be inside scene bounds")
    if not (scene.is_free(ca) and scene.is_free(cb)):
        return UNREACHABLE
    if ca == cb:
        return 0.0
    dist, _ = distance_field(scene, ca)
    return float(dist[cb[1], cb[0]])


# -- kinematics and planning ---------------------------------------------------

def _forward_cell(scene: Scene, cell: tuple[int, int], head_idx: int,
                  motion: MotionModel) -> tuple[int, int] | None:
    """Destination cell of one forward step, or None when blocked/degenerate."""
    off = motion.offsets[head_idx]
    if off == (0, 0):
        return None
    dst = (cell[0] + off[0], cell[1] + off[1])
    if not scene.in_bounds(dst):
        return None
    for dx, dy in motion.crossed[head_idx]:
        if not scene.is_free((cell[0] + dx, cell[1] + dy)):
            return None
    return dst


def apply_action(scene: Scene, pose: Pose, action: AtomicAction,
                 motion: MotionModel) -> Pose:
    """One atomic action. Blocked forward moves are no-ops (bump semantics).

    Forward motion is grid-quantized: the pose lands on the destination cell's
    center, which keeps (cell, heading) a faithful planning state.
    """
    head_idx = motion.heading_index(pose.heading)
    if action == AtomicAction.TURN_LEFT:
        return Pose(pose.x, pose.y, motion.heading_of(head_idx + 1))
    if action == AtomicAction.TURN_RIGHT:
        return Pose(pose.x, pose.y, motion.heading_of(head_idx - 1))
    dst = _forward_cell(scene, pose.cell(scene.resolution), head_idx, motion)
    if dst is None:
        return pose
    cx, cy = scene.center_of(dst)
    return Pose(cx, cy, pose.heading)


def plan_actions(scene: Scene, start: Pose, goal: tuple[float, float],
                 motion: MotionModel) -> list[AtomicAction] | None:
    """Minimal action sequence ending on the goal's cell, or None if unreachable.

    Ties at equal length prefer MoveForward over TurnLeft over TurnRight.
    """
    start_cell = start.cell(scene.resolution)
    goal_cell = scene.cell_of(*goal)
    if not scene.in_bounds(goal_cell) or not scene.is_free(goal_cell):
        return None
    if not scene.is_free(start_cell):
        raise ValueError(f"start pose {start} is not on a free cell")
    tables = _motion_tables(motion)
    raw = _kernels.plan_route(scene.occupancy, tables[0], tables[1], tables[2],
                              start_cell[0], start_cell[1],
                              motion.heading_index(start.heading),
                              goal_cell[0], goal_cell[1])
    if raw is None:
        return None
    return [AtomicAction(int(a)) for a in raw]


_TABLE_CACHE: dict[MotionModel, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _motion_tables(motion: MotionModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    key = motion
    cached = _TABLE_CACHE.get(key)
    if cached is None:
        offsets = np.array(motion.offsets, dtype=np.int32)
        starts = np.zeros(motion.n_headings + 1, dtype=np.int32)
        cells = []
        for h, crossed in enumerate(motion.crossed):
            cells.extend(crossed)
            starts[h + 1] = len(cells)
        cells_arr = (np.array(cells, dtype=np.int32) if cells
                     else np.zeros((0, 2), dtype=np.int32))
        cached = (offsets, starts, cells_arr)
        _TABLE_CACHE[key] = cached
    return cached


def replay_actions(scene: Scene, start: Pose, actions, motion: MotionModel) -> Pose:
    pose = start
    for action in actions:
        pose = apply_action(scene, pose, action, motion)
    return pose


def sample_trajectory(scene: Scene, rng, motion: MotionModel, max_attempts: int = 2000,
                      min_steps: int = 10, max_steps: int = 100) -> TrajectorySpec:
    """Rejection-sample a start/target pair whose minimal plan has an in-range step count."""
    free = scene.free_cells()
    if len(free) < 2:
        raise TrajectorySamplingError("scene needs at least two free cells")
    for _ in range(max_attempts):
        start_cell = free[rng.randrange(len(free))]
        target_cell = free[rng.randrange(len(free))]
        if start_cell == target_cell:
            continue
        heading = motion.heading_of(rng.randrange(motion.n_headings))
        start = scene.center_pose(start_cell, heading)
        target = scene.center_of(target_cell)
        actions = plan_actions(scene, start, target, motion)
        if actions is None:
            continue
        if not (min_steps <= len(actions) <= max_steps):
            continue
        return TrajectorySpec(
            start=start,
            target=target,
            actions=tuple(actions),
            step_count=len(actions),
            geodesic_length=geodesic_distance(scene, start.position(), target),
        )
    raise TrajectorySamplingError(
        f"no trajectory with step count in [{min_steps}, {max_steps}] "
        f"after {max_attempts} attempts")
