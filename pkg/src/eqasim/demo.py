"""Procedural multi-room demo scenes and question suites.

The generator builds apartment-like grids (rooms joined by doors, each room
carrying a ground-truth region label) plus questions whose target sits in a
named room, so scripted-oracle runs exercise every strategy meaningfully.
"""

from __future__ import annotations

import random

import numpy as np

from .dataio import QAItem
from .geometry import MotionModel
from .oracle import Rulebook
from .scene import FREE, OCCUPIED, Scene, geodesic_distance, plan_actions

ROOM_TYPES = ("kitchen", "bathroom", "bedroom", "living room", "dining room",
              "office", "laundry room", "closet", "hallway")

# one landmark object per room type, used to phrase questions and answers
ROOM_OBJECTS = {
    "kitchen": "kettle",
    "bathroom": "mirror",
    "bedroom": "lamp",
    "living room": "sofa",
    "dining room": "vase",
    "office": "printer",
    "laundry room": "basket",
    "closet": "coat",
    "hallway": "clock",
}

_TEMPLATES = (
    ("existence", "Is there a {obj} in the {room}?",
     "yes there is a {obj} in the {room}"),
    ("location", "Where did I leave the {obj} in the {room}?",
     "the {obj} is in the middle of the {room}"),
    ("attribute", "What color is the {obj} in the {room}?",
     "the {obj} is blue"),
    ("object", "What is the small object next to the {obj} in the {room}?",
     "it is a book"),
    ("counting", "How many windows are there in the {room} near the {obj}?",
     "there are two windows"),
    ("state", "Did I leave the light on in the {room} by the {obj}?",
     "no the light is off"),
    ("knowledge", "What could I use the {obj} in the {room} for?",
     "you could use the {obj} for its usual purpose"),
)


def generate_scene(seed: int, name: str | None = None, rooms: int = 3,
                   room_size: int = 11, resolution: float = 0.25) -> Scene:
    """An apartment of rooms x rooms labeled rooms connected by 2-cell doors.

    Doors realize a random spanning tree over the room grid plus a few extras,
    so every room is reachable and layouts differ per seed.
    """
    rng = random.Random(seed)
    stride = room_size + 1
    side = rooms * stride + 1
    occ = np.full((side, side), OCCUPIED, dtype=np.uint8)
    region_grid = np.full((side, side), -1, dtype=np.int16)

    types = list(ROOM_TYPES)
    rng.shuffle(types)
    room_types: dict[tuple[int, int], str] = {}
    used_types: list[str] = []
    for ry in range(rooms):
        for rx in range(rooms):
            rtype = types[(ry * rooms + rx) % len(types)]
            room_types[(rx, ry)] = rtype
            if rtype not in used_types:
                used_types.append(rtype)
            x0 = rx * stride + 1
            y0 = ry * stride + 1
            occ[y0:y0 + room_size, x0:x0 + room_size] = FREE
            region_grid[y0:y0 + room_size, x0:x0 + room_size] = used_types.index(rtype)

    # spanning tree over rooms, then extra doors
    edges = []
    for ry in range(rooms):
        for rx in range(rooms):
            if rx + 1 < rooms:
                edges.append(((rx, ry), (rx + 1, ry)))
            if ry + 1 < rooms:
                edges.append(((rx, ry), (rx, ry + 1)))
    rng.shuffle(edges)
    parent = {room: room for room in room_types}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    doors = []
    extras = []
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            doors.append((a, b))
        else:
            extras.append((a, b))
    for e in extras:
        if rng.random() < 0.25:
            doors.append(e)

    for (ax, ay), (bx, by) in doors:
        if ax != bx:  # vertical shared wall
            wall_x = max(ax, bx) * stride
            y0 = ay * stride + 1
            row = y0 + rng.randrange(room_size - 1)
            occ[row:row + 2, wall_x] = FREE
        else:  # horizontal shared wall
            wall_y = max(ay, by) * stride
            x0 = ax * stride + 1
            col = x0 + rng.randrange(room_size - 1)
            occ[wall_y, col:col + 2] = FREE

    return Scene(name or f"demo-{seed:04d}", resolution, occ,
                 tuple(used_types), region_grid)


def _room_cells(scene: Scene, rtype: str) -> list[tuple[int, int]]:
    idx = scene.region_types.index(rtype)
    ys, xs = np.nonzero(scene.region_grid == idx)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


def generate_qa(scene: Scene, seed: int, count: int, motion: MotionModel,
                min_steps: int = 10, max_steps: int = 100) -> list[QAItem]:
    """Questions about a landmark in a target room, started from another room."""
    rng = random.Random(seed)
    labeled = [t for t in scene.region_types if t != "hallway"] or list(scene.region_types)
    items = []
    attempts = 0
    while len(items) < count and attempts < 200 * count:
        attempts += 1
        room = labeled[rng.randrange(len(labeled))]
        room_cells = _room_cells(scene, room)
        target_cell = room_cells[rng.randrange(len(room_cells))]
        other = [c for c in scene.free_cells()
                 if scene.region_type_at(c) not in (room, None)]
        if not other:
            continue
        start_cell = other[rng.randrange(len(other))]
        heading = motion.heading_of(rng.randrange(motion.n_headings))
        start = scene.center_pose(start_cell, heading)
        target = scene.center_of(target_cell)
        actions = plan_actions(scene, start, target, motion)
        if actions is None or not (min_steps <= len(actions) <= max_steps):
            continue
        qtype, q_tpl, a_tpl = _TEMPLATES[len(items) % len(_TEMPLATES)]
        obj = ROOM_OBJECTS.get(room, "object")
        items.append(QAItem(
            id=f"{scene.name}-q{len(items):03d}",
            question=q_tpl.format(obj=obj, room=room),
            gold_answer=a_tpl.format(obj=obj, room=room),
            question_type=qtype,
            scene=scene.name,
            start=start,
            target=target,
            gt_step_count=len(actions),
            gt_geodesic_m=geodesic_distance(scene, start.position(), target),
        ))
    if len(items) < count:
        raise RuntimeError(f"could only generate {len(items)}/{count} questions "
                           f"for scene {scene.name}")
    return items


def demo_rulebook() -> Rulebook:
    """Each room-type keyword makes exactly that region relevant."""
    return Rulebook.from_mapping({rtype: [rtype] for rtype in ROOM_TYPES})


def build_suite(n_scenes: int = 20, seed: int = 123, qa_per_scene: int = 1,
                resolution: float = 0.25
                ) -> tuple[dict[str, Scene], list[QAItem], Rulebook]:
    """The fixed evaluation suite: n scenes, each with its own questions."""
    motion = MotionModel.build(0.25, 30.0, resolution)
    scenes: dict[str, Scene] = {}
    items: list[QAItem] = []
    for i in range(n_scenes):
        scene = generate_scene(seed * 1000 + i, name=f"demo-{seed}-{i:03d}",
                               resolution=resolution)
        scenes[scene.name] = scene
        items.extend(generate_qa(scene, seed * 1000 + i + 7, qa_per_scene, motion))
    return scenes, items, demo_rulebook()
