"""Pure-Python kernels: grid raycasting, Dijkstra distance fields, action planning.

This module and the compiled twin (_core.pyx) implement the same algorithms with
the same operation order, so their outputs are bit-identical. Keep every loop,
comparison, and float expression in sync between the two.
"""

from __future__ import annotations

import heapq
import math
from collections import deque

import numpy as np

BACKEND_NAME = "pure"

_SQRT2 = math.sqrt(2.0)

# 8-connected neighbor order; fixed because it sets the Dijkstra relax order.
_NEIGHBORS = (
    (-1, -1, _SQRT2), (0, -1, 1.0), (1, -1, _SQRT2),
    (-1, 0, 1.0), (1, 0, 1.0),
    (-1, 1, _SQRT2), (0, 1, 1.0), (1, 1, _SQRT2),
)


def raycast_mask(occ, px, py, dirs_x, dirs_y, range_cells, out):
    """Mark cells visible from (px, py) (cell units) along the given ray directions.

    Each ray is walked with exact grid traversal; the first occupied cell on a
    ray is marked (walls are seen) and terminates it. Boundary-crossing ties
    step x before y.
    """
    h, w = occ.shape
    ix = int(math.floor(px))
    iy = int(math.floor(py))
    out[iy, ix] = 1
    n = len(dirs_x)
    inf = math.inf
    for r in range(n):
        dx = dirs_x[r]
        dy = dirs_y[r]
        cx = ix
        cy = iy
        if dx > 0.0:
            step_x = 1
            tmax_x = (cx + 1 - px) / dx
            tdelta_x = 1.0 / dx
        elif dx < 0.0:
            step_x = -1
            tmax_x = (cx - px) / dx
            tdelta_x = -1.0 / dx
        else:
            step_x = 0
            tmax_x = inf
            tdelta_x = inf
        if dy > 0.0:
            step_y = 1
            tmax_y = (cy + 1 - py) / dy
            tdelta_y = 1.0 / dy
        elif dy < 0.0:
            step_y = -1
            tmax_y = (cy - py) / dy
            tdelta_y = -1.0 / dy
        else:
            step_y = 0
            tmax_y = inf
            tdelta_y = inf
        while True:
            if tmax_x <= tmax_y:
                t = tmax_x
                cx += step_x
                tmax_x += tdelta_x
            else:
                t = tmax_y
                cy += step_y
                tmax_y += tdelta_y
            if t > range_cells:
                break
            if cx < 0 or cx >= w or cy < 0 or cy >= h:
                break
            out[cy, cx] = 1
            if occ[cy, cx]:
                break


def distance_field(occ, src_x, src_y, out_dist, out_parent):
    """8-connected Dijkstra over free cells from (src_x, src_y), in cell units.

    out_dist gets inf for unreachable cells; out_parent the flat index of each
    cell's predecessor (-1 for the source and unreachable cells). Heap keys
    (dist, flat index) are unique, so the pop order is implementation-free.
    """
    h, w = occ.shape
    out_dist.fill(math.inf)
    out_parent.fill(-1)
    if occ[src_y, src_x]:
        return
    dist = out_dist.ravel()
    parent = out_parent.ravel()
    src = src_y * w + src_x
    dist[src] = 0.0
    heap = [(0.0, src)]
    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        d, u = pop(heap)
        if d > dist[u]:
            continue
        ux = u % w
        uy = u // w
        for ox, oy, cost in _NEIGHBORS:
            vx = ux + ox
            vy = uy + oy
            if vx < 0 or vx >= w or vy < 0 or vy >= h:
                continue
            if occ[vy, vx]:
                continue
            v = vy * w + vx
            nd = d + cost
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                push(heap, (nd, v))


def plan_route(occ, offsets, crossed_starts, crossed_cells,
               start_x, start_y, start_h, goal_x, goal_y):
    """Minimal action sequence over the (cell, heading) graph, or None.

    Actions: 0=forward, 1=turn left, 2=turn right; expansion in that order makes
    BFS return the lexicographically smallest among minimal sequences. A state
    is goal as soon as its cell matches, any heading.
    """
    h, w = occ.shape
    n_head = len(offsets)
    if start_x == goal_x and start_y == goal_y:
        return np.empty(0, dtype=np.int8)
    n_states = w * h * n_head
    visited = bytearray(n_states)
    parent = np.full(n_states, -1, dtype=np.int64)
    parent_action = np.zeros(n_states, dtype=np.int8)
    start = (start_y * w + start_x) * n_head + start_h
    visited[start] = 1
    queue = deque((start,))
    goal_state = -1
    while queue:
        s = queue.popleft()
        cell = s // n_head
        head = s - cell * n_head
        sx = cell % w
        sy = cell // w
        for action in range(3):
            if action == 0:
                ox = offsets[head][0]
                oy = offsets[head][1]
                if ox == 0 and oy == 0:
                    continue
                nx = sx + ox
                ny = sy + oy
                if nx < 0 or nx >= w or ny < 0 or ny >= h:
                    continue
                blocked = False
                for c in range(crossed_starts[head], crossed_starts[head + 1]):
                    cx = sx + crossed_cells[c][0]
                    cy = sy + crossed_cells[c][1]
                    if cx < 0 or cx >= w or cy < 0 or cy >= h or occ[cy, cx]:
                        blocked = True
                        break
                if blocked:
                    continue
                ns = (ny * w + nx) * n_head + head
            elif action == 1:
                nx = sx
                ny = sy
                ns = cell * n_head + ((head + 1) % n_head)
            else:
                nx = sx
                ny = sy
                ns = cell * n_head + ((head - 1 + n_head) % n_head)
            if visited[ns]:
                continue
            visited[ns] = 1
            parent[ns] = s
            parent_action[ns] = action
            if nx == goal_x and ny == goal_y:
                goal_state = ns
                queue.clear()
                break
            queue.append(ns)
        if goal_state >= 0:
            break
    if goal_state < 0:
        return None
    actions = []
    s = goal_state
    while s != start:
        actions.append(parent_action[s])
        s = parent[s]
    actions.reverse()
    return np.array(actions, dtype=np.int8)
