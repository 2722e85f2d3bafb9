# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: bit-identical twins of the pure-Python versions in pure.py.

Any change here must be mirrored in pure.py, preserving operation order so the
two backends keep producing identical floats.
"""

from libc.math cimport floor, INFINITY
from libc.stdlib cimport malloc, free

import math

import numpy as np

BACKEND_NAME = "compiled"

cdef double _SQRT2 = math.sqrt(2.0)

cdef int[8] _NBR_X = [-1, 0, 1, -1, 1, -1, 0, 1]
cdef int[8] _NBR_Y = [-1, -1, -1, 0, 0, 1, 1, 1]


def raycast_mask(const unsigned char[:, ::1] occ, double px, double py,
                 const double[::1] dirs_x, const double[::1] dirs_y,
                 double range_cells, unsigned char[:, ::1] out):
    cdef Py_ssize_t h = occ.shape[0]
    cdef Py_ssize_t w = occ.shape[1]
    cdef Py_ssize_t ix = <Py_ssize_t>floor(px)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(py)
    cdef Py_ssize_t n = dirs_x.shape[0]
    cdef Py_ssize_t r, cx, cy
    cdef int step_x, step_y
    cdef double dx, dy, tmax_x, tmax_y, tdelta_x, tdelta_y, t
    out[iy, ix] = 1
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
            tmax_x = INFINITY
            tdelta_x = INFINITY
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
            tmax_y = INFINITY
            tdelta_y = INFINITY
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


cdef inline bint _heap_less(double d1, long i1, double d2, long i2) nogil:
    return d1 < d2 or (d1 == d2 and i1 < i2)


def distance_field(const unsigned char[:, ::1] occ, Py_ssize_t src_x, Py_ssize_t src_y,
                   double[:, ::1] out_dist, int[:, ::1] out_parent):
    cdef Py_ssize_t h = occ.shape[0]
    cdef Py_ssize_t w = occ.shape[1]
    cdef Py_ssize_t n_cells = w * h
    cdef Py_ssize_t i, ux, uy, vx, vy
    cdef long u, v, src
    cdef int k
    cdef double d, nd, cost
    for i in range(n_cells):
        (<double*>&out_dist[0, 0])[i] = INFINITY
        (<int*>&out_parent[0, 0])[i] = -1
    if occ[src_y, src_x]:
        return
    cdef double* dist = <double*>&out_dist[0, 0]
    cdef int* parent = <int*>&out_parent[0, 0]
    # binary min-heap over unique (dist, cell) keys; capacity 8 pushes per cell
    cdef Py_ssize_t cap = 8 * n_cells + 8
    cdef double* hd = <double*>malloc(cap * sizeof(double))
    cdef long* hi = <long*>malloc(cap * sizeof(long))
    if hd == NULL or hi == NULL:
        if hd != NULL:
            free(hd)
        if hi != NULL:
            free(hi)
        raise MemoryError()
    cdef Py_ssize_t size = 0
    cdef Py_ssize_t pos, child, parent_pos
    cdef double td
    cdef long ti
    try:
        src = src_y * w + src_x
        dist[src] = 0.0
        hd[0] = 0.0
        hi[0] = src
        size = 1
        while size > 0:
            d = hd[0]
            u = hi[0]
            size -= 1
            hd[0] = hd[size]
            hi[0] = hi[size]
            pos = 0
            while True:
                child = 2 * pos + 1
                if child >= size:
                    break
                if child + 1 < size and _heap_less(hd[child + 1], hi[child + 1], hd[child], hi[child]):
                    child += 1
                if _heap_less(hd[child], hi[child], hd[pos], hi[pos]):
                    td = hd[pos]; ti = hi[pos]
                    hd[pos] = hd[child]; hi[pos] = hi[child]
                    hd[child] = td; hi[child] = ti
                    pos = child
                else:
                    break
            if d > dist[u]:
                continue
            ux = u % w
            uy = u // w
            for k in range(8):
                vx = ux + _NBR_X[k]
                vy = uy + _NBR_Y[k]
                if vx < 0 or vx >= w or vy < 0 or vy >= h:
                    continue
                if occ[vy, vx]:
                    continue
                if _NBR_X[k] != 0 and _NBR_Y[k] != 0:
                    cost = _SQRT2
                else:
                    cost = 1.0
                v = vy * w + vx
                nd = d + cost
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = <int>u
                    hd[size] = nd
                    hi[size] = v
                    pos = size
                    size += 1
                    while pos > 0:
                        parent_pos = (pos - 1) // 2
                        if _heap_less(hd[pos], hi[pos], hd[parent_pos], hi[parent_pos]):
                            td = hd[pos]; ti = hi[pos]
                            hd[pos] = hd[parent_pos]; hi[pos] = hi[parent_pos]
                            hd[parent_pos] = td; hi[parent_pos] = ti
                            pos = parent_pos
                        else:
                            break
    finally:
        free(hd)
        free(hi)


def plan_route(const unsigned char[:, ::1] occ, const int[:, ::1] offsets,
               const int[::1] crossed_starts, const int[:, ::1] crossed_cells,
               Py_ssize_t start_x, Py_ssize_t start_y, Py_ssize_t start_h,
               Py_ssize_t goal_x, Py_ssize_t goal_y):
    cdef Py_ssize_t h = occ.shape[0]
    cdef Py_ssize_t w = occ.shape[1]
    cdef Py_ssize_t n_head = offsets.shape[0]
    if start_x == goal_x and start_y == goal_y:
        return np.empty(0, dtype=np.int8)
    cdef Py_ssize_t n_states = w * h * n_head
    visited_arr = np.zeros(n_states, dtype=np.uint8)
    parent_arr = np.full(n_states, -1, dtype=np.int64)
    action_arr = np.zeros(n_states, dtype=np.int8)
    queue_arr = np.zeros(n_states, dtype=np.int64)
    cdef unsigned char[::1] visited = visited_arr
    cdef long long[::1] parent = parent_arr
    cdef signed char[::1] parent_action = action_arr
    cdef long long[::1] queue = queue_arr
    cdef long long start = (start_y * w + start_x) * n_head + start_h
    cdef long long s, ns, goal_state = -1
    cdef Py_ssize_t q_head = 0, q_tail = 0
    cdef Py_ssize_t cell, head, sx, sy, nx, ny, cx, cy
    cdef int action, c
    cdef bint blocked
    visited[start] = 1
    queue[q_tail] = start
    q_tail += 1
    while q_head < q_tail:
        s = queue[q_head]
        q_head += 1
        cell = s // n_head
        head = s - cell * n_head
        sx = cell % w
        sy = cell // w
        for action in range(3):
            if action == 0:
                if offsets[head, 0] == 0 and offsets[head, 1] == 0:
                    continue
                nx = sx + offsets[head, 0]
                ny = sy + offsets[head, 1]
                if nx < 0 or nx >= w or ny < 0 or ny >= h:
                    continue
                blocked = False
                for c in range(crossed_starts[head], crossed_starts[head + 1]):
                    cx = sx + crossed_cells[c, 0]
                    cy = sy + crossed_cells[c, 1]
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
                break
            queue[q_tail] = ns
            q_tail += 1
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
