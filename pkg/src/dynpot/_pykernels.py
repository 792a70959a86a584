"""Pure-Python kernels; reference twin of ``_ckernels.pyx``.

Both backends work on wall-padded, flattened grids and must stay
bit-identical: same heap order (value, index), same neighbour order, same
floating-point operation order in the move sampling.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

WALL = 0
DESTINATION = 3
MEASUREMENT = 4

VON_NEUMANN = (0, 1, 2, 3)
MOORE = (0, 1, 2, 3, 4, 5, 6, 7)


def neighbour_deltas(width: int, moore: bool) -> list[int]:
    deltas = [-width, -1, 1, width]
    if moore:
        deltas += [-width - 1, -width + 1, width - 1, width + 1]
    return deltas


def fill(walkable, occupied, sources, width, moore, s_add):
    """Minimal entering-cost field from ``sources`` (Dijkstra, lazy deletion)."""
    walk = walkable.tolist()
    occ = occupied.tolist()
    dist = [math.inf] * len(walk)
    deltas = neighbour_deltas(int(width), bool(moore))
    s_add = float(s_add)
    heap = []
    for s in sources.tolist():
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        d, i = pop(heap)
        if d > dist[i]:
            continue
        for delta in deltas:
            j = i + delta
            if walk[j]:
                nd = d + (s_add if occ[j] else 1.0)
                if nd < dist[j]:
                    dist[j] = nd
                    push(heap, (nd, j))
    return np.array(dist, dtype=np.float64)


def step_agents(kinds, occ, static, dyn, k_s, k_dyn, pos, vmax, order, u,
                cand_delta, cand_radius, touch_start, touch_delta):
    """Advance the agents listed in ``order`` one after another.

    ``occ`` holds the occupying agent's slot or -1 and is updated in place,
    as is ``pos``.  Returns per-update arrays ``(new_pos, arrived, measured)``
    where ``new_pos`` is -1 for agents that reached a destination.
    """
    kinds_l = kinds.tolist()
    static_l = static.tolist()
    dyn_l = dyn.tolist() if dyn is not None else None
    cand_delta = cand_delta.tolist()
    cand_radius = cand_radius.tolist()
    touch_start = touch_start.tolist()
    touch_delta = touch_delta.tolist()
    k_s = float(k_s)
    k_dyn = float(k_dyn)
    n = len(order)
    new_pos = np.empty(n, dtype=np.intp)
    arrived = np.zeros(n, dtype=np.uint8)
    measured = np.zeros(n, dtype=np.uint8)
    exp = math.exp

    for m, a in enumerate(order.tolist()):
        p = int(pos[a])
        v = int(vmax[a])
        cells = []
        energy = []
        for k, delta in enumerate(cand_delta):
            if cand_radius[k] > v:
                continue
            c = p + delta
            if delta != 0:
                # the touch list ends on c and leaves the grid only through
                # the wall frame, so walking it first keeps every read in range
                visible = True
                for t in range(touch_start[k], touch_start[k + 1]):
                    if kinds_l[p + touch_delta[t]] == WALL:
                        visible = False
                        break
                if not visible or occ[c] >= 0:
                    continue
            e = k_s * static_l[c]
            if dyn_l is not None:
                e = e + k_dyn * dyn_l[c]
            cells.append(k)
            energy.append(e)

        emin = min(energy)
        weights = [exp(-(e - emin)) for e in energy]
        total = 0.0
        for w in weights:
            total += w
        chosen = len(cells) - 1
        acc = 0.0
        um = float(u[m])
        for i, w in enumerate(weights):
            acc += w / total
            if um < acc:
                chosen = i
                break
        k = cells[chosen]
        c = p + cand_delta[k]
        if c != p:
            for t in range(touch_start[k], touch_start[k + 1]):
                if kinds_l[p + touch_delta[t]] == MEASUREMENT:
                    measured[m] = 1
                    break
            occ[p] = -1
            if kinds_l[c] == DESTINATION:
                arrived[m] = 1
                c = -1
            else:
                occ[c] = a
            pos[a] = c
        new_pos[m] = c
    return new_pos, arrived, measured
