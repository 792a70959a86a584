# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Dijkstra fill and the sequential agent update.

Mirrors ``_pykernels`` operation for operation; the two are checked for
bit-identical output in the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef enum:
    WALL = 0
    DESTINATION = 3
    MEASUREMENT = 4


cdef struct Entry:
    double key
    Py_ssize_t idx


cdef struct Heap:
    Entry* data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline bint _less(Entry a, Entry b) nogil:
    return a.key < b.key or (a.key == b.key and a.idx < b.idx)


cdef int _push(Heap* h, double key, Py_ssize_t idx) nogil:
    cdef Py_ssize_t pos, parent
    cdef Entry item
    cdef Entry* grown
    if h.size == h.cap:
        grown = <Entry*> realloc(h.data, 2 * h.cap * sizeof(Entry))
        if grown == NULL:
            return -1
        h.data = grown
        h.cap *= 2
    item.key = key
    item.idx = idx
    pos = h.size
    h.size += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if not _less(item, h.data[parent]):
            break
        h.data[pos] = h.data[parent]
        pos = parent
    h.data[pos] = item
    return 0


cdef Entry _pop(Heap* h) nogil:
    cdef Entry top = h.data[0]
    cdef Entry last
    cdef Py_ssize_t pos = 0, child, n
    h.size -= 1
    n = h.size
    if n > 0:
        last = h.data[n]
        while True:
            child = 2 * pos + 1
            if child >= n:
                break
            if child + 1 < n and _less(h.data[child + 1], h.data[child]):
                child += 1
            if not _less(h.data[child], last):
                break
            h.data[pos] = h.data[child]
            pos = child
        h.data[pos] = last
    return top


def fill(const unsigned char[::1] walkable, const unsigned char[::1] occupied,
         const Py_ssize_t[::1] sources, Py_ssize_t width, bint moore, double s_add):
    """Minimal entering-cost field from ``sources`` (Dijkstra, lazy deletion)."""
    cdef Py_ssize_t n = walkable.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] dist = out
    cdef Py_ssize_t deltas[8]
    cdef int ndeltas = 8 if moore else 4
    cdef Py_ssize_t i, j, k
    cdef double nd
    cdef Entry e
    cdef Heap h
    cdef int err = 0

    deltas[0] = -width
    deltas[1] = -1
    deltas[2] = 1
    deltas[3] = width
    deltas[4] = -width - 1
    deltas[5] = -width + 1
    deltas[6] = width - 1
    deltas[7] = width + 1

    h.cap = max(16, 2 * sources.shape[0])
    h.size = 0
    h.data = <Entry*> malloc(h.cap * sizeof(Entry))
    if h.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                dist[i] = INFINITY
            for k in range(sources.shape[0]):
                dist[sources[k]] = 0.0
            # Sources enter in (0, index) order, matching heapify on tuples.
            for k in range(sources.shape[0]):
                if _push(&h, 0.0, sources[k]) != 0:
                    err = 1
                    break
            while h.size > 0 and err == 0:
                e = _pop(&h)
                i = e.idx
                if e.key > dist[i]:
                    continue
                for k in range(ndeltas):
                    j = i + deltas[k]
                    if walkable[j]:
                        nd = e.key + (s_add if occupied[j] else 1.0)
                        if nd < dist[j]:
                            dist[j] = nd
                            if _push(&h, nd, j) != 0:
                                err = 1
                                break
    finally:
        free(h.data)
    if err:
        raise MemoryError()
    return out


def step_agents(const unsigned char[::1] kinds, Py_ssize_t[::1] occ,
                const double[::1] static, dyn, double k_s, double k_dyn,
                Py_ssize_t[::1] pos, const int[::1] vmax,
                const Py_ssize_t[::1] order, const double[::1] u,
                const Py_ssize_t[::1] cand_delta, const int[::1] cand_radius,
                const Py_ssize_t[::1] touch_start, const Py_ssize_t[::1] touch_delta):
    """Advance the agents listed in ``order`` one after another.

    ``occ`` holds the occupying agent's slot or -1 and is updated in place,
    as is ``pos``.  Returns per-update arrays ``(new_pos, arrived, measured)``
    where ``new_pos`` is -1 for agents that reached a destination.
    """
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t ncand = cand_delta.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1] new_pos_arr = np.empty(n, dtype=np.intp)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] arrived_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] measured_arr = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t[::1] new_pos = new_pos_arr
    cdef unsigned char[::1] arrived = arrived_arr
    cdef unsigned char[::1] measured = measured_arr
    cdef const double[::1] dynv
    cdef bint use_dyn = dyn is not None
    cdef Py_ssize_t* cells = <Py_ssize_t*> malloc(ncand * sizeof(Py_ssize_t))
    cdef double* energy = <double*> malloc(ncand * sizeof(double))
    cdef double* weights = <double*> malloc(ncand * sizeof(double))
    cdef Py_ssize_t m, a, p, c, k, t, i, count, chosen
    cdef int v
    cdef bint visible
    cdef double e, emin, total, acc, um

    if cells == NULL or energy == NULL or weights == NULL:
        free(cells)
        free(energy)
        free(weights)
        raise MemoryError()
    if use_dyn:
        dynv = dyn
    try:
        for m in range(n):
            a = order[m]
            p = pos[a]
            v = vmax[a]
            count = 0
            for k in range(ncand):
                if cand_radius[k] > v:
                    continue
                c = p + cand_delta[k]
                if cand_delta[k] != 0:
                    # the touch list ends on c and leaves the grid only through
                    # the wall frame, so walking it first keeps every read in range
                    visible = True
                    for t in range(touch_start[k], touch_start[k + 1]):
                        if kinds[p + touch_delta[t]] == WALL:
                            visible = False
                            break
                    if not visible or occ[c] >= 0:
                        continue
                e = k_s * static[c]
                if use_dyn:
                    e = e + k_dyn * dynv[c]
                cells[count] = k
                energy[count] = e
                count += 1

            emin = energy[0]
            for i in range(1, count):
                if energy[i] < emin:
                    emin = energy[i]
            total = 0.0
            for i in range(count):
                weights[i] = exp(-(energy[i] - emin))
                total += weights[i]
            chosen = count - 1
            acc = 0.0
            um = u[m]
            for i in range(count):
                acc += weights[i] / total
                if um < acc:
                    chosen = i
                    break
            k = cells[chosen]
            c = p + cand_delta[k]
            if c != p:
                for t in range(touch_start[k], touch_start[k + 1]):
                    if kinds[p + touch_delta[t]] == MEASUREMENT:
                        measured[m] = 1
                        break
                occ[p] = -1
                if kinds[c] == DESTINATION:
                    arrived[m] = 1
                    c = -1
                else:
                    occ[c] = a
                pos[a] = c
            new_pos[m] = c
    finally:
        free(cells)
        free(energy)
        free(weights)
    return new_pos_arr, arrived_arr, measured_arr
