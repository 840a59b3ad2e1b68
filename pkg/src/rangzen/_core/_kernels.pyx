# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay output-identical to ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _splitmix_next(uint64_t *state) nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef struct Xoshiro:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline void _seed(Xoshiro *g, uint64_t seed) nogil:
    cdef uint64_t sm = seed
    g.s0 = _splitmix_next(&sm)
    g.s1 = _splitmix_next(&sm)
    g.s2 = _splitmix_next(&sm)
    g.s3 = _splitmix_next(&sm)


cdef inline double _uniform(Xoshiro *g) nogil:
    # xoshiro256**, top 53 bits -> [0, 1)
    cdef uint64_t result = _rotl(g.s1 * 5, 7) * 9
    cdef uint64_t t = g.s1 << 17
    g.s2 ^= g.s0
    g.s3 ^= g.s1
    g.s1 ^= g.s2
    g.s0 ^= g.s3
    g.s2 ^= t
    g.s3 = _rotl(g.s3, 45)
    return <double>(result >> 11) * (1.0 / 9007199254740992.0)


def uniform_stream(uint64_t seed, Py_ssize_t n):
    cdef Xoshiro g
    _seed(&g, seed)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = _uniform(&g)
    return out


def gillespie_lux(int64_t n_e, int64_t l0, int64_t u0, double alpha, double beta,
                  double gamma, double horizon, uint64_t seed, double[::1] record_times):
    """Next-event simulation of the learned/unlearned/absent edge bins."""
    cdef Xoshiro g
    _seed(&g, seed)
    cdef Py_ssize_t n_rec = record_times.shape[0]
    out = np.empty((n_rec, 3), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef int64_t L = l0, U = u0, X = n_e - l0 - u0
    cdef double t = 0.0, a_create, a_del_u, a_del_l, a_learn, a0, dt, r
    cdef Py_ssize_t k = 0
    cdef int64_t events = 0
    with nogil:
        while True:
            a_create = alpha * X
            a_del_u = beta * U
            a_del_l = beta * L
            a_learn = gamma * U
            a0 = a_create + a_del_u + a_del_l + a_learn
            if a0 <= 0.0:
                dt = INFINITY
            else:
                dt = -log(1.0 - _uniform(&g)) / a0
            while k < n_rec and record_times[k] < t + dt and record_times[k] <= horizon:
                o[k, 0] = L
                o[k, 1] = U
                o[k, 2] = X
                k += 1
            if t + dt > horizon or k >= n_rec:
                break
            t += dt
            r = _uniform(&g) * a0
            if r < a_create:
                X -= 1
                U += 1
            elif r < a_create + a_del_u:
                U -= 1
                X += 1
            elif r < a_create + a_del_u + a_del_l:
                L -= 1
                X += 1
            else:
                U -= 1
                L += 1
            events += 1
        while k < n_rec:
            o[k, 0] = L
            o[k, 1] = U
            o[k, 2] = X
            k += 1
    return out, events


def range_pairs(double[::1] x, double[::1] y, double radius):
    """All pairs (i, j), i < j, with Euclidean distance <= radius, lexicographically sorted."""
    cdef Py_ssize_t n = x.shape[0]
    if n < 2 or radius <= 0.0:
        return np.empty((0, 2), dtype=np.int64)
    cdef double xmin = x[0], ymin = y[0]
    cdef Py_ssize_t i, j, a, b
    for i in range(n):
        if x[i] < xmin:
            xmin = x[i]
        if y[i] < ymin:
            ymin = y[i]
    cx_np = np.empty(n, dtype=np.int64)
    cy_np = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] cx = cx_np
    cdef int64_t[::1] cy = cy_np
    for i in range(n):
        cx[i] = <int64_t>((x[i] - xmin) / radius)
        cy[i] = <int64_t>((y[i] - ymin) / radius)
    # sort nodes by cell so each cell is a contiguous run
    cdef int64_t ncx = 0
    for i in range(n):
        if cx[i] + 1 > ncx:
            ncx = cx[i] + 1
    keys_np = cy_np * (ncx + 2) + cx_np
    order_np = np.argsort(keys_np, kind="stable")
    cdef int64_t[::1] keys = keys_np
    cdef int64_t[::1] order = order_np.astype(np.int64)
    sorted_keys_np = keys_np[order_np]
    cdef int64_t[::1] skeys = sorted_keys_np
    cdef double r2 = radius * radius, dx, dy
    cdef int64_t ck, nk
    cdef int ox, oy
    cdef Py_ssize_t lo, hi, mid, p, q
    pairs = []
    for p in range(n):
        i = order[p]
        for oy in range(-1, 2):
            for ox in range(-1, 2):
                if cx[i] + ox < 0 or cy[i] + oy < 0:
                    continue
                nk = (cy[i] + oy) * (ncx + 2) + (cx[i] + ox)
                lo = 0
                hi = n
                while lo < hi:
                    mid = (lo + hi) // 2
                    if skeys[mid] < nk:
                        lo = mid + 1
                    else:
                        hi = mid
                q = lo
                while q < n and skeys[q] == nk:
                    j = order[q]
                    if j > i:
                        dx = x[i] - x[j]
                        dy = y[i] - y[j]
                        if dx * dx + dy * dy <= r2:
                            pairs.append((i, j))
                    q += 1
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    arr = np.array(pairs, dtype=np.int64)
    idx = np.lexsort((arr[:, 1], arr[:, 0]))
    return arr[idx]


def temporal_hops(Py_ssize_t n, Py_ssize_t source, double t0, double[::1] ct,
                  int64_t[::1] cu, int64_t[::1] cv, int max_hops):
    """Minimum hop count over time-respecting contact paths; -1 where unreachable."""
    hops_np = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] hops = hops_np
    prev_np = np.full(n, INFINITY, dtype=np.float64)
    cdef double[::1] prev = prev_np
    cdef double[::1] cur
    cdef Py_ssize_t m = ct.shape[0], c, k, v
    cdef int64_t a, b
    cdef double t
    cdef bint changed
    prev[source] = t0
    hops[source] = 0
    for k in range(1, max_hops + 1):
        cur_np = prev_np.copy()
        cur = cur_np
        changed = False
        for c in range(m):
            t = ct[c]
            a = cu[c]
            b = cv[c]
            if prev[a] <= t and t < cur[b]:
                cur[b] = t
            if prev[b] <= t and t < cur[a]:
                cur[a] = t
        for v in range(n):
            if cur[v] < prev[v]:
                changed = True
                if hops[v] < 0:
                    hops[v] = k
        if not changed:
            break
        prev_np = cur_np
        prev = prev_np
    return hops_np


def cover_mask(double[::1] ax, double[::1] ay, double[::1] bx, double[::1] by,
               double jx, double jy, double radius):
    """Events with either endpoint strictly inside the jammer disc."""
    cdef Py_ssize_t m = ax.shape[0], i
    out = np.zeros(m, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef double r2 = radius * radius, dx, dy
    for i in range(m):
        dx = ax[i] - jx
        dy = ay[i] - jy
        if dx * dx + dy * dy < r2:
            o[i] = 1
            continue
        dx = bx[i] - jx
        dy = by[i] - jy
        if dx * dx + dy * dy < r2:
            o[i] = 1
    return out
