"""Pure-Python/numpy versions of the compiled kernels.

Every function here returns exactly what its counterpart in ``_kernels.pyx``
returns for the same arguments (same RNG stream, same ordering).
"""

import math

import numpy as np
from scipy.spatial import cKDTree

_MASK = (1 << 64) - 1


def _splitmix_next(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, z = _splitmix_next(sm)
            s.append(z)
        self.s = s

    def uniform(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return (result >> 11) * (1.0 / 9007199254740992.0)


def uniform_stream(seed, n):
    g = Xoshiro256(seed)
    return np.array([g.uniform() for _ in range(n)], dtype=np.float64)


def gillespie_lux(n_e, l0, u0, alpha, beta, gamma, horizon, seed, record_times):
    g = Xoshiro256(seed)
    record_times = np.asarray(record_times, dtype=np.float64)
    n_rec = len(record_times)
    out = np.empty((n_rec, 3), dtype=np.int64)
    L, U, X = int(l0), int(u0), int(n_e - l0 - u0)
    t = 0.0
    k = 0
    events = 0
    while True:
        a_create = alpha * X
        a_del_u = beta * U
        a_del_l = beta * L
        a_learn = gamma * U
        a0 = a_create + a_del_u + a_del_l + a_learn
        dt = math.inf if a0 <= 0.0 else -math.log(1.0 - g.uniform()) / a0
        while k < n_rec and record_times[k] < t + dt and record_times[k] <= horizon:
            out[k] = (L, U, X)
            k += 1
        if t + dt > horizon or k >= n_rec:
            break
        t += dt
        r = g.uniform() * a0
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
    out[k:] = (L, U, X)
    return out, events


def range_pairs(x, y, radius):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2 or radius <= 0.0:
        return np.empty((0, 2), dtype=np.int64)
    tree = cKDTree(np.column_stack((x, y)))
    arr = tree.query_pairs(radius * (1.0 + 1e-9), output_type="ndarray").astype(np.int64)
    if len(arr) == 0:
        return np.empty((0, 2), dtype=np.int64)
    # cKDTree's boundary test differs from dx*dx+dy*dy <= r*r in the last ulp
    d2 = (x[arr[:, 0]] - x[arr[:, 1]]) ** 2 + (y[arr[:, 0]] - y[arr[:, 1]]) ** 2
    arr = arr[d2 <= radius * radius]
    idx = np.lexsort((arr[:, 1], arr[:, 0]))
    return arr[idx]


def temporal_hops(n, source, t0, ct, cu, cv, max_hops):
    ct = np.asarray(ct, dtype=np.float64)
    cu = np.asarray(cu, dtype=np.int64)
    cv = np.asarray(cv, dtype=np.int64)
    hops = np.full(n, -1, dtype=np.int64)
    prev = np.full(n, np.inf)
    prev[source] = t0
    hops[source] = 0
    src = np.concatenate((cu, cv))
    dst = np.concatenate((cv, cu))
    tt = np.concatenate((ct, ct))
    for k in range(1, max_hops + 1):
        cur = prev.copy()
        usable = prev[src] <= tt
        np.minimum.at(cur, dst[usable], tt[usable])
        improved = cur < prev
        if not improved.any():
            break
        hops[improved & (hops < 0)] = k
        prev = cur
    return hops


def cover_mask(ax, ay, bx, by, jx, jy, radius):
    r2 = radius * radius
    a_in = (np.asarray(ax) - jx) ** 2 + (np.asarray(ay) - jy) ** 2 < r2
    b_in = (np.asarray(bx) - jx) ** 2 + (np.asarray(by) - jy) ** 2 < r2
    return (a_in | b_in).astype(np.uint8)
