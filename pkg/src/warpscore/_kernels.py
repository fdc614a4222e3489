"""Compiled dynamic-programming kernels (numba).

All kernels are nopython + nogil so a thread pool can evaluate many pairs
in parallel. Band constraints arrive as per-row [lo, hi] column bounds;
cells outside the bounds are treated as infinite cost.
"""

import numpy as np
from numba import njit

EUCLIDEAN = 0
SQEUCLIDEAN = 1
MANHATTAN = 2

_JIT = {"cache": True, "nogil": True, "fastmath": False}


@njit(**_JIT)
def _cell_cost(a, b, i, j, metric_id):
    s = 0.0
    if metric_id == MANHATTAN:
        for v in range(a.shape[1]):
            s += abs(a[i, v] - b[j, v])
        return s
    for v in range(a.shape[1]):
        d = a[i, v] - b[j, v]
        s += d * d
    if metric_id == EUCLIDEAN:
        return np.sqrt(s)
    return s


@njit(**_JIT)
def local_cost_matrix(a, b, metric_id):
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = _cell_cost(a, b, i, j, metric_id)
    return out


@njit(**_JIT)
def fill_ccm(lcm, lo, hi):
    n, m = lcm.shape
    ccm = np.full((n, m), np.inf)
    for i in range(n):
        for j in range(lo[i], hi[i] + 1):
            if i == 0 and j == 0:
                ccm[0, 0] = lcm[0, 0]
                continue
            best = np.inf
            if i > 0 and j > 0 and ccm[i - 1, j - 1] < best:
                best = ccm[i - 1, j - 1]
            if i > 0 and ccm[i - 1, j] < best:
                best = ccm[i - 1, j]
            if j > 0 and ccm[i, j - 1] < best:
                best = ccm[i, j - 1]
            ccm[i, j] = lcm[i, j] + best
    return ccm


@njit(**_JIT)
def rolling_distance(a, b, lo, hi, metric_id):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m, np.inf)
    cur = np.full(m, np.inf)
    for i in range(n):
        for j in range(m):
            cur[j] = np.inf
        for j in range(lo[i], hi[i] + 1):
            c = _cell_cost(a, b, i, j, metric_id)
            if i == 0 and j == 0:
                cur[0] = c
                continue
            best = np.inf
            if i > 0 and j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
            if i > 0 and prev[j] < best:
                best = prev[j]
            if j > 0 and cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = c + best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m - 1]


@njit(**_JIT)
def _softmin3(x, y, z, gamma):
    lowest = min(x, min(y, z))
    if lowest == np.inf:
        return np.inf
    s = np.exp(-(x - lowest) / gamma) + np.exp(-(y - lowest) / gamma) + np.exp(-(z - lowest) / gamma)
    return lowest - gamma * np.log(s)


@njit(**_JIT)
def softdtw_forward(cost, gamma):
    """Soft-minimum accumulation; returns the (n+1, m+1) table with R[0,0]=0."""
    n, m = cost.shape
    r = np.full((n + 1, m + 1), np.inf)
    r[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            r[i, j] = cost[i - 1, j - 1] + _softmin3(r[i - 1, j - 1], r[i - 1, j], r[i, j - 1], gamma)
    return r


@njit(**_JIT)
def softdtw_backward(cost, r, gamma):
    """Alignment-weight table E; E[i,j] is the soft path mass through cell (i,j)."""
    n, m = cost.shape
    d = np.zeros((n + 2, m + 2))
    d[1 : n + 1, 1 : m + 1] = cost
    rp = np.full((n + 2, m + 2), -np.inf)
    rp[1 : n + 1, 1 : m + 1] = r[1:, 1:]
    rp[n + 1, m + 1] = r[n, m]
    e = np.zeros((n + 2, m + 2))
    e[n + 1, m + 1] = 1.0
    for j in range(m, 0, -1):
        for i in range(n, 0, -1):
            wa = np.exp((rp[i + 1, j] - rp[i, j] - d[i + 1, j]) / gamma)
            wb = np.exp((rp[i, j + 1] - rp[i, j] - d[i, j + 1]) / gamma)
            wc = np.exp((rp[i + 1, j + 1] - rp[i, j] - d[i + 1, j + 1]) / gamma)
            e[i, j] = wa * e[i + 1, j] + wb * e[i, j + 1] + wc * e[i + 1, j + 1]
    return e[1 : n + 1, 1 : m + 1]


@njit(**_JIT)
def sqeuclidean_alignment_gradient(a, b, e):
    """d(softdtw)/d(a) given the alignment weights: sum_j E[i,j] * 2 (a_i - b_j)."""
    n = a.shape[0]
    nv = a.shape[1]
    m = b.shape[0]
    g = np.zeros((n, nv))
    for i in range(n):
        for j in range(m):
            w = e[i, j]
            if w != 0.0:
                for v in range(nv):
                    g[i, v] += 2.0 * w * (a[i, v] - b[j, v])
    return g
