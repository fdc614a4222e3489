"""Independent reference implementations used to freeze expected test values.

Everything here is deliberately naive (exhaustive enumeration, direct
formulas, finite differences) and shares no code with the package's
dynamic-programming kernels.
"""

import math

import numpy as np


def local_cost(x, y, metric):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if metric == "manhattan":
        return float(np.abs(x - y).sum())
    sq = float(((x - y) ** 2).sum())
    return sq if metric in ("sqeuclidean", "squared-euclidean") else math.sqrt(sq)


def enumerate_paths(n, m):
    """All monotone warping paths from (0, 0) to (n-1, m-1)."""
    stack = [[(0, 0)]]
    while stack:
        path = stack.pop()
        i, j = path[-1]
        if (i, j) == (n - 1, m - 1):
            yield path
            continue
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                stack.append(path + [(ni, nj)])


def path_cost(a, b, path, metric):
    return sum(local_cost(a[i], b[j], metric) for i, j in path)


def cell_costs(a, b, metric):
    """All pairwise sample costs as a plain nested list (fast exact lookups)."""
    a = np.atleast_2d(np.asarray(a, dtype=float).T).T if np.asarray(a).ndim == 1 else np.asarray(a, dtype=float)
    b = np.atleast_2d(np.asarray(b, dtype=float).T).T if np.asarray(b).ndim == 1 else np.asarray(b, dtype=float)
    diff = a[:, None, :] - b[None, :, :]
    if metric == "manhattan":
        grid = np.abs(diff).sum(axis=2)
    else:
        grid = (diff * diff).sum(axis=2)
        if metric not in ("sqeuclidean", "squared-euclidean"):
            grid = np.sqrt(grid)
    return grid.tolist(), a.shape[0], b.shape[0]


def all_path_costs(a, b, metric):
    grid, n, m = cell_costs(a, b, metric)
    return [sum(grid[i][j] for i, j in p) for p in enumerate_paths(n, m)]


def brute_force_dtw(a, b, metric="euclidean"):
    """Minimum alignment cost over every monotone path (exact)."""
    return min(all_path_costs(a, b, metric))


def brute_force_softdtw(a, b, gamma):
    """-gamma * log sum over paths of exp(-cost/gamma), squared-Euclidean costs."""
    costs = np.array(all_path_costs(a, b, "sqeuclidean"))
    lowest = costs.min()
    return float(lowest - gamma * np.log(np.exp(-(costs - lowest) / gamma).sum()))


def finite_difference_gradient(f, x, h=1e-5):
    """Central finite differences of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2 * h)
        it.iternext()
    return grad


def rand_multiseries(rng, n, v=1, scale=1.0):
    return rng.normal(0.0, scale, size=(n, v))


def itakura_feasible(n, m, slope):
    """Corner-connectivity of a slope-constrained parallelogram (1-indexed geometry)."""
    return (n - 1) / slope <= (m - 1) <= (n - 1) * slope
