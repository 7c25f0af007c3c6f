"""Dominance utilities shared by the archive and the evolutionary search.

All objective arrays are minimization, shape (n, m).
"""
from __future__ import annotations

import numpy as np


def _check(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("objective values must be finite (NaN/inf rejected)")
    return pts


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(points) -> np.ndarray:
    """``D[i, j]`` is True when point i dominates point j."""
    pts = _check(points)
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    return le & lt


def nds(points) -> list[list[int]]:
    """Non-dominated sorting; returns fronts as lists of indices, best first."""
    pts = _check(points)
    n = len(pts)
    if n == 0:
        return []
    dom = dominance_matrix(pts)
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current.tolist())
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def front_ranks(points) -> np.ndarray:
    ranks = np.empty(len(points), dtype=int)
    for r, front in enumerate(nds(points)):
        ranks[front] = r
    return ranks


def nondominated_indices(points) -> list[int]:
    fronts = nds(points)
    return sorted(fronts[0]) if fronts else []


def crowding_distance(points) -> np.ndarray:
    pts = _check(points)
    n, m = pts.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(pts[:, k], kind="stable")
        vals = pts[order, k]
        span = vals[-1] - vals[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def hypervolume2(front, ref_point) -> float:
    """Exact area dominated by a 2-objective front inside the reference box."""
    pts = _check(front).reshape(-1, 2) if len(front) else np.empty((0, 2))
    ref = np.asarray(ref_point, dtype=float)
    if len(pts) == 0:
        return 0.0
    if np.any(pts > ref):
        raise ValueError("front member lies outside the reference box")
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    area = 0.0
    best_y = ref[1]
    for x, y in pts:
        if y < best_y:
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return float(area)
