from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def spearman(a, b) -> tuple[float, bool]:
    """Spearman rho with average ranks for ties.

    Returns ``(rho, defined)``; when either input has no rank variance the
    correlation is undefined and reported as ``(0.0, False)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise ValueError("need at least two observations")
    ra = rankdata(a) - (len(a) + 1) / 2.0
    rb = rankdata(b) - (len(b) + 1) / 2.0
    denom = np.sqrt(np.dot(ra, ra) * np.dot(rb, rb))
    if denom == 0:
        return 0.0, False
    return float(np.clip(np.dot(ra, rb) / denom, -1.0, 1.0)), True


def spearman_rho(a, b) -> float:
    return spearman(a, b)[0]
