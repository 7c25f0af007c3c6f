"""K-fold cross-validated macro-models."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .models import PredictorKind, make_predictor
from .stats import spearman


class FoldConfigError(ValueError):
    pass


@dataclass
class MacroModel:
    """Mean of the fold models' predictions."""

    kind: PredictorKind
    fold_models: list
    cv_rho: float
    rho_std: float
    fold_rhos: list[float]
    fit_time: float
    degenerate: bool = False
    meta: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([m.predict(X) for m in self.fold_models], axis=0)


def fold_indices(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def fit_cv(kind: PredictorKind | str, X, y, k: int = 10, rng: np.random.Generator | None = None,
           **params) -> MacroModel:
    """Fit one model per fold, score it on the held-out fold, keep all as an ensemble."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if k < 2:
        raise FoldConfigError("need at least 2 folds")
    if n < k:
        raise FoldConfigError(f"{n} samples cannot fill {k} folds")
    rng = rng if rng is not None else np.random.default_rng(0)
    folds = fold_indices(n, k, rng)
    seeds = rng.integers(0, 2 ** 31, size=k)
    models, rhos = [], []
    degenerate = bool(np.all(y == y[0]))
    elapsed = 0.0
    for i, test in enumerate(folds):
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        model = make_predictor(kind, seed=int(seeds[i]), **params)
        t0 = time.perf_counter()
        model.fit(X[train], y[train])
        elapsed += time.perf_counter() - t0
        models.append(model)
        if len(test) < 2:
            rhos.append(0.0)
            degenerate = True
            continue
        rho, ok = spearman(model.predict(X[test]), y[test])
        degenerate |= not ok
        rhos.append(rho)
    return MacroModel(PredictorKind(kind), models, float(np.mean(rhos)), float(np.std(rhos)), rhos,
                      elapsed, degenerate)
