"""Predictor comparison: rank correlation and fit time per model, size and encoding."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..encoding import EncodingScheme, feature_matrix
from ..sampling import sample_depth_uniform
from .cv import fit_cv
from .models import ALL_KINDS, PredictorKind
from .trees import CART, RandomForest


@dataclass(frozen=True)
class BenchRow:
    kind: str
    size: int
    encoding: str
    rho_mean: float
    rho_std: float
    fit_seconds: float


def benchmark(kinds: Sequence[PredictorKind | str] = ALL_KINDS, scheme: EncodingScheme | None = None,
              oracle=None, train_sizes: Sequence[int] = (300,), encodings: Sequence[str] = ("integer",),
              rng: np.random.Generator | None = None, k: int = 10, repeats: int = 1) -> list[BenchRow]:
    """Run ``fit_cv`` for every (kind, size, encoding); rows sorted by mean rho, best first.

    Each repeat draws one depth-uniform pool and the training sets are its
    nested prefixes, so larger sizes extend smaller ones.
    """
    if oracle is None or scheme is None:
        raise ValueError("benchmark needs a scheme and an oracle")
    rng = rng if rng is not None else np.random.default_rng(0)
    kinds = [PredictorKind(x) for x in kinds]
    n_max = max(train_sizes)
    pools = []
    for _ in range(repeats):
        genomes = [sample_depth_uniform(scheme, rng) for _ in range(n_max)]
        y = np.array([oracle.evaluate(g) for g in genomes])
        pools.append(({enc: feature_matrix(genomes, enc) for enc in encodings}, y))
    seeds = rng.integers(0, 2 ** 31, size=repeats)
    rows = []
    for kind in kinds:
        for size in train_sizes:
            for enc in encodings:
                rhos, folds, times = [], [], []
                for (feats, y), seed in zip(pools, seeds):
                    mm = fit_cv(kind, feats[enc][:size], y[:size], k, np.random.default_rng(seed))
                    rhos.append(mm.cv_rho)
                    folds += mm.fold_rhos
                    times.append(mm.fit_time)
                rows.append(BenchRow(kind.value, size, enc, float(np.mean(rhos)), float(np.std(folds)),
                                     float(np.mean(times))))
    rows.sort(key=lambda r: -r.rho_mean)
    return rows


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "size", "encoding", "rho_mean", "rho_std", "fit_seconds"])
    for r in rows:
        w.writerow([r.kind, r.size, r.encoding, f"{r.rho_mean:.6f}", f"{r.rho_std:.6f}", f"{r.fit_seconds:.6f}"])
    return buf.getvalue()


def warmup() -> None:
    """Trigger numba compilation so timings measure fitting only."""
    X = np.arange(40, dtype=float).reshape(20, 2)
    y = X[:, 0] % 7
    CART().fit(X, y).predict(X)
    RandomForest(n_trees=2).fit(X, y).predict(X)
