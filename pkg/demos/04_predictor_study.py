"""
Choosing a surrogate
====================

Each predictor is scored by the mean Spearman correlation of its ten
cross-validation folds on oracle-labelled samples. The table also reports
fit time, and compares integer with one-hot features.
"""

import numpy as np

from natsearch.encoding import make_scheme
from natsearch.evaluator import SyntheticOracle
from natsearch.predictors import ALL_KINDS, benchmark, rows_to_csv, warmup

scheme = make_scheme("EarlyExitsParallel")
oracle = SyntheticOracle(scheme, seed=0)
warmup()  # compile the tree kernels before timing anything

rows = benchmark(ALL_KINDS, scheme, oracle, [100, 300], ["integer"], np.random.default_rng(1))
print(rows_to_csv(rows))

# Encodings, for the two models used most.
rows = benchmark(["GradientBoostedTrees", "Ridge"], scheme, oracle, [50, 300],
                 ["integer", "onehot"], np.random.default_rng(2))
for r in sorted(rows, key=lambda r: (r.kind, r.size, r.encoding)):
    print(f"{r.kind:22s} n={r.size:3d} {r.encoding:8s} rho={r.rho_mean:.3f}")
