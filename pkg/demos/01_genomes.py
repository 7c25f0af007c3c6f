"""
Genomes and the four encoding schemes
=====================================

A sub-network is an integer string. Two genes pick the input resolution and
the width multiplier, exit schemes add one gene for the chosen exit, and the
remaining twenty genes describe the levels of five stages.
"""

import numpy as np

from natsearch.encoding import SchemeKind, decode_level, make_scheme, repair, to_features, validate, Genome
from natsearch.sampling import sample_depth_uniform

# Lengths and level domains of the four schemes.
for kind in SchemeKind:
    s = make_scheme(kind)
    print(f"{kind.value:20s} length={s.length}  level values={s.level_domain}")

# A parallel level gene packs kernel, expansion and the branch mask.
par = make_scheme("Parallel")
for v in (0, 1, 23, 63):
    print(v, "->", decode_level(v, par))

# Random genomes have a compact text form that round-trips exactly.
g = sample_depth_uniform(make_scheme("EarlyExitsParallel"), np.random.default_rng(0))
print(g.to_text())
print("stage depths:", g.stage_depths(), "valid:", not validate(g))

# Broken genomes are reported rule by rule, and repair fixes them.
broken = Genome.from_genes(g.scheme, list(g.genes[:3]) + [0, 5, 0, 7] + list(g.levels[4:]))
for v in validate(broken):
    print("violation:", v)
print("repaired:", repair(broken).to_text())

# Predictor features: raw integers, or one indicator block per gene.
print("integer features:", to_features(g).shape, "one-hot features:", to_features(g, "onehot").shape)
