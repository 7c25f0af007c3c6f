"""
Why sample stage depth uniformly
================================

Drawing every gene uniformly makes a level skip only one time in ten, so
two-level stages almost never appear. Drawing the depth first fixes that.
"""

import numpy as np

from natsearch.encoding import make_scheme
from natsearch.sampling import depth_histograms, sample_many

scheme = make_scheme("Baseline")
n = 20_000
for method in ("uniform-domain", "depth-uniform"):
    genomes = sample_many(scheme, n, np.random.default_rng(0), method)
    stage, network = depth_histograms(genomes)
    total = sum(stage.values())
    print(method)
    print("  stage depth:", {d: round(c / total, 3) for d, c in stage.items()})
    depths = np.repeat(list(network), list(network.values()))
    print(f"  network depth mean {depths.mean():.2f}, range {depths.min()}..{depths.max()}")
