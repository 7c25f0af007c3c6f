"""
A complete search
=================

The archive is seeded with oversampled random networks. Each iteration fits
a surrogate on it, runs NSGA-III against the surrogate and the exact cost,
evaluates the most promising unseen candidates and merges them back.
"""

import tempfile
from pathlib import Path

from natsearch.config import MoeaConfig, RunConfig
from natsearch.pipeline import run

cfg = RunConfig(seed=0, archive_size=100, iterations=5, moea=MoeaConfig(pop_size=50, generations=20))
out = Path(tempfile.mkdtemp())
res = run(cfg, out_dir=out)

print(f"{res.evaluations} evaluations")
print(f"hypervolume {res.report['initial']['hv']:.4g} -> {res.report['final']['hv']:.4g}")
for it in res.report["iterations"]:
    print(f"  iteration {it['iteration']}: cv rho {it['cv_rho']:.3f}, hv {it['hv']:.4g}")

print("non-dominated networks (params, accuracy):")
for m in res.nondominated:
    print(f"  {m.params / 1e6:6.2f}M  {m.accuracy:6.2f}%  {m.genome.to_text()}")
print("knee points:", [(round(m.params / 1e6, 2), round(m.accuracy, 2)) for m in res.high_tradeoff])
print("files:", sorted(p.name for p in out.iterdir()))
