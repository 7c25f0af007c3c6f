"""
From genome to parameters and MACs
==================================

Decoding places each level in a MobileNetV3-like macro-architecture and the
cost model counts weights and multiply-accumulates layer by layer.
"""

from natsearch.arch import MacroSpec, cost, decode, format_architecture, maximal_genome, minimal_genome
from natsearch.encoding import make_scheme

scheme = make_scheme("EarlyExitsParallel")
macro = MacroSpec()

# The smallest network: two levels per stage, the first exit, lowest resolution.
small = decode(minimal_genome(scheme), macro)
print(format_architecture(small))
print(cost(small).to_json())

# The largest network keeps every level and all three branches.
big = maximal_genome(scheme)
rep = cost(decode(big, macro))
print(f"maximal: {rep.params / 1e6:.2f}M params, {rep.macs / 1e6:.1f}M MACs")
for i, (p, m) in enumerate(rep.per_stage, 1):
    print(f"  stage {i}: {p:>9,d} params {m:>12,d} MACs")

# Leaving at an earlier exit drops the later stages and swaps the head.
for x in range(1, 6):
    r = cost(decode(big.replace(exit=x), macro))
    print(f"exit {x}: {r.params / 1e6:6.2f}M params {r.macs / 1e6:8.1f}M MACs")

# Resolution changes compute but not the parameter count.
for r_idx, res in enumerate(scheme.resolution_choices):
    r = cost(decode(big.replace(r_idx=r_idx), macro))
    print(f"{res}px: {r.params:,d} params {r.macs:,d} MACs")
