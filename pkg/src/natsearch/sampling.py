"""Random genome generators.

``sample_uniform_domain`` draws every gene uniformly over its domain, which is
what plain NAT does and heavily favours deep stages. ``sample_depth_uniform``
draws the depth of each stage uniformly from {2, 3, 4} and then the level
configurations uniformly.
"""
from __future__ import annotations

import numpy as np

from .encoding import MAX_BRANCH_MASK, N_KE, EncodingScheme, Genome, repair


def sample_uniform_domain(scheme: EncodingScheme, rng: np.random.Generator) -> Genome:
    genes = [int(rng.integers(lo, hi + 1)) for lo, hi in scheme.gene_bounds()]
    genome = Genome.from_genes(scheme, genes)
    # zeros at positions 1-2 are redrawn, holes are compacted (depth preserved)
    return repair(genome, rng)


def _level_gene(scheme: EncodingScheme, rng: np.random.Generator) -> int:
    ke = int(rng.integers(N_KE))
    mask = int(rng.integers(1, MAX_BRANCH_MASK + 1)) if scheme.parallel else 1
    return (mask - 1) * N_KE + ke + 1


def sample_depth_uniform(scheme: EncodingScheme, rng: np.random.Generator) -> Genome:
    b = scheme.blocks_per_stage
    levels = []
    for _ in range(scheme.n_stages):
        depth = int(rng.integers(2, b + 1))
        levels += [_level_gene(scheme, rng) if p < depth else 0 for p in range(b)]
    r = int(rng.integers(len(scheme.resolution_choices)))
    w = int(rng.integers(len(scheme.width_choices)))
    x = int(rng.integers(1, scheme.n_exits + 1)) if scheme.has_exits else None
    return Genome(scheme, r, w, x, tuple(levels))


SAMPLERS = {
    "uniform-domain": sample_uniform_domain,
    "depth-uniform": sample_depth_uniform,
}


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent streams derived from a root seed by stream index."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_many(scheme: EncodingScheme, n: int, rng: np.random.Generator, method: str = "depth-uniform") -> list[Genome]:
    sampler = SAMPLERS[method]
    return [sampler(scheme, rng) for _ in range(n)]


def depth_histograms(genomes: list[Genome]) -> tuple[dict[int, int], dict[int, int]]:
    """Counts of stage depths and of total network depths."""
    stage: dict[int, int] = {}
    network: dict[int, int] = {}
    for g in genomes:
        depths = g.stage_depths()
        for d in depths:
            stage[d] = stage.get(d, 0) + 1
        total = sum(depths)
        network[total] = network.get(total, 0) + 1
    return dict(sorted(stage.items())), dict(sorted(network.items()))
