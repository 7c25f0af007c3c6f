"""NSGA-III over integer genomes.

Accuracy comes from a surrogate, cost is computed exactly; both are minimized
internally (accuracy is negated).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .arch import MacroSpec, genome_cost
from .archive import ObjectiveMode
from .encoding import EncodingScheme, Genome, ensure_valid, feature_matrix, repair
from .pareto import front_ranks, hypervolume2, nds
from .sampling import sample_depth_uniform


def das_dennis(n_obj: int, partitions: int) -> np.ndarray:
    """All points of the unit simplex with coordinates in multiples of 1/partitions."""
    if n_obj < 2 or partitions < 1:
        raise ValueError("need n_obj >= 2 and partitions >= 1")
    dirs = []
    # stars and bars: choose positions of the n_obj - 1 bars
    for bars in itertools.combinations(range(partitions + n_obj - 1), n_obj - 1):
        edges = (-1,) + bars + (partitions + n_obj - 1,)
        dirs.append([edges[i + 1] - edges[i] - 1 for i in range(n_obj)])
    out = np.array(dirs, dtype=float) / partitions
    return out[np.lexsort(out.T[::-1])]


# normalization, association and niching


def _normalize(F: np.ndarray, first_front: np.ndarray) -> np.ndarray:
    ideal = F.min(axis=0)
    Ft = F - ideal
    m = F.shape[1]
    weights = np.full((m, m), 1e-6) + np.eye(m) * (1 - 1e-6)
    extremes = np.array([Ft[np.argmin(np.max(Ft / w, axis=1))] for w in weights])
    intercepts = None
    try:
        b = np.linalg.solve(extremes, np.ones(m))
        cand = 1.0 / b
        if np.all(np.isfinite(cand)) and np.all(cand > 1e-6):
            intercepts = cand
    except np.linalg.LinAlgError:
        pass
    if intercepts is None:
        intercepts = Ft[first_front].max(axis=0)
    intercepts = np.where(intercepts > 1e-12, intercepts, 1.0)
    return Ft / intercepts


def associate(Fn: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest reference line (perpendicular distance) for each normalized point."""
    unit = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = Fn @ unit.T
    # residual norm directly; |x|^2 - proj^2 cancels badly near the line
    dist = np.linalg.norm(Fn[:, None, :] - proj[:, :, None] * unit[None, :, :], axis=2)
    niche = dist.argmin(axis=1)
    return niche, dist[np.arange(len(Fn)), niche]


def select_nsga3(F: np.ndarray, n_select: int, dirs: np.ndarray | None,
                 rng: np.random.Generator) -> list[int]:
    """Environmental selection; returns chosen indices into ``F``."""
    F = np.asarray(F, dtype=float)
    if len(F) <= n_select:
        return list(range(len(F)))
    if F.shape[1] == 1:
        return sorted(np.argsort(F[:, 0], kind="stable")[:n_select].tolist())
    fronts = nds(F)
    chosen: list[int] = []
    last: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= n_select:
            chosen += front
            if len(chosen) == n_select:
                return sorted(chosen)
        else:
            last = front
            break
    pool = np.array(chosen + last)
    # the first front leads ``pool`` whether or not it was accepted whole
    Fn = _normalize(F[pool], np.arange(len(fronts[0])))
    niche, dist = associate(Fn, dirs)
    n_chosen = len(chosen)
    counts = np.bincount(niche[:n_chosen], minlength=len(dirs))
    cand_niche = niche[n_chosen:]
    cand_dist = dist[n_chosen:]
    available = np.ones(len(last), dtype=bool)
    active = np.ones(len(dirs), dtype=bool)
    picked = []
    while len(picked) < n_select - n_chosen:
        lowest = counts[active].min()
        j_min = np.flatnonzero(active & (counts == lowest))
        j = int(rng.choice(j_min))
        members = np.flatnonzero(available & (cand_niche == j))
        if members.size == 0:
            active[j] = False
            continue
        if counts[j] == 0:
            pick = int(members[np.argmin(cand_dist[members])])
        else:
            pick = int(rng.choice(members))
        picked.append(last[pick])
        available[pick] = False
        counts[j] += 1
    return sorted(chosen + picked)


# problem and operators


@dataclass
class SearchProblem:
    scheme: EncodingScheme
    macro: MacroSpec
    mode: ObjectiveMode
    accuracy_fn: Callable[[np.ndarray], np.ndarray]
    encoding: str = "integer"

    def __post_init__(self):
        self.mode = ObjectiveMode(self.mode)

    @property
    def n_obj(self) -> int:
        return 1 if self.mode is ObjectiveMode.ACC_ONLY else 2

    def evaluate(self, genomes: Sequence[Genome]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (objectives to minimize, predicted accuracy, cost)."""
        X = feature_matrix(genomes, self.encoding)
        acc = np.asarray(self.accuracy_fn(X), dtype=float)
        key = self.mode.cost_key
        costs = np.array([genome_cost(g, self.macro)[1 if key == "macs" else 0] for g in genomes], dtype=float)
        if self.n_obj == 1:
            return -acc[:, None], acc, costs
        return np.column_stack([-acc, costs]), acc, costs


@dataclass
class Operators:
    """Uniform crossover, per-gene reset mutation and validity repair."""

    crossover_prob: float = 0.5
    mutation_prob: float | None = None  # default 1 / genome length
    max_retries: int = 10

    def describe(self) -> dict:
        return {"crossover": "uniform", "crossover_prob": self.crossover_prob,
                "mutation": "reset", "mutation_prob": self.mutation_prob or "1/length",
                "repair": "clamp+depth", "max_retries": self.max_retries}

    def crossover(self, a: Genome, b: Genome, rng: np.random.Generator) -> Genome:
        mask = rng.random(a.scheme.length) < self.crossover_prob
        genes = np.where(mask, a.genes, b.genes)
        return Genome.from_genes(a.scheme, genes)

    def mutate(self, g: Genome, rng: np.random.Generator, force: bool = False) -> Genome:
        scheme = g.scheme
        p = self.mutation_prob or 1.0 / scheme.length
        genes = list(g.genes)
        hit = rng.random(len(genes)) < p
        if force and not hit.any():
            hit[rng.integers(len(genes))] = True
        for i, (lo, hi) in enumerate(scheme.gene_bounds()):
            if hit[i]:
                genes[i] = int(rng.integers(lo, hi + 1))
        return repair(Genome.from_genes(scheme, genes), rng)


@dataclass
class Population:
    genomes: list[Genome]
    F: np.ndarray
    pred_acc: np.ndarray
    cost: np.ndarray
    history: list[dict] = field(default_factory=list)

    def front_ranks(self) -> np.ndarray:
        return front_ranks(self.F)


class SearchError(RuntimeError):
    pass


def _stats(gen: int, pop: Population, ref_cost: float) -> dict:
    if pop.F.shape[1] == 2:
        pts = np.column_stack([-pop.pred_acc, pop.cost])
        pts = pts[pts[:, 1] <= ref_cost]
        hv = hypervolume2(np.minimum(pts, [0.0, ref_cost]), (0.0, ref_cost))
    else:
        hv = float(pop.pred_acc.max())
    return {"gen": gen, "hv": float(hv), "best_pred_acc": float(pop.pred_acc.max()),
            "min_cost": float(pop.cost.min())}


def evolve(problem: SearchProblem, pop_size: int = 100, generations: int = 60,
           rng: np.random.Generator | None = None, initial: Sequence[Genome] = (),
           operators: Operators | None = None, partitions: int | None = None) -> Population:
    """Run NSGA-III and return the final population with per-generation stats."""
    rng = rng if rng is not None else np.random.default_rng(0)
    ops = operators or Operators()
    dirs = das_dennis(problem.n_obj, partitions or pop_size - 1) if problem.n_obj > 1 else None

    def evaluate(genomes, gen):
        try:
            return problem.evaluate(genomes)
        except Exception as exc:
            raise SearchError(f"objective evaluation failed in generation {gen}: {exc}") from exc

    seen = set()
    genomes = []
    for g in initial:
        ensure_valid(g)
        if g not in seen:
            seen.add(g)
            genomes.append(g)
    while len(genomes) < pop_size:
        g = sample_depth_uniform(problem.scheme, rng)
        if g not in seen:
            seen.add(g)
            genomes.append(g)
    F, acc, cost = evaluate(genomes, 0)
    if len(genomes) > pop_size:
        keep = select_nsga3(F, pop_size, dirs, rng)
        genomes = [genomes[i] for i in keep]
        F, acc, cost = F[keep], acc[keep], cost[keep]
    pop = Population(genomes, F, acc, cost)
    ref_cost = 2.0 * float(cost.max())
    pop.history.append(_stats(0, pop, ref_cost))

    for gen in range(1, generations + 1):
        present = set(pop.genomes)
        children = []
        for _ in range(pop_size):
            a, b = rng.choice(len(pop.genomes), 2, replace=len(pop.genomes) < 2)
            child = ops.mutate(ops.crossover(pop.genomes[a], pop.genomes[b], rng), rng)
            tries = 0
            while child in present and tries < ops.max_retries:
                child = ops.mutate(child, rng, force=True)
                tries += 1
            if child not in present:
                present.add(child)
                children.append(child)
        if children:
            cF, cacc, ccost = evaluate(children, gen)
            allg = pop.genomes + children
            F = np.vstack([pop.F, cF])
            acc = np.concatenate([pop.pred_acc, cacc])
            cost = np.concatenate([pop.cost, ccost])
            keep = select_nsga3(F, pop_size, dirs, rng)
            pop = Population([allg[i] for i in keep], F[keep], acc[keep], cost[keep], pop.history)
        pop.history.append(_stats(gen, pop, ref_cost))
    return pop


def stats_csv(history: Sequence[dict]) -> str:
    lines = ["gen,hv,best_pred_acc,min_cost"]
    lines += [f"{h['gen']},{h['hv']!r},{h['best_pred_acc']!r},{h['min_cost']!r}" for h in history]
    return "\n".join(lines) + "\n"
