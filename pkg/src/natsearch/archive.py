"""Fixed-capacity archive of evaluated architectures."""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .arch import MacroSpec, genome_cost, maximal_genome, minimal_genome
from .encoding import EncodingScheme, Genome
from .evaluator import EvaluationError, Evaluator
from .pareto import crowding_distance, hypervolume2, nds
from .sampling import sample_depth_uniform

FORMAT_VERSION = 1


class ObjectiveMode(str, enum.Enum):
    ACC_ONLY = "AccOnly"
    ACC_PARAMS = "AccParams"
    ACC_MACS = "AccMacs"

    @property
    def cost_key(self) -> str | None:
        return {"AccParams": "params", "AccMacs": "macs"}.get(self.value)


@dataclass(frozen=True)
class Evaluated:
    genome: Genome
    accuracy: float
    params: int
    macs: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 100.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 100]")
        if self.params <= 0 or self.macs <= 0:
            raise ValueError("params and macs must be positive")

    def cost(self, mode: ObjectiveMode) -> int:
        key = ObjectiveMode(mode).cost_key
        return getattr(self, key) if key else 0

    def objectives(self, mode: ObjectiveMode) -> tuple:
        mode = ObjectiveMode(mode)
        if mode is ObjectiveMode.ACC_ONLY:
            return (-self.accuracy,)
        return (-self.accuracy, self.cost(mode))

    def rank_key(self):
        """Best first: higher accuracy, then fewer params, fewer MACs, smaller genes."""
        return (-self.accuracy, self.params, self.macs, self.genome.genes)

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION, "genome": self.genome.to_text(),
                "accuracy": self.accuracy, "params": self.params, "macs": self.macs}


def make_evaluated(genome: Genome, accuracy: float, macro: MacroSpec) -> Evaluated:
    params, macs = genome_cost(genome, macro)
    return Evaluated(genome, float(accuracy), params, macs)


def evaluate_genomes(genomes: Sequence[Genome], evaluator: Evaluator, macro: MacroSpec,
                     jobs: int = 1) -> list[Evaluated]:
    genomes = list(genomes)
    try:
        accs = evaluator.evaluate_batch(genomes, jobs=jobs)
    except EvaluationError:
        raise
    except Exception as exc:  # locate the failing genome
        for g in genomes:
            try:
                evaluator.evaluate(g)
            except Exception as inner:
                raise EvaluationError(g, f"evaluator failed: {inner}") from inner
        raise EvaluationError(genomes[0], f"evaluator failed: {exc}") from exc
    return [make_evaluated(g, a, macro) for g, a in zip(genomes, accs)]


def objective_matrix(members: Sequence[Evaluated], mode: ObjectiveMode) -> np.ndarray:
    return np.array([m.objectives(mode) for m in members], dtype=float).reshape(len(members), -1)


def environmental_selection(pool: Sequence[Evaluated], size: int, mode: ObjectiveMode) -> list[Evaluated]:
    """Keep ``size`` members: whole fronts first, the split front trimmed by crowding."""
    pool = sorted(pool, key=Evaluated.rank_key)
    if len(pool) <= size:
        return pool
    kept: list[Evaluated] = []
    for front in nds(objective_matrix(pool, mode)):
        members = [pool[i] for i in sorted(front)]
        if len(kept) + len(members) <= size:
            kept += members
            continue
        need = size - len(kept)
        if ObjectiveMode(mode) is ObjectiveMode.ACC_ONLY:
            kept += sorted(members, key=Evaluated.rank_key)[:need]
        else:
            crowd = crowding_distance(objective_matrix(members, mode))
            order = sorted(range(len(members)), key=lambda i: (-crowd[i], members[i].rank_key()))
            kept += [members[i] for i in order[:need]]
        break
    return sorted(kept, key=Evaluated.rank_key)


class Archive:
    def __init__(self, capacity: int, mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS,
                 members: Iterable[Evaluated] = ()):
        self.capacity = int(capacity)
        self.mode = ObjectiveMode(mode)
        self.members: list[Evaluated] = []
        seen = set()
        for m in members:
            if m.genome in seen:
                raise ValueError(f"duplicate genome {m.genome}")
            seen.add(m.genome)
            self.members.append(m)
        if len(self.members) > self.capacity:
            raise ValueError(f"{len(self.members)} members exceed capacity {self.capacity}")
        self.members.sort(key=Evaluated.rank_key)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, genome: Genome) -> bool:
        return genome in self.genomes()

    def genomes(self) -> set[Genome]:
        return {m.genome for m in self.members}

    def objectives(self) -> np.ndarray:
        return objective_matrix(self.members, self.mode)

    def replace_weakest(self, newcomers: Iterable[Evaluated]) -> "Archive":
        """Merge newcomers, then trim the union back to the current size."""
        known = self.genomes()
        fresh = []
        for n in newcomers:
            if n.genome not in known:
                known.add(n.genome)
                fresh.append(n)
        target = len(self.members)
        if target < self.capacity:
            target = min(self.capacity, target + len(fresh))
        kept = environmental_selection(self.members + fresh, target, self.mode)
        return Archive(self.capacity, self.mode, kept)

    def nondominated(self) -> list[Evaluated]:
        return nondominated(self.members, self.mode)

    def hypervolume(self, ref_cost: float | None = None) -> float:
        return archive_hypervolume(self.members, self.mode, ref_cost)

    # persistence

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.to_dict()) + "\n" for m in self.members)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str, scheme: EncodingScheme, capacity: int,
                   mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS) -> "Archive":
        members = []
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            if row.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"unsupported archive format_version {row.get('format_version')}")
            members.append(Evaluated(Genome.from_text(scheme, row["genome"]), float(row["accuracy"]),
                                     int(row["params"]), int(row["macs"])))
        return cls(capacity, mode, members)

    @classmethod
    def load(cls, path: str | Path, scheme: EncodingScheme, capacity: int,
             mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS) -> "Archive":
        return cls.from_jsonl(Path(path).read_text(), scheme, capacity, mode)


def initialize(scheme: EncodingScheme, macro: MacroSpec, evaluator: Evaluator, capacity: int = 300,
               oversample: int = 10, rng: np.random.Generator | None = None,
               mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS, jobs: int = 1) -> tuple[Archive, int]:
    """Oversampled archive start.

    ``oversample * capacity`` distinct genomes are evaluated: the maximal and
    minimal networks plus depth-uniform samples (duplicates are redrawn). The
    best ``capacity - 2`` samples by accuracy join the two extremes.
    Returns the archive and the number of evaluations performed.
    """
    if capacity < 3:
        raise ValueError("archive capacity must be at least 3")
    rng = rng if rng is not None else np.random.default_rng(0)
    extremes = [maximal_genome(scheme), minimal_genome(scheme)]
    seen = set(extremes)
    pool = []
    n_samples = oversample * capacity - len(extremes)
    if n_samples < capacity - 2:
        raise ValueError("oversample too small to fill the archive")
    while len(pool) < n_samples:
        g = sample_depth_uniform(scheme, rng)
        if g not in seen:
            seen.add(g)
            pool.append(g)
    evaluated = evaluate_genomes(extremes + pool, evaluator, macro, jobs)
    best = sorted(evaluated[2:], key=Evaluated.rank_key)[:capacity - 2]
    return Archive(capacity, mode, evaluated[:2] + best), len(evaluated)


def nondominated(members: Sequence[Evaluated], mode: ObjectiveMode | str) -> list[Evaluated]:
    mode = ObjectiveMode(mode)
    if not members:
        return []
    first = nds(objective_matrix(members, mode))[0]
    return sorted((members[i] for i in first), key=lambda m: (m.cost(mode), -m.accuracy, m.genome.genes))


def archive_hypervolume(members: Sequence[Evaluated], mode: ObjectiveMode | str,
                        ref_cost: float | None = None) -> float:
    """Area dominated in (accuracy up, cost down) space with reference (0, ref_cost).

    ``ref_cost`` defaults to twice the largest cost among ``members``. In
    accuracy-only mode this is simply the best accuracy.
    """
    mode = ObjectiveMode(mode)
    if not members:
        return 0.0
    if mode is ObjectiveMode.ACC_ONLY:
        return max(m.accuracy for m in members)
    if ref_cost is None:
        ref_cost = 2.0 * max(m.cost(mode) for m in members)
    pts = [(-m.accuracy, m.cost(mode)) for m in members]
    return hypervolume2(pts, (0.0, ref_cost))


def high_tradeoff(front: Sequence[Evaluated], mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS,
                  threshold: float = 1.0) -> list[Evaluated]:
    """Knee points of a non-dominated front.

    Objectives are min-max normalized. For an interior point, moving to the
    cheaper neighbour loses ``d_acc`` accuracy per unit of cost saved, and moving
    to the more accurate neighbour costs ``d_cost`` per unit of accuracy gained.
    A point is a knee when the smaller of these two ratios exceeds ``threshold``.
    Endpoints are never knees (see :func:`front_extremes`).
    """
    mode = ObjectiveMode(mode)
    pts = sorted(front, key=lambda m: (m.cost(mode), m.accuracy))
    if len(pts) < 3:
        return list(front)
    acc = np.array([p.accuracy for p in pts], dtype=float)
    cst = np.array([p.cost(mode) for p in pts], dtype=float)
    acc = (acc - acc.min()) / (np.ptp(acc) or 1.0)
    cst = (cst - cst.min()) / (np.ptp(cst) or 1.0)
    knees = []
    for i in range(1, len(pts) - 1):
        left = _ratio(acc[i] - acc[i - 1], cst[i] - cst[i - 1])
        right = _ratio(cst[i + 1] - cst[i], acc[i + 1] - acc[i])
        if min(left, right) > threshold:
            knees.append(pts[i])
    return knees


def _ratio(loss: float, gain: float) -> float:
    if gain <= 0:
        return np.inf if loss > 0 else 0.0
    return loss / gain


def front_extremes(front: Sequence[Evaluated], mode: ObjectiveMode | str = ObjectiveMode.ACC_PARAMS) -> list[Evaluated]:
    """Cheapest and most accurate members of a front."""
    mode = ObjectiveMode(mode)
    if not front:
        return []
    cheapest = min(front, key=lambda m: (m.cost(mode), -m.accuracy))
    best = max(front, key=lambda m: (m.accuracy, -m.cost(mode)))
    return [cheapest] if cheapest is best else [cheapest, best]


def front_csv(members: Sequence[Evaluated]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["genome", "accuracy", "params", "macs"])
    for m in members:
        w.writerow([m.genome.to_text(), repr(m.accuracy), m.params, m.macs])
    return buf.getvalue()
