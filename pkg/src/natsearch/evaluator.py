"""Accuracy evaluators and trainers.

Real sub-network evaluation needs a trained super-network; here it sits behind
the :class:`Evaluator` protocol. :class:`SyntheticOracle` is a deterministic
stand-in whose accuracy grows with MACs, resolution and exit depth, plus a
per-genome hash noise term.
"""
from __future__ import annotations

import hashlib
import json
import math
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .arch import MacroSpec, genome_cost
from .encoding import EncodingScheme, Genome, ensure_valid
from .sampling import sample_depth_uniform


class EvaluationError(RuntimeError):
    def __init__(self, genome: Genome, message: str):
        self.genome = genome
        super().__init__(f"{message} [genome {genome.to_text()}]")


class Evaluator(Protocol):
    def evaluate(self, genome: Genome) -> float: ...

    def evaluate_batch(self, genomes: Sequence[Genome], jobs: int = 1) -> list[float]: ...


def hash_noise(genome: Genome, seed: int) -> float:
    """Deterministic value in [-1, 1] keyed on the genome text and seed."""
    digest = hashlib.blake2b(f"{seed}|{genome.to_text()}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / (2 ** 64 - 1) * 2.0 - 1.0


@dataclass
class SyntheticOracle:
    scheme: EncodingScheme
    macro: MacroSpec = field(default_factory=MacroSpec)
    seed: int = 0
    a0: float = 30.0
    a1: float = 45.0
    a2: float = 10.0
    a3: float = 5.0
    noise: float = 1.0
    mac_scale: float | None = None
    scale_samples: int = 1000

    def __post_init__(self):
        if self.mac_scale is None:
            rng = np.random.default_rng(self.seed)
            macs = [genome_cost(sample_depth_uniform(self.scheme, rng), self.macro)[1]
                    for _ in range(self.scale_samples)]
            self.mac_scale = float(np.median(macs))

    def terms(self, genome: Genome) -> dict[str, float]:
        s = genome.scheme
        n_res = len(s.resolution_choices)
        return {
            "macs": float(genome_cost(genome, self.macro)[1]),
            "res_frac": genome.r_idx / (n_res - 1) if n_res > 1 else 1.0,
            "exit_frac": genome.exit_stage / s.n_stages,
            "noise": hash_noise(genome, self.seed),
        }

    def evaluate(self, genome: Genome) -> float:
        ensure_valid(genome)
        t = self.terms(genome)
        acc = (self.a0 + self.a1 * (1.0 - math.exp(-t["macs"] / self.mac_scale))
               + self.a2 * t["res_frac"] + self.a3 * t["exit_frac"] + self.noise * t["noise"])
        return min(100.0, max(0.0, acc))

    def evaluate_batch(self, genomes: Sequence[Genome], jobs: int = 1) -> list[float]:
        return map_ordered(self.evaluate, genomes, jobs)


def map_ordered(fn, items, jobs: int = 1) -> list:
    """Apply ``fn`` with up to ``jobs`` threads; results keep input order."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class ExternalCommandEvaluator:
    """Shells out once per batch.

    The command reads JSONL on stdin, one ``{"genome": <text form>}`` per line,
    and must print one ``{"genome": ..., "accuracy": <float>}`` per line in the
    same order.
    """

    scheme: EncodingScheme
    command: str
    timeout: float | None = None

    def evaluate(self, genome: Genome) -> float:
        return self.evaluate_batch([genome])[0]

    def evaluate_batch(self, genomes: Sequence[Genome], jobs: int = 1) -> list[float]:
        genomes = [ensure_valid(g) for g in genomes]
        if not genomes:
            return []
        payload = "".join(json.dumps({"genome": g.to_text()}) + "\n" for g in genomes)
        proc = subprocess.run(shlex.split(self.command), input=payload, capture_output=True,
                              text=True, timeout=self.timeout)
        if proc.returncode != 0:
            raise EvaluationError(genomes[0], f"external evaluator exited {proc.returncode}: {proc.stderr.strip()}")
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != len(genomes):
            raise EvaluationError(genomes[0], f"external evaluator returned {len(lines)} rows for {len(genomes)} genomes")
        out = []
        for g, line in zip(genomes, lines):
            row = json.loads(line)
            if row.get("genome", g.to_text()) != g.to_text():
                raise EvaluationError(g, "external evaluator reordered its output")
            acc = float(row["accuracy"])
            if not 0.0 <= acc <= 100.0:
                raise EvaluationError(g, f"accuracy {acc} outside [0, 100]")
            out.append(acc)
        return out


# trainers used by post-processing


class EpochBudgetExceeded(RuntimeError):
    pass


class Trainer(Protocol):
    def train_epoch(self, split: str = "train") -> None: ...

    def validation_score(self) -> float: ...

    def test_score(self) -> float: ...

    def snapshot(self): ...

    def restore(self, state) -> None: ...


@dataclass
class CurveTrainer:
    """Trainer whose validation score after ``t`` epochs is ``curve[t]``.

    ``curve[0]`` is the untouched network. Training on ``train+val`` adds
    ``merged_bonus`` to the test score.
    """

    curve: Sequence[float]
    merged_bonus: float = 0.0
    epochs: int = 0
    merged: bool = False
    history: list = field(default_factory=list)

    def train_epoch(self, split: str = "train") -> None:
        if split not in ("train", "train+val"):
            raise ValueError(f"unknown split {split!r}")
        if self.epochs + 1 >= len(self.curve):
            raise EpochBudgetExceeded(f"curve defined for {len(self.curve) - 1} epochs only")
        self.epochs += 1
        self.merged = split == "train+val"
        self.history.append(split)

    def validation_score(self) -> float:
        return float(self.curve[self.epochs])

    def test_score(self) -> float:
        return float(self.curve[self.epochs]) + (self.merged_bonus if self.merged else 0.0)

    def snapshot(self):
        return (self.epochs, self.merged)

    def restore(self, state) -> None:
        self.epochs, self.merged = state


def synthetic_curve(seed: int, max_epochs: int = 150, base: float = 60.0, gain: float = 10.0,
                    peak: int | None = None, noise: float = 1.0) -> tuple[np.ndarray, int]:
    """Concave validation curve with a strict maximum at a seeded epoch.

    The noise is scaled by the squared distance to the peak, so it can never
    move the argmax.
    """
    rng = np.random.default_rng(seed)
    if peak is None:
        peak = int(rng.integers(10, max_epochs + 1))
    t = np.arange(max_epochs + 1, dtype=float)
    d2 = ((t - peak) / peak) ** 2
    curve = base + gain * (1.0 - d2) + 0.5 * gain * d2 * noise * rng.uniform(-1.0, 1.0, t.size)
    return curve, peak


def synthetic_trainer(seed: int, max_epochs: int = 150, peak: int | None = None, **kw) -> CurveTrainer:
    curve, _ = synthetic_curve(seed, max_epochs, peak=peak, **kw)
    return CurveTrainer(curve, merged_bonus=0.5)
