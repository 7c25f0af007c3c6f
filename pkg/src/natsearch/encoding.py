"""Integer genome schemes for the OFA-style MobileNetV3 search space.

A genome is the string ``[R, W, (X), L_1 .. L_20]``:

* ``R`` indexes the input resolution choices,
* ``W`` indexes the width multiplier choices,
* ``X`` (exit schemes only) is the 1-based index of the stage whose exit is used,
* ``L_i`` encodes level ``i``: 0 skips it, otherwise it packs kernel size,
  expansion ratio and, for parallel schemes, the branch activation mask.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

KERNELS = (3, 5, 7)
EXPANSIONS = (3, 4, 6)
N_KE = len(KERNELS) * len(EXPANSIONS)
MAX_BRANCH_MASK = 7

# bit positions of the branch mask
BRANCH_IRB = 1
BRANCH_POINTWISE = 2
BRANCH_NORMACT = 4

DEFAULT_RESOLUTIONS = (128, 160, 192, 224)
TINY_RESOLUTIONS = (48, 56, 64)
DEFAULT_WIDTHS = (Fraction(1), Fraction(6, 5))


class SchemeKind(str, enum.Enum):
    BASELINE = "Baseline"
    PARALLEL = "Parallel"
    EARLY_EXITS = "EarlyExits"
    EARLY_EXITS_PARALLEL = "EarlyExitsParallel"


class GeneDomainError(ValueError):
    """A gene value lies outside its domain."""

    def __init__(self, index: int, value: int, low: int, high: int):
        self.index = index
        self.value = value
        self.low = low
        self.high = high
        super().__init__(f"gene {index} = {value} outside domain {low}..{high}")


class SchemeMismatchError(ValueError):
    pass


class InvalidGenomeError(ValueError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class EncodingScheme:
    kind: SchemeKind = SchemeKind.EARLY_EXITS_PARALLEL
    resolution_choices: tuple[int, ...] = DEFAULT_RESOLUTIONS
    width_choices: tuple[Fraction, ...] = DEFAULT_WIDTHS
    n_stages: int = 5
    blocks_per_stage: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        object.__setattr__(self, "resolution_choices", tuple(int(r) for r in self.resolution_choices))
        object.__setattr__(self, "width_choices", tuple(Fraction(str(w)) for w in self.width_choices))
        for name in ("resolution_choices", "width_choices"):
            vals = getattr(self, name)
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any(v <= 0 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be positive and strictly increasing")
        if self.blocks_per_stage < 2 or self.n_stages < 1:
            raise ValueError("need n_stages >= 1 and blocks_per_stage >= 2")

    @property
    def parallel(self) -> bool:
        return self.kind in (SchemeKind.PARALLEL, SchemeKind.EARLY_EXITS_PARALLEL)

    @property
    def has_exits(self) -> bool:
        return self.kind in (SchemeKind.EARLY_EXITS, SchemeKind.EARLY_EXITS_PARALLEL)

    @property
    def n_exits(self) -> int:
        return self.n_stages if self.has_exits else 1

    @property
    def n_levels(self) -> int:
        return self.n_stages * self.blocks_per_stage

    @property
    def level_domain(self) -> int:
        """Number of distinct values a level gene can take (skip included)."""
        return 1 + N_KE * (MAX_BRANCH_MASK if self.parallel else 1)

    @property
    def length(self) -> int:
        return 2 + int(self.has_exits) + self.n_levels

    @property
    def level_offset(self) -> int:
        return 2 + int(self.has_exits)

    def gene_bounds(self) -> list[tuple[int, int]]:
        """Inclusive (low, high) for every gene position."""
        bounds = [(0, len(self.resolution_choices) - 1), (0, len(self.width_choices) - 1)]
        if self.has_exits:
            bounds.append((1, self.n_exits))
        bounds += [(0, self.level_domain - 1)] * self.n_levels
        return bounds

    def skippable(self, level: int) -> bool:
        """Whether level ``level`` (0-based over all levels) may be 0."""
        return level % self.blocks_per_stage >= 2


def make_scheme(kind: str | SchemeKind = "EarlyExitsParallel", preset: str = "default") -> EncodingScheme:
    """Build a scheme; ``preset="tiny"`` selects the 48/56/64 px resolutions."""
    presets = {"default": DEFAULT_RESOLUTIONS, "tiny": TINY_RESOLUTIONS}
    if preset not in presets:
        raise ValueError(f"unknown preset {preset!r}")
    return EncodingScheme(SchemeKind(kind), presets[preset])


ALL_KINDS = tuple(SchemeKind)


@dataclass(frozen=True)
class LevelConfig:
    kernel: int
    expansion: int
    branch_mask: int = 1

    @property
    def branches(self) -> tuple[str, ...]:
        names = []
        if self.branch_mask & BRANCH_IRB:
            names.append("irb")
        if self.branch_mask & BRANCH_POINTWISE:
            names.append("pointwise")
        if self.branch_mask & BRANCH_NORMACT:
            names.append("normact")
        return tuple(names)


def decode_level(gene: int, scheme: EncodingScheme, index: int | None = None) -> LevelConfig | None:
    """Decode one level gene; ``None`` means the level is skipped."""
    high = scheme.level_domain - 1
    if not 0 <= gene <= high:
        raise GeneDomainError(-1 if index is None else index, gene, 0, high)
    if gene == 0:
        return None
    v = gene - 1
    mask = v // N_KE + 1
    ke = v % N_KE
    return LevelConfig(KERNELS[ke // len(EXPANSIONS)], EXPANSIONS[ke % len(EXPANSIONS)], mask)


def encode_level(cfg: LevelConfig | None, scheme: EncodingScheme) -> int:
    if cfg is None:
        return 0
    if cfg.kernel not in KERNELS or cfg.expansion not in EXPANSIONS:
        raise ValueError(f"unsupported level config {cfg}")
    if not 1 <= cfg.branch_mask <= MAX_BRANCH_MASK:
        raise ValueError(f"branch mask {cfg.branch_mask} outside 1..{MAX_BRANCH_MASK}")
    if cfg.branch_mask != 1 and not scheme.parallel:
        raise SchemeMismatchError(f"branch mask {cfg.branch_mask} needs a parallel scheme, got {scheme.kind.value}")
    ke = KERNELS.index(cfg.kernel) * len(EXPANSIONS) + EXPANSIONS.index(cfg.expansion)
    return (cfg.branch_mask - 1) * N_KE + ke + 1


@dataclass(frozen=True)
class Violation:
    gene: int
    rule: str
    detail: str

    def __str__(self):
        return f"gene {self.gene}: {self.rule} ({self.detail})"


@dataclass(frozen=True)
class Genome:
    """Immutable genome. ``exit`` is ``None`` for schemes without early exits."""

    scheme: EncodingScheme
    r_idx: int
    w_idx: int
    exit: int | None
    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))

    @classmethod
    def from_genes(cls, scheme: EncodingScheme, genes: Sequence[int]) -> "Genome":
        genes = [int(g) for g in genes]
        if len(genes) != scheme.length:
            raise ValueError(f"expected {scheme.length} genes, got {len(genes)}")
        off = scheme.level_offset
        return cls(scheme, genes[0], genes[1], genes[2] if scheme.has_exits else None, tuple(genes[off:]))

    @property
    def genes(self) -> tuple[int, ...]:
        head = (self.r_idx, self.w_idx) + ((self.exit,) if self.scheme.has_exits else ())
        return head + self.levels

    @property
    def exit_stage(self) -> int:
        return self.exit if self.scheme.has_exits else self.scheme.n_stages

    @property
    def resolution(self) -> int:
        return self.scheme.resolution_choices[self.r_idx]

    @property
    def width(self) -> Fraction:
        return self.scheme.width_choices[self.w_idx]

    def stage_levels(self, stage: int) -> tuple[int, ...]:
        b = self.scheme.blocks_per_stage
        return self.levels[stage * b:(stage + 1) * b]

    def stage_depths(self) -> list[int]:
        return [sum(1 for v in self.stage_levels(s) if v) for s in range(self.scheme.n_stages)]

    def level_configs(self) -> list[LevelConfig | None]:
        off = self.scheme.level_offset
        return [decode_level(v, self.scheme, off + i) for i, v in enumerate(self.levels)]

    def replace(self, **changes) -> "Genome":
        data = dict(r_idx=self.r_idx, w_idx=self.w_idx, exit=self.exit, levels=self.levels)
        data.update(changes)
        return Genome(self.scheme, **data)

    # serialization

    def to_text(self) -> str:
        parts = [f"R:{self.r_idx}", f"W:{self.w_idx}"]
        if self.scheme.has_exits:
            parts.append(f"X:{self.exit}")
        parts.append("L:" + ",".join(str(v) for v in self.levels))
        return " ".join(parts)

    def to_dict(self) -> dict:
        d = {"R": self.r_idx, "W": self.w_idx}
        if self.scheme.has_exits:
            d["X"] = self.exit
        d["L"] = list(self.levels)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_text(cls, scheme: EncodingScheme, text: str) -> "Genome":
        fields_ = {}
        for token in text.split():
            key, _, value = token.partition(":")
            if key in fields_ or key not in ("R", "W", "X", "L") or not value:
                raise ValueError(f"malformed genome token {token!r}")
            fields_[key] = value
        return cls.from_dict(scheme, {
            k: [int(x) for x in v.split(",")] if k == "L" else int(v) for k, v in fields_.items()
        })

    @classmethod
    def from_dict(cls, scheme: EncodingScheme, data: dict) -> "Genome":
        expected = {"R", "W", "L"} | ({"X"} if scheme.has_exits else set())
        if set(data) != expected:
            raise ValueError(f"genome fields {sorted(data)} do not match scheme {scheme.kind.value}")
        levels = tuple(data["L"])
        if len(levels) != scheme.n_levels:
            raise ValueError(f"expected {scheme.n_levels} level genes, got {len(levels)}")
        return cls(scheme, int(data["R"]), int(data["W"]), data.get("X"), levels)

    @classmethod
    def from_json(cls, scheme: EncodingScheme, text: str) -> "Genome":
        return cls.from_dict(scheme, json.loads(text))

    def __str__(self):
        return self.to_text()


def validate(genome: Genome) -> list[Violation]:
    """Return every violated rule; an empty list means the genome is valid."""
    scheme = genome.scheme
    genes = genome.genes
    out = []
    if genome.scheme.has_exits != (genome.exit is not None):
        out.append(Violation(2, "exit", "exit gene presence does not match scheme"))
        return out
    if len(genome.levels) != scheme.n_levels:
        out.append(Violation(len(genes), "length", f"expected {scheme.length} genes"))
        return out
    for i, (g, (lo, hi)) in enumerate(zip(genes, scheme.gene_bounds())):
        if not lo <= g <= hi:
            out.append(Violation(i, "domain", f"{g} outside {lo}..{hi}"))
    off = scheme.level_offset
    b = scheme.blocks_per_stage
    for s in range(scheme.n_stages):
        lv = genome.stage_levels(s)
        for p in range(2):
            if lv[p] == 0:
                out.append(Violation(off + s * b + p, "min depth", f"stage {s + 1} position {p + 1} is skipped"))
        for p in range(3, b):
            if lv[p] != 0 and lv[p - 1] == 0:
                out.append(Violation(off + s * b + p, "hole", f"stage {s + 1} position {p + 1} follows a skipped level"))
    return out


def is_valid(genome: Genome) -> bool:
    return not validate(genome)


def ensure_valid(genome: Genome) -> Genome:
    problems = validate(genome)
    if problems:
        raise InvalidGenomeError(problems)
    return genome


FEATURE_MODES = ("integer", "onehot")


def feature_length(scheme: EncodingScheme, mode: str = "integer") -> int:
    if mode == "integer":
        return scheme.length
    if mode == "onehot":
        return sum(hi - lo + 1 for lo, hi in scheme.gene_bounds())
    raise ValueError(f"unknown feature mode {mode!r}")


def to_features(genome: Genome, mode: str = "integer") -> np.ndarray:
    ensure_valid(genome)
    return _features_unchecked(genome, mode)


def _features_unchecked(genome: Genome, mode: str) -> np.ndarray:
    genes = genome.genes
    if mode == "integer":
        return np.asarray(genes, dtype=float)
    if mode != "onehot":
        raise ValueError(f"unknown feature mode {mode!r}")
    vec = np.zeros(feature_length(genome.scheme, mode))
    pos = 0
    for g, (lo, hi) in zip(genes, genome.scheme.gene_bounds()):
        vec[pos + g - lo] = 1.0
        pos += hi - lo + 1
    return vec


def feature_matrix(genomes: Iterable[Genome], mode: str = "integer") -> np.ndarray:
    genomes = list(genomes)
    if not genomes:
        raise ValueError("no genomes")
    return np.stack([to_features(g, mode) for g in genomes])


def repair(genome: Genome, rng: np.random.Generator | None = None) -> Genome:
    """Clamp genes into their domain and fix depth rules.

    Skipped mandatory levels get a random non-zero value (or 1 without rng).
    Holes among the optional levels are closed by shifting the later levels
    forward, so the stage keeps its depth.
    """
    scheme = genome.scheme
    bounds = scheme.gene_bounds()
    genes = [min(max(g, lo), hi) for g, (lo, hi) in zip(genome.genes, bounds)]
    if scheme.has_exits and genome.exit is None:
        genes.insert(2, scheme.n_exits)
    off = scheme.level_offset
    b = scheme.blocks_per_stage
    for s in range(scheme.n_stages):
        base = off + s * b
        for p in range(2):
            if genes[base + p] == 0:
                genes[base + p] = int(rng.integers(1, scheme.level_domain)) if rng is not None else 1
        optional = [v for v in genes[base + 2:base + b] if v]
        genes[base + 2:base + b] = optional + [0] * (b - 2 - len(optional))
    return Genome.from_genes(scheme, genes)
