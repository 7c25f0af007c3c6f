"""Run configuration: dataclasses plus a strict TOML loader (unknown keys are fatal)."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import tomli

from .arch import MacroSpec
from .archive import ObjectiveMode
from .encoding import EncodingScheme, SchemeKind, make_scheme
from .predictors import PredictorKind


class ConfigError(ValueError):
    pass


@dataclass
class MoeaConfig:
    pop_size: int = 100
    generations: int = 60
    partitions: int = 99
    crossover_prob: float = 0.5
    mutation_prob: float = 0.0  # 0 means 1 / genome length


@dataclass
class OracleConfig:
    seed: int = -1  # -1 reuses the run seed
    a0: float = 30.0
    a1: float = 45.0
    a2: float = 10.0
    a3: float = 5.0
    noise: float = 1.0


@dataclass
class MacroConfig:
    stem_channels: int = 16
    stem_stride: int = 2
    stage_widths: list = field(default_factory=lambda: [24, 40, 80, 112, 160])
    stage_strides: list = field(default_factory=lambda: [2, 2, 2, 1, 2])
    head_channels: int = 960
    feature_channels: int = 1280
    n_classes: int = 10
    channel_round: int = 8
    count_bias: bool = False
    count_norm_params: bool = True

    def build(self) -> MacroSpec:
        return MacroSpec(**dataclasses.asdict(self))


@dataclass
class RunConfig:
    seed: int = 0
    scheme: str = "EarlyExitsParallel"
    resolution_preset: str = "default"
    resolutions: list = field(default_factory=list)  # overrides the preset when non-empty
    widths: list = field(default_factory=lambda: ["1.0", "1.2"])
    objective: str = "AccParams"
    archive_size: int = 300
    oversample: int = 10
    iterations: int = 15
    n_eval: int = 24
    predictor: str = "GradientBoostedTrees"
    folds: int = 10
    knee_threshold: float = 1.0
    evaluator: str = "synthetic"
    external_command: str = ""
    jobs: int = 1
    macro: MacroConfig = field(default_factory=MacroConfig)
    moea: MoeaConfig = field(default_factory=MoeaConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        try:
            SchemeKind(self.scheme)
            ObjectiveMode(self.objective)
            PredictorKind(self.predictor)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.evaluator not in ("synthetic", "external-command"):
            raise ConfigError(f"evaluator must be synthetic or external-command, got {self.evaluator!r}")
        if self.evaluator == "external-command" and not self.external_command:
            raise ConfigError("external-command evaluator needs external_command")
        if self.archive_size < 3:
            raise ConfigError("archive_size must be at least 3")
        if self.oversample < 1 or self.iterations < 0 or self.n_eval < 1 or self.jobs < 1:
            raise ConfigError("oversample, n_eval and jobs must be positive; iterations non-negative")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")

    def build_scheme(self) -> EncodingScheme:
        try:
            if self.resolutions:
                return EncodingScheme(SchemeKind(self.scheme), tuple(self.resolutions),
                                      tuple(Fraction(str(w)) for w in self.widths))
            base = make_scheme(self.scheme, self.resolution_preset)
            return EncodingScheme(base.kind, base.resolution_choices,
                                  tuple(Fraction(str(w)) for w in self.widths))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_macro(self) -> MacroSpec:
        try:
            return self.macro.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_NESTED = {"macro": MacroConfig, "moea": MoeaConfig, "oracle": OracleConfig}


def _strict(cls, data: dict, where: str) -> Any:
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED and cls is RunConfig:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[key] = _strict(_NESTED[key], value, f"[{key}]")
        else:
            default = getattr(cls(), key)
            kwargs[key] = _coerce(value, default, f"{where}.{key}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _coerce(value, default, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{where} must be a string")
    return value


def config_from_dict(data: dict) -> RunConfig:
    return _strict(RunConfig, data, "config")


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            data = tomli.loads(Path(path).read_text())
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return config_from_dict(data)
