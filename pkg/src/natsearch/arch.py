"""Decoding genomes into MobileNetV3-style architectures and counting their cost.

The default macro-architecture mirrors the MobileNetV3 family: a strided 3x3
stem, five stages of up to four levels each and a 1x1-conv / pooled / two-linear
classifier head. Early exits are a global-average-pool plus one linear layer.

Two accounting routes exist on purpose: :func:`cost` sums closed-form per-level
costs, while :meth:`Architecture.layers` lists every primitive layer so the
totals can be cross-checked by walking that list.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .encoding import (
    EXPANSIONS,
    KERNELS,
    MAX_BRANCH_MASK,
    EncodingScheme,
    Genome,
    LevelConfig,
    ensure_valid,
)

MAXPOOL_KERNEL = 3


@dataclass(frozen=True)
class MacroSpec:
    stem_channels: int = 16
    stem_stride: int = 2
    stage_widths: tuple[int, ...] = (24, 40, 80, 112, 160)
    stage_strides: tuple[int, ...] = (2, 2, 2, 1, 2)
    head_channels: int = 960
    feature_channels: int = 1280
    n_classes: int = 10
    channel_round: int = 8
    count_bias: bool = False
    count_norm_params: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stage_widths", tuple(self.stage_widths))
        object.__setattr__(self, "stage_strides", tuple(self.stage_strides))
        if len(self.stage_widths) != len(self.stage_strides):
            raise ValueError("stage_widths and stage_strides differ in length")
        channels = (self.stem_channels, self.head_channels, self.feature_channels, self.n_classes,
                    self.channel_round, *self.stage_widths)
        if any(c <= 0 for c in channels):
            raise ValueError("all channel counts must be positive")
        if any(s not in (1, 2) for s in (self.stem_stride, *self.stage_strides)):
            raise ValueError("strides must be 1 or 2")

    @property
    def n_stages(self) -> int:
        return len(self.stage_widths)


def round_channels(c: int | Fraction, multiple: int) -> int:
    """Round up to a positive multiple of ``multiple``."""
    return max(multiple, math.ceil(Fraction(c) / multiple) * multiple)


def conv_out(size: int, stride: int) -> int:
    return -(-size // stride)


@dataclass(frozen=True)
class Level:
    stage: int
    position: int
    in_ch: int
    out_ch: int
    mid_ch: int
    kernel: int
    expansion: int
    stride: int
    in_size: int
    out_size: int
    branch_mask: int
    residual: bool

    @property
    def branches(self) -> tuple[str, ...]:
        return LevelConfig(self.kernel, self.expansion, self.branch_mask).branches

    @property
    def variant(self) -> str:
        return "IRB" if self.residual else "IB"


@dataclass(frozen=True)
class Head:
    """Classifier after ``stage`` (1-based). ``final`` heads carry the 1x1 expansion and feature layer."""

    stage: int
    in_ch: int
    in_size: int
    final: bool
    head_ch: int = 0
    feature_ch: int = 0
    n_classes: int = 10


@dataclass(frozen=True)
class Layer:
    kind: str  # conv | bn | linear | maxpool | gap
    section: str  # stem | stage<k> | head | exit<k>
    cin: int
    cout: int
    kernel: int = 1
    stride: int = 1
    groups: int = 1
    out_size: int = 1
    bias: bool = False


@dataclass(frozen=True)
class Architecture:
    resolution: int
    width_mult: Fraction
    stem_ch: int
    stem_size: int
    stages: tuple[tuple[Level, ...], ...]
    exit_stage: int
    head: Head
    macro: MacroSpec
    extra_heads: tuple[Head, ...] = ()

    def layers(self) -> list[Layer]:
        """Flat list of every primitive layer, in forward order."""
        m = self.macro
        out = [Layer("conv", "stem", 3, self.stem_ch, 3, m.stem_stride, 1, self.stem_size, m.count_bias),
               Layer("bn", "stem", self.stem_ch, self.stem_ch, out_size=self.stem_size)]
        for levels in self.stages:
            for lv in levels:
                out += _level_layers(lv, m)
        for h in (*self.extra_heads, self.head):
            out += _head_layers(h)
        return out


def _level_layers(lv: Level, m: MacroSpec) -> list[Layer]:
    sec = f"stage{lv.stage}"
    bias = m.count_bias
    layers = []
    if lv.branch_mask & 1:
        layers += [
            Layer("conv", sec, lv.in_ch, lv.mid_ch, 1, 1, 1, lv.in_size, bias),
            Layer("bn", sec, lv.mid_ch, lv.mid_ch, out_size=lv.in_size),
            Layer("conv", sec, lv.mid_ch, lv.mid_ch, lv.kernel, lv.stride, lv.mid_ch, lv.out_size, bias),
            Layer("bn", sec, lv.mid_ch, lv.mid_ch, out_size=lv.out_size),
            Layer("conv", sec, lv.mid_ch, lv.out_ch, 1, 1, 1, lv.out_size, bias),
            Layer("bn", sec, lv.out_ch, lv.out_ch, out_size=lv.out_size),
        ]
    if lv.branch_mask & 2:
        layers += [
            Layer("conv", sec, lv.in_ch, lv.out_ch, 1, lv.stride, 1, lv.out_size, bias),
            Layer("bn", sec, lv.out_ch, lv.out_ch, out_size=lv.out_size),
        ]
    if lv.branch_mask & 4:
        if lv.stride > 1:
            layers.append(Layer("maxpool", sec, lv.in_ch, lv.in_ch, MAXPOOL_KERNEL, lv.stride, lv.in_ch, lv.out_size))
        if lv.in_ch != lv.out_ch:
            layers.append(Layer("conv", sec, lv.in_ch, lv.out_ch, 1, 1, 1, lv.out_size, bias))
        layers.append(Layer("bn", sec, lv.out_ch, lv.out_ch, out_size=lv.out_size))
    return layers


def _head_layers(h: Head) -> list[Layer]:
    if not h.final:
        sec = f"exit{h.stage}"
        return [Layer("gap", sec, h.in_ch, h.in_ch, h.in_size, h.in_size, h.in_ch, 1),
                Layer("linear", sec, h.in_ch, h.n_classes, bias=True)]
    return [
        Layer("conv", "head", h.in_ch, h.head_ch, 1, 1, 1, h.in_size),
        Layer("bn", "head", h.head_ch, h.head_ch, out_size=h.in_size),
        Layer("gap", "head", h.head_ch, h.head_ch, h.in_size, h.in_size, h.head_ch, 1),
        Layer("linear", "head", h.head_ch, h.feature_ch, bias=True),
        Layer("linear", "head", h.feature_ch, h.n_classes, bias=True),
    ]


def decode(genome: Genome, macro: MacroSpec | None = None, aep_exits: bool = False) -> Architecture:
    """Build the architecture selected by ``genome``.

    With ``aep_exits`` the exits of all stages before the selected one are
    re-attached, as done when the exits are fine-tuned jointly.
    """
    macro = macro or MacroSpec()
    ensure_valid(genome)
    scheme = genome.scheme
    if scheme.n_stages != macro.n_stages:
        raise ValueError(f"scheme has {scheme.n_stages} stages but macro spec has {macro.n_stages}")
    w = genome.width
    rc = macro.channel_round
    size = conv_out(genome.resolution, macro.stem_stride)
    stem_ch = round_channels(macro.stem_channels * w, rc)
    in_ch = stem_ch
    stages = []
    extra = []
    configs = genome.level_configs()
    b = scheme.blocks_per_stage
    for s in range(genome.exit_stage):
        out_ch = round_channels(macro.stage_widths[s] * w, rc)
        levels = []
        for p, cfg in enumerate(configs[s * b:(s + 1) * b]):
            if cfg is None:
                continue
            stride = macro.stage_strides[s] if p == 0 else 1
            out_size = conv_out(size, stride)
            levels.append(Level(
                stage=s + 1, position=p + 1, in_ch=in_ch, out_ch=out_ch,
                mid_ch=round_channels(in_ch * cfg.expansion, rc),
                kernel=cfg.kernel, expansion=cfg.expansion, stride=stride,
                in_size=size, out_size=out_size, branch_mask=cfg.branch_mask,
                residual=stride == 1 and in_ch == out_ch,
            ))
            in_ch, size = out_ch, out_size
        stages.append(tuple(levels))
        if aep_exits and s + 1 < genome.exit_stage:
            extra.append(Head(s + 1, in_ch, size, False, n_classes=macro.n_classes))
    if genome.exit_stage == scheme.n_stages:
        head = Head(genome.exit_stage, in_ch, size, True,
                    round_channels(macro.head_channels * w, rc),
                    round_channels(macro.feature_channels * w, rc), macro.n_classes)
    else:
        head = Head(genome.exit_stage, in_ch, size, False, n_classes=macro.n_classes)
    return Architecture(genome.resolution, w, stem_ch, conv_out(genome.resolution, macro.stem_stride),
                        tuple(stages), genome.exit_stage, head, macro, tuple(extra))


# closed-form accounting


def _conv(cin, cout, k, groups, out_size, bias):
    p = k * k * cin * cout // groups
    return p + (cout if bias else 0), p * out_size * out_size


def _bn(c, size, count_params):
    return (2 * c if count_params else 0), 2 * c * size * size


def level_cost(lv: Level, m: MacroSpec) -> tuple[int, int]:
    params = macs = 0

    def add(pm):
        nonlocal params, macs
        params += pm[0]
        macs += pm[1]

    bias, cnp = m.count_bias, m.count_norm_params
    if lv.branch_mask & 1:
        add(_conv(lv.in_ch, lv.mid_ch, 1, 1, lv.in_size, bias))
        add(_bn(lv.mid_ch, lv.in_size, cnp))
        add(_conv(lv.mid_ch, lv.mid_ch, lv.kernel, lv.mid_ch, lv.out_size, bias))
        add(_bn(lv.mid_ch, lv.out_size, cnp))
        add(_conv(lv.mid_ch, lv.out_ch, 1, 1, lv.out_size, bias))
        add(_bn(lv.out_ch, lv.out_size, cnp))
    if lv.branch_mask & 2:
        add(_conv(lv.in_ch, lv.out_ch, 1, 1, lv.out_size, bias))
        add(_bn(lv.out_ch, lv.out_size, cnp))
    if lv.branch_mask & 4:
        if lv.stride > 1:
            macs += MAXPOOL_KERNEL ** 2 * lv.in_ch * lv.out_size ** 2
        if lv.in_ch != lv.out_ch:
            add(_conv(lv.in_ch, lv.out_ch, 1, 1, lv.out_size, bias))
        add(_bn(lv.out_ch, lv.out_size, cnp))
    return params, macs


def head_cost(h: Head, m: MacroSpec) -> tuple[int, int]:
    if not h.final:
        return h.in_ch * h.n_classes + h.n_classes, h.in_ch * h.in_size ** 2 + h.in_ch * h.n_classes
    p_conv, m_conv = _conv(h.in_ch, h.head_ch, 1, 1, h.in_size, False)
    p_bn, m_bn = _bn(h.head_ch, h.in_size, m.count_norm_params)
    lin1 = h.head_ch * h.feature_ch
    lin2 = h.feature_ch * h.n_classes
    params = p_conv + p_bn + lin1 + h.feature_ch + lin2 + h.n_classes
    macs = m_conv + m_bn + h.head_ch * h.in_size ** 2 + lin1 + lin2
    return params, macs


@dataclass(frozen=True)
class CostReport:
    params: int
    macs: int
    stem: tuple[int, int]
    per_stage: tuple[tuple[int, int], ...]
    exit_head: tuple[int, int]
    extra_heads: tuple[tuple[int, int], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "macs": self.macs,
            "stem": {"params": self.stem[0], "macs": self.stem[1]},
            "per_stage": [{"params": p, "macs": m} for p, m in self.per_stage],
            "exit_head": {"params": self.exit_head[0], "macs": self.exit_head[1]},
            "extra_heads": [{"params": p, "macs": m} for p, m in self.extra_heads],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def cost(arch: Architecture) -> CostReport:
    m = arch.macro
    stem_p, stem_m = _conv(3, arch.stem_ch, 3, 1, arch.stem_size, m.count_bias)
    bn_p, bn_m = _bn(arch.stem_ch, arch.stem_size, m.count_norm_params)
    stem = (stem_p + bn_p, stem_m + bn_m)
    per_stage = []
    for levels in arch.stages:
        costs = [level_cost(lv, m) for lv in levels]
        per_stage.append((sum(c[0] for c in costs), sum(c[1] for c in costs)))
    head = head_cost(arch.head, m)
    extra = tuple(head_cost(h, m) for h in arch.extra_heads)
    parts = [stem, *per_stage, head, *extra]
    return CostReport(sum(p for p, _ in parts), sum(x for _, x in parts), stem, tuple(per_stage), head, extra)


@lru_cache(maxsize=200_000)
def _cached_cost(genome: Genome, macro: MacroSpec) -> tuple[int, int]:
    rep = cost(decode(genome, macro))
    return rep.params, rep.macs


def genome_cost(genome: Genome, macro: MacroSpec | None = None) -> tuple[int, int]:
    """(params, macs) for a genome, memoized."""
    return _cached_cost(genome, macro or MacroSpec())


def maximal_genome(scheme: EncodingScheme) -> Genome:
    levels = (scheme.level_domain - 1,) * scheme.n_levels
    return Genome(scheme, len(scheme.resolution_choices) - 1, len(scheme.width_choices) - 1,
                  scheme.n_exits if scheme.has_exits else None, levels)


def minimal_genome(scheme: EncodingScheme) -> Genome:
    b = scheme.blocks_per_stage
    levels = tuple(1 if i % b < 2 else 0 for i in range(scheme.n_levels))
    return Genome(scheme, 0, 0, 1 if scheme.has_exits else None, levels)


def format_architecture(arch: Architecture) -> str:
    lines = [f"input {arch.resolution}x{arch.resolution}, width x{float(arch.width_mult):g}",
             f"stem conv3x3/{arch.macro.stem_stride} 3->{arch.stem_ch} @ {arch.stem_size}"]
    for levels in arch.stages:
        for lv in levels:
            lines.append(
                f"s{lv.stage}.{lv.position} {lv.variant} k{lv.kernel} e{lv.expansion} "
                f"{lv.in_ch}->{lv.out_ch} /{lv.stride} @ {lv.out_size} [{'+'.join(lv.branches)}]"
            )
    for h in arch.extra_heads:
        lines.append(f"aux exit{h.stage} gap+linear {h.in_ch}->{h.n_classes}")
    h = arch.head
    if h.final:
        lines.append(f"head conv1x1 {h.in_ch}->{h.head_ch}, gap, linear {h.head_ch}->{h.feature_ch}->{h.n_classes}")
    else:
        lines.append(f"exit{h.stage} gap+linear {h.in_ch}->{h.n_classes}")
    return "\n".join(lines)


__all__ = [
    "Architecture", "CostReport", "Head", "KERNELS", "EXPANSIONS", "Layer", "Level", "MacroSpec",
    "MAX_BRANCH_MASK", "conv_out", "cost", "decode", "format_architecture", "genome_cost",
    "maximal_genome", "minimal_genome", "round_channels",
]
