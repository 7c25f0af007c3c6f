"""Surrogate-assisted multi-objective architecture search over a MobileNetV3-style space."""
from .arch import Architecture, CostReport, MacroSpec, cost, decode, genome_cost
from .archive import Archive, Evaluated, ObjectiveMode, high_tradeoff, initialize, nondominated
from .config import ConfigError, RunConfig, load_config
from .encoding import EncodingScheme, Genome, SchemeKind, make_scheme, repair, validate
from .evaluator import SyntheticOracle
from .pipeline import postprocess, run

__version__ = "0.1.0"
