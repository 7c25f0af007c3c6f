"""The surrogate-assisted search loop and the post-processing protocol."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .arch import genome_cost, maximal_genome
from .archive import (
    FORMAT_VERSION,
    Archive,
    ObjectiveMode,
    evaluate_genomes,
    front_csv,
    high_tradeoff,
    initialize,
)
from .config import RunConfig
from .encoding import feature_matrix
from .evaluator import ExternalCommandEvaluator, SyntheticOracle
from .moea import Operators, SearchProblem, evolve, stats_csv
from .predictors import fit_cv


class PipelineError(RuntimeError):
    def __init__(self, iteration: int, cause: Exception, partial: Path | None = None):
        self.iteration = iteration
        self.partial = partial
        where = f"; partial archive saved to {partial}" if partial else ""
        super().__init__(f"iteration {iteration} failed: {cause}{where}")


def build_evaluator(cfg: RunConfig, scheme=None, macro=None):
    scheme = scheme or cfg.build_scheme()
    macro = macro or cfg.build_macro()
    if cfg.evaluator == "external-command":
        return ExternalCommandEvaluator(scheme, cfg.external_command)
    o = cfg.oracle
    return SyntheticOracle(scheme, macro, seed=cfg.seed if o.seed < 0 else o.seed,
                           a0=o.a0, a1=o.a1, a2=o.a2, a3=o.a3, noise=o.noise)


@dataclass
class RunResult:
    archive: Archive
    initial_archive: Archive
    nondominated: list
    high_tradeoff: list
    report: dict
    evaluations: int
    generation_stats: list = field(default_factory=list)


def _front_rows(members):
    return [m.to_dict() for m in members]


def run(cfg: RunConfig, evaluator=None, archive: Archive | None = None, out_dir: str | Path | None = None,
        adapt_hook: Callable[[Archive, int], None] | None = None) -> RunResult:
    """Initialize (or resume) the archive, then alternate predictor fit, search and replacement.

    ``adapt_hook(archive, iteration)`` runs where super-network adaptation
    would happen; by default it does nothing.
    """
    scheme = cfg.build_scheme()
    macro = cfg.build_macro()
    mode = ObjectiveMode(cfg.objective)
    evaluator = evaluator if evaluator is not None else build_evaluator(cfg, scheme, macro)
    out = Path(out_dir) if out_dir else None
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.iterations + 1)
    evals = 0
    if archive is None:
        archive, evals = initialize(scheme, macro, evaluator, cfg.archive_size, cfg.oversample,
                                    np.random.default_rng(streams[0]), mode, cfg.jobs)
    initial = archive
    # the maximal network bounds every cost, so this reference point never moves
    key = 1 if mode is ObjectiveMode.ACC_MACS else 0
    ref_cost = 2.0 * genome_cost(maximal_genome(scheme), macro)[key]
    ops = Operators(cfg.moea.crossover_prob, cfg.moea.mutation_prob or None)
    report = {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "operators": ops.describe(),
        "hv_reference": {"accuracy": 0.0, "cost": ref_cost},
        "initial": {"evaluations": evals, "hv": initial.hypervolume(ref_cost)},
        "iterations": [],
    }
    gen_stats = []
    for it in range(1, cfg.iterations + 1):
        rng = np.random.default_rng(streams[it])
        try:
            members = archive.members
            X = feature_matrix([m.genome for m in members], "integer")
            y = np.array([m.accuracy for m in members])
            model = fit_cv(cfg.predictor, X, y, cfg.folds, rng)
            if adapt_hook is not None:
                adapt_hook(archive, it)
            problem = SearchProblem(scheme, macro, mode, model.predict)
            pop = evolve(problem, cfg.moea.pop_size, cfg.moea.generations, rng,
                         initial=[m.genome for m in members], operators=ops,
                         partitions=cfg.moea.partitions)
            chosen = _pick_candidates(pop, archive, cfg.n_eval, ops, rng)
            newcomers = evaluate_genomes(chosen, evaluator, macro, cfg.jobs)
            evals += len(newcomers)
            archive = archive.replace_weakest(newcomers)
        except Exception as exc:
            partial = None
            if out is not None:
                out.mkdir(parents=True, exist_ok=True)
                partial = out / "archive.partial.jsonl"
                archive.save(partial)
            raise PipelineError(it, exc, partial) from exc
        gen_stats += [dict(h, iteration=it) for h in pop.history]
        report["iterations"].append({
            "iteration": it,
            "cv_rho": model.cv_rho,
            "rho_std": model.rho_std,
            "degenerate_rho": model.degenerate,
            "fit_seconds": model.fit_time,
            "hv": archive.hypervolume(ref_cost),
            "evals": len(newcomers),
            "archive_size": len(archive),
        })
    front = archive.nondominated()
    knees = high_tradeoff(front, mode, cfg.knee_threshold) if mode is not ObjectiveMode.ACC_ONLY else []
    report["final"] = {
        "evaluations": evals,
        "hv": archive.hypervolume(ref_cost),
        "nondominated": _front_rows(front),
        "high_tradeoff": _front_rows(knees),
    }
    result = RunResult(archive, initial, front, knees, report, evals, gen_stats)
    if out is not None:
        write_outputs(result, out)
    return result


def _pick_candidates(pop, archive: Archive, n_eval: int, ops: Operators, rng) -> list:
    """Best ``n_eval`` unseen genomes by (front rank, predicted accuracy)."""
    known = archive.genomes()
    ranks = pop.front_ranks()
    order = sorted(range(len(pop.genomes)),
                   key=lambda i: (ranks[i], -pop.pred_acc[i], pop.genomes[i].genes))
    chosen = []
    for i in order:
        g = pop.genomes[i]
        if g not in known:
            known.add(g)
            chosen.append(g)
        if len(chosen) == n_eval:
            return chosen
    # population exhausted: top up with mutants of its best members
    i = 0
    while len(chosen) < n_eval:
        g = ops.mutate(pop.genomes[order[i % len(order)]], rng, force=True)
        i += 1
        if g not in known:
            known.add(g)
            chosen.append(g)
    return chosen


def write_outputs(result: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    result.archive.save(out / "archive.jsonl")
    (out / "front.csv").write_text(front_csv(result.nondominated))
    (out / "high_tradeoff.csv").write_text(front_csv(result.high_tradeoff))
    (out / "generations.csv").write_text(stats_csv(result.generation_stats))
    (out / "report.json").write_text(json.dumps(result.report, indent=2) + "\n")


# post-processing


@dataclass
class PostProcessResult:
    e: int
    score: float
    phase1_epochs: int
    best_validation: float
    validation_curve: list


def postprocess(subnet, trainer, max_epochs: int = 150, patience: int = 30,
                exit_weights=None) -> PostProcessResult:
    """Two-phase fine-tuning.

    Phase 1 trains on the training split, tracking the validation score, until
    ``max_epochs`` or ``patience`` epochs without improvement; ``e`` is the best
    epoch (0 if training never helped). Phase 2 restarts from the same weights,
    trains on train+val for exactly ``e`` epochs and reports the test score.
    ``exit_weights`` switches the trainer to joint multi-exit fine-tuning.
    """
    if max_epochs < 0 or patience < 1:
        raise ValueError("need max_epochs >= 0 and patience >= 1")
    if exit_weights is not None:
        if not hasattr(trainer, "set_exit_weights"):
            raise TypeError("trainer does not support multi-exit fine-tuning")
        trainer.set_exit_weights(list(exit_weights))
    start = trainer.snapshot()
    best = trainer.validation_score()
    curve = [best]
    e = 0
    epoch = 0
    while epoch < max_epochs:
        epoch += 1
        trainer.train_epoch("train")
        score = trainer.validation_score()
        curve.append(score)
        if score > best:
            best, e = score, epoch
        elif epoch - e >= patience:
            break
    trainer.restore(start)
    for _ in range(e):
        trainer.train_epoch("train+val")
    return PostProcessResult(e, trainer.test_score(), epoch, best, curve)


class AEPStrategy(str, enum.Enum):
    UNIFORM = "Uniform"
    DESC = "Desc"
    ASC = "Asc"
    GROW = "Grow"


def aep_weights(n_exits: int, strategy: AEPStrategy | str = AEPStrategy.UNIFORM) -> np.ndarray:
    """Exit weights summing to one; index 0 is the earliest exit."""
    if n_exits < 1:
        raise ValueError("need at least one exit")
    strategy = AEPStrategy(strategy)
    k = np.arange(1, n_exits + 1, dtype=float)
    raw = {
        AEPStrategy.UNIFORM: np.ones(n_exits),
        AEPStrategy.DESC: k[::-1],
        AEPStrategy.ASC: k,
        AEPStrategy.GROW: 2.0 ** (k - 1),
    }[strategy]
    return raw / raw.sum()
