"""Acceptance criteria 1 to 10, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary and echoed
to stdout) before asserting, so a red criterion still reports its numbers.
"""
import csv
import io
import time

import numpy as np
import pytest

from natsearch.arch import MacroSpec, genome_cost, maximal_genome, minimal_genome
from natsearch.archive import Evaluated, ObjectiveMode, initialize, nondominated
from natsearch.cli import main
from natsearch.config import RunConfig
from natsearch.encoding import SchemeKind, make_scheme
from natsearch.evaluator import CurveTrainer, SyntheticOracle, synthetic_trainer
from natsearch.pareto import hypervolume2, nds
from natsearch.pipeline import postprocess, run
from natsearch.predictors import ALL_KINDS, benchmark, warmup
from natsearch.sampling import sample_depth_uniform

import conftest
from oracles import brute_fronts, grid_hypervolume, oracle_cost, perturbations

S = make_scheme("EarlyExitsParallel")
MACRO = MacroSpec()


def verdict(number, ok, detail):
    conftest.ACCEPTANCE.append((number, bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


class Counting:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def evaluate(self, g):
        self.calls += 1
        return self.inner.evaluate(g)

    def evaluate_batch(self, gs, jobs=1):
        self.calls += len(gs)
        return self.inner.evaluate_batch(gs, jobs)


@pytest.fixture(scope="module")
def oracle():
    return SyntheticOracle(S, MACRO, seed=0, noise=1.0)


@pytest.fixture(scope="module")
def roster_300(oracle):
    warmup()
    t0 = time.perf_counter()
    rows = benchmark(ALL_KINDS, S, oracle, [300], ["integer"], np.random.default_rng(1))
    return rows, time.perf_counter() - t0


def test_criterion_01_tree_ensembles_rank_correlation(roster_300):
    rows, seconds = roster_300
    rho = {r.kind: r.rho_mean for r in rows}
    ok = rho["GradientBoostedTrees"] >= 0.85 and rho["RandomForestE2EPP"] >= 0.85 and seconds < 120
    verdict(1, ok, f"GBT rho={rho['GradientBoostedTrees']:.3f} RF rho={rho['RandomForestE2EPP']:.3f} "
                   f"(need >= 0.85); roster {seconds:.1f}s (need < 120s)")


def test_criterion_02_integer_vs_onehot(oracle):
    sizes = [50, 100, 200, 300]
    rows = benchmark(ALL_KINDS, S, oracle, sizes, ["integer", "onehot"], np.random.default_rng(2), repeats=3)
    mean = {(s, e): np.mean([r.rho_mean for r in rows if r.size == s and r.encoding == e])
            for s in sizes for e in ("integer", "onehot")}
    enc_ok = all(mean[s, "integer"] >= mean[s, "onehot"] - 0.02 for s in sizes)
    grow_ok = all(mean[b, e] >= mean[a, e] - 0.03 for e in ("integer", "onehot")
                  for a, b in zip(sizes, sizes[1:]))
    table = " ".join(f"{s}:{mean[s, 'integer']:.3f}/{mean[s, 'onehot']:.3f}" for s in sizes)
    verdict(2, enc_ok and grow_ok, f"roster-mean rho integer/onehot by size {table}")


def test_criterion_03_fit_time_ordering(roster_300):
    rows, _ = roster_300
    t = {r.kind: r.fit_seconds for r in rows}
    ok = t["Ridge"] * 5 <= t["GradientBoostedTrees"] and t["CART"] * 5 <= t["GradientBoostedTrees"]
    verdict(3, ok, f"fit seconds per 10-fold CV: Ridge {t['Ridge']:.4f} CART {t['CART']:.4f} "
                   f"GBT {t['GradientBoostedTrees']:.4f}")


def test_criterion_04_archive_protocol(oracle):
    counter = Counting(oracle)
    arch, n = initialize(S, MACRO, counter, 300, 10, np.random.default_rng(0))
    init_ok = (n == counter.calls == 3000 and len(arch) == 300
               and {maximal_genome(S), minimal_genome(S)} <= arch.genomes())
    counter2 = Counting(oracle)
    res = run(RunConfig(seed=4, iterations=15), evaluator=counter2)
    sizes = [it["archive_size"] for it in res.report["iterations"]]
    loop_ok = sizes == [300] * 15 and counter2.calls == 3000 + 15 * 24
    verdict(4, init_ok and loop_ok, f"init evals={n} archive={len(arch)}; run evals={counter2.calls} "
                                    f"(expect 3360), sizes over 15 iterations={sorted(set(sizes))}")


def test_criterion_05_cost_oracle_and_monotonicity():
    mismatches = 0
    count = 0
    rng = np.random.default_rng(5)
    for kind in SchemeKind:
        s = make_scheme(kind)
        for _ in range(60):
            g = sample_depth_uniform(s, rng)
            mismatches += genome_cost(g, MACRO) != oracle_cost(g, MACRO)
            count += 1
    checked = violations = 0
    schemes = [make_scheme(k) for k in SchemeKind]
    while checked < 1000:
        g = sample_depth_uniform(schemes[checked % 4], rng)
        p0, m0 = genome_cost(g, MACRO)
        for _, h, params_move in perturbations(g, rng):
            p1, m1 = genome_cost(h, MACRO)
            violations += m1 < m0 or (params_move and p1 < p0) or (not params_move and p1 != p0)
            checked += 1
    verdict(5, mismatches == 0 and violations == 0,
            f"{mismatches}/{count} oracle mismatches; {violations}/{checked} monotonicity violations")


def test_criterion_06_dominance_machinery():
    rng = np.random.default_rng(6)
    bad_nds = bad_nd = 0
    for _ in range(100):
        n = int(rng.integers(2, 80))
        pts = rng.integers(0, 10, size=(n, 2))
        bad_nds += [sorted(f) for f in nds(pts)] != brute_fronts(pts)
        ms = [Evaluated(sample_depth_uniform(S, rng), float(100 - a), int(c) + 1, 1) for a, c in pts]
        got = {id(m) for m in nondominated(ms, ObjectiveMode.ACC_PARAMS)}
        want = {id(ms[i]) for i in brute_fronts([m.objectives("AccParams") for m in ms])[0]}
        bad_nd += got != want
    worst = 0.0
    for _ in range(20):
        pts = rng.integers(0, 64, size=(int(rng.integers(1, 20)), 2)) / 8.0
        worst = max(worst, abs(hypervolume2(pts, (8.0, 8.0)) - grid_hypervolume(pts, (8.0, 8.0), cell=0.125)))
    verdict(6, bad_nds == 0 and bad_nd == 0 and worst < 1e-9,
            f"nds mismatches {bad_nds}/100, nondominated mismatches {bad_nd}/100, max |hv error| {worst:.1e}")


def test_criterion_07_end_to_end_search():
    ge = gt = 0
    slowest = 0.0
    details = []
    for seed in range(5):
        t0 = time.perf_counter()
        res = run(RunConfig(seed=seed, iterations=10))
        slowest = max(slowest, time.perf_counter() - t0)
        hv0 = res.report["initial"]["hv"]
        hv1 = res.report["final"]["hv"]
        ge += hv1 >= hv0
        gt += hv1 > hv0
        details.append(f"{hv1 / hv0 - 1:+.2%}")
    verdict(7, ge == 5 and gt >= 4 and slowest < 300,
            f"HV >= initial {ge}/5, > initial {gt}/5 (gains {', '.join(details)}); slowest run {slowest:.0f}s")


def test_criterion_08_postprocess_protocol():
    checks = []
    tr = synthetic_trainer(0, peak=40)
    r = postprocess(None, tr, 150, 30)
    checks.append(r.e == 40 and r.phase1_epochs == 70 and tr.history.count("train+val") == 40)
    r = postprocess(None, CurveTrainer([80.0 - t for t in range(151)]), 150, 30)
    checks.append(r.e == 0 and r.phase1_epochs == 30 and r.score == 80.0)
    r = postprocess(None, CurveTrainer([50.0 + min(t, 5) for t in range(151)]), 150, 30)
    checks.append(r.e == 5 and r.phase1_epochs == 35)
    r = postprocess(None, CurveTrainer([float(t) for t in range(151)]), 150, 30)
    checks.append(r.e == 150 and r.phase1_epochs == 150)
    for seed in range(20):
        tr = synthetic_trainer(seed)
        r = postprocess(None, tr, 150, 30)
        checks.append(r.e == int(np.argmax(tr.curve)) and tr.history.count("train+val") == r.e)
    verdict(8, all(checks), f"{sum(checks)}/{len(checks)} constructed curves give the exact e and stop epoch")


def test_criterion_09_determinism(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("iterations = 3\n")
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "4")):
        assert main(["search", "--config", str(cfg), "--seed", "11", "--jobs", jobs,
                     "--out-dir", str(tmp_path / name)]) == 0
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / d / f).read_bytes()
               for d in ("b", "c") for f in ("archive.jsonl", "front.csv"))
    n_front = len(list(csv.DictReader(io.StringIO((tmp_path / "a" / "front.csv").read_text()))))
    verdict(9, same, f"archive.jsonl and front.csv byte-identical across 2 runs and jobs=4 ({n_front} front rows)")


def test_criterion_10_encoding_counts():
    got = {k.value: (make_scheme(k).length, make_scheme(k).level_domain) for k in SchemeKind}
    want = {"Baseline": (22, 10), "Parallel": (22, 64), "EarlyExits": (23, 10), "EarlyExitsParallel": (23, 64)}
    verdict(10, got == want, f"(length, level domain) per scheme {got}")
