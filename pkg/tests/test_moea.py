import math

import numpy as np
import pytest

from natsearch.arch import MacroSpec
from natsearch.archive import ObjectiveMode
from natsearch.encoding import Genome, is_valid, make_scheme
from natsearch.moea import (
    Operators,
    SearchError,
    SearchProblem,
    associate,
    das_dennis,
    evolve,
    select_nsga3,
    stats_csv,
)
from natsearch.pareto import hypervolume2, nds

from conftest import oracle_for
from oracles import all_simplex_points

S = make_scheme("EarlyExitsParallel")
MACRO = MacroSpec()


def test_das_dennis_examples():
    d = das_dennis(2, 4)
    assert d.tolist() == [[0, 1], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25], [1, 0]]
    assert sorted(map(tuple, das_dennis(3, 1).tolist())) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert len(das_dennis(3, 12)) == math.comb(14, 2) == 91


@pytest.mark.parametrize("m,p", [(2, 7), (3, 5), (4, 3)])
def test_das_dennis_matches_enumeration(m, p):
    got = sorted(tuple(round(x * p) for x in row) for row in das_dennis(m, p))
    assert got == all_simplex_points(m, p)
    assert np.allclose(das_dennis(m, p).sum(axis=1), 1.0)


def test_das_dennis_rejects_bad_args():
    with pytest.raises(ValueError):
        das_dennis(1, 3)
    with pytest.raises(ValueError):
        das_dennis(2, 0)


def test_association_to_nearest_line():
    dirs = das_dennis(2, 2)  # (0,1), (.5,.5), (1,0)
    niche, dist = associate(np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 0.1]]), dirs)
    assert niche.tolist() == [0, 1, 2]
    assert dist[0] == pytest.approx(0.0) and dist[1] == pytest.approx(0.0)
    assert dist[2] == pytest.approx(0.1)


def test_selection_keeps_whole_first_front():
    rng = np.random.default_rng(0)
    pts = rng.random((60, 2))
    first = nds(pts)[0]
    keep = select_nsga3(pts, max(len(first), 30), das_dennis(2, 29), rng)
    assert set(first) <= set(keep)


def test_dominated_individual_never_survives():
    # 20 points on a line plus one dominated point
    t = np.linspace(0, 1, 20)
    pts = np.vstack([np.column_stack([t, 1 - t]), [[0.6, 0.6]]])
    for seed in range(10):
        keep = select_nsga3(pts, 20, das_dennis(2, 19), np.random.default_rng(seed))
        assert 20 not in keep and len(keep) == 20


def test_niching_load_balance():
    rng = np.random.default_rng(1)
    t = np.sort(rng.random(400))
    pts = np.column_stack([t, 1 - t])  # all mutually non-dominated
    dirs = das_dennis(2, 9)
    for pop in (10, 25, 40):
        keep = select_nsga3(pts, pop, dirs, rng)
        assert len(keep) == pop
        # same normalization as the selector: ideal (0,0), intercepts (1,1)
        niche, _ = associate(pts[keep], dirs)
        counts = np.bincount(niche, minlength=len(dirs))
        assert counts.max() <= math.ceil(pop / len(dirs)) + 1


def test_single_objective_selection():
    F = np.array([[3.0], [1.0], [2.0], [0.5]])
    assert select_nsga3(F, 2, None, np.random.default_rng(0)) == [1, 3]


def _oracle_problem(mode=ObjectiveMode.ACC_PARAMS):
    oracle = oracle_for(S)

    def acc(X):
        return np.array([oracle.evaluate(Genome.from_genes(S, row.astype(int))) for row in X])

    return SearchProblem(S, MACRO, mode, acc)


def test_sign_convention():
    prob = _oracle_problem()
    rng = np.random.default_rng(2)
    from natsearch.sampling import sample_depth_uniform
    gs = [sample_depth_uniform(S, rng) for _ in range(30)]
    F, acc, cost = prob.evaluate(gs)
    assert np.argmin(F[:, 0]) == np.argmax(acc)
    assert np.array_equal(F[:, 1], cost)


def test_generations_zero_returns_initial():
    prob = _oracle_problem()
    pop = evolve(prob, 12, 0, np.random.default_rng(0))
    assert len(pop.genomes) == 12 and len(pop.history) == 1
    F, acc, _ = prob.evaluate(pop.genomes)
    assert np.array_equal(F, pop.F)


def test_operators_produce_valid_children_and_deterministic():
    ops = Operators()
    prob = _oracle_problem()
    a = evolve(prob, 16, 4, np.random.default_rng(3), operators=ops)
    b = evolve(prob, 16, 4, np.random.default_rng(3), operators=ops)
    assert a.genomes == b.genomes and a.history == b.history
    assert all(is_valid(g) for g in a.genomes)
    assert len(set(a.genomes)) == len(a.genomes)
    rng = np.random.default_rng(4)
    for _ in range(200):
        child = ops.mutate(ops.crossover(a.genomes[0], a.genomes[1], rng), rng)
        assert is_valid(child)


def test_forced_mutation_changes_a_gene():
    ops = Operators(mutation_prob=1e-9)
    rng = np.random.default_rng(5)
    g = Genome.from_genes(S, [3, 1, 5] + [9 * 6 + 9] * 20)
    changed = sum(ops.mutate(g, rng, force=True) != g for _ in range(100))
    assert changed > 80  # a forced reset can redraw the same value


def test_hypervolume_does_not_decrease_over_seeds():
    prob = _oracle_problem()
    for seed in range(20):
        pop = evolve(prob, 16, 6, np.random.default_rng(seed))
        assert pop.history[-1]["hv"] >= pop.history[0]["hv"] - 1e-9, seed


def test_acc_only_problem():
    pop = evolve(_oracle_problem(ObjectiveMode.ACC_ONLY), 10, 3, np.random.default_rng(0))
    assert pop.F.shape == (10, 1)
    assert pop.history[-1]["best_pred_acc"] >= pop.history[0]["best_pred_acc"]


def test_predictor_failure_names_generation():
    calls = {"n": 0}

    def flaky(X):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("model exploded")
        return np.zeros(len(X))

    prob = SearchProblem(S, MACRO, ObjectiveMode.ACC_PARAMS, flaky)
    with pytest.raises(SearchError, match="generation 2"):
        evolve(prob, 8, 5, np.random.default_rng(0))


def test_stats_csv_header():
    pop = evolve(_oracle_problem(), 8, 2, np.random.default_rng(0))
    lines = stats_csv(pop.history).splitlines()
    assert lines[0] == "gen,hv,best_pred_acc,min_cost" and len(lines) == 4
