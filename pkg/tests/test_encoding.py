import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natsearch.arch import maximal_genome, minimal_genome
from natsearch.encoding import (
    EXPANSIONS,
    KERNELS,
    GeneDomainError,
    Genome,
    InvalidGenomeError,
    LevelConfig,
    SchemeKind,
    SchemeMismatchError,
    decode_level,
    encode_level,
    feature_length,
    feature_matrix,
    make_scheme,
    repair,
    to_features,
    validate,
)
from natsearch.sampling import sample_depth_uniform, sample_uniform_domain

BASE = make_scheme("Baseline")
PAR = make_scheme("Parallel")
EEP = make_scheme("EarlyExitsParallel")


def test_skip_decodes_to_none():
    assert decode_level(0, BASE) is None
    assert encode_level(None, PAR) == 0


def test_decode_examples():
    assert decode_level(1, BASE) == LevelConfig(3, 3, 1)
    assert decode_level(63, PAR) == LevelConfig(7, 6, 7)
    assert encode_level(LevelConfig(3, 3, 1), PAR) == 1
    assert encode_level(LevelConfig(5, 4, 3), PAR) == 23


def test_bijection_row_major_kernel_outer():
    # hand-written table: v -> (K, E) for non-parallel schemes
    expected = {1: (3, 3), 2: (3, 4), 3: (3, 6), 4: (5, 3), 5: (5, 4),
                6: (5, 6), 7: (7, 3), 8: (7, 4), 9: (7, 6)}
    for v, (k, e) in expected.items():
        cfg = decode_level(v, BASE)
        assert (cfg.kernel, cfg.expansion, cfg.branch_mask) == (k, e, 1)


@pytest.mark.parametrize("scheme", [BASE, PAR], ids=["Baseline", "Parallel"])
def test_exhaustive_round_trip(scheme):
    seen = set()
    for v in range(scheme.level_domain):
        cfg = decode_level(v, scheme)
        assert encode_level(cfg, scheme) == v
        seen.add(cfg)
    assert len(seen) == scheme.level_domain


def test_domain_errors():
    with pytest.raises(GeneDomainError) as err:
        decode_level(64, PAR, index=7)
    assert "7" in str(err.value) and "63" in str(err.value)
    with pytest.raises(GeneDomainError):
        decode_level(10, BASE)
    with pytest.raises(GeneDomainError):
        decode_level(-1, BASE)


def test_parallel_cfg_under_baseline_is_mismatch():
    with pytest.raises(SchemeMismatchError):
        encode_level(LevelConfig(3, 3, 5), BASE)


def test_branch_bits():
    assert decode_level(1 + 9 * 0, PAR).branches == ("irb",)
    assert set(decode_level(1 + 9 * 4, PAR).branches) == {"irb", "normact"}
    assert set(decode_level(1 + 9 * 6, PAR).branches) == {"irb", "pointwise", "normact"}


def test_domain_counts_and_lengths():
    lengths = {k: make_scheme(k).length for k in SchemeKind}
    assert lengths == {SchemeKind.BASELINE: 22, SchemeKind.PARALLEL: 22,
                       SchemeKind.EARLY_EXITS: 23, SchemeKind.EARLY_EXITS_PARALLEL: 23}
    assert make_scheme("Baseline").level_domain == 10
    assert make_scheme("EarlyExits").level_domain == 10
    assert make_scheme("Parallel").level_domain == 64
    assert make_scheme("EarlyExitsParallel").level_domain == 64
    assert make_scheme("EarlyExits").n_exits == 5 and BASE.n_exits == 1


def test_scheme_rejects_bad_choices():
    from natsearch.encoding import EncodingScheme
    with pytest.raises(ValueError):
        EncodingScheme(SchemeKind.BASELINE, (160, 128))
    with pytest.raises(ValueError):
        EncodingScheme(SchemeKind.BASELINE, ())


def test_validate_examples():
    g = minimal_genome(BASE)
    assert validate(g) == []
    levels = list(g.levels)
    levels[4] = 0  # stage 2 position 1
    bad = g.replace(levels=tuple(levels))
    rules = [(v.gene, v.rule) for v in validate(bad)]
    assert rules == [(2 + 4, "min depth")]
    p = list(minimal_genome(PAR).levels)
    p[0] = 64
    rules = [(v.gene, v.rule) for v in validate(minimal_genome(PAR).replace(levels=tuple(p)))]
    assert rules == [(2, "domain")]


def test_hole_violation():
    levels = list(minimal_genome(BASE).levels)
    levels[3] = 5  # position 4 set while position 3 is skipped
    v = validate(minimal_genome(BASE).replace(levels=tuple(levels)))
    assert [x.rule for x in v] == ["hole"]


def test_exit_gene_presence():
    g = Genome(BASE, 0, 0, 2, minimal_genome(BASE).levels)
    assert [v.rule for v in validate(g)] == ["exit"]
    with pytest.raises(InvalidGenomeError):
        to_features(g)


def test_features_integer_and_onehot_lengths():
    g = minimal_genome(BASE)
    assert to_features(g).shape == (22,)
    assert np.array_equal(to_features(g), to_features(g))
    assert feature_length(EEP, "onehot") == 4 + 2 + 5 + 20 * 64
    v = to_features(maximal_genome(EEP), "onehot")
    assert v.shape == (4 + 2 + 5 + 20 * 64,) and v.sum() == 23


def test_features_injective_over_samples():
    rng = np.random.default_rng(0)
    for mode in ("integer", "onehot"):
        genomes = {sample_depth_uniform(EEP, rng) for _ in range(10_000)}
        X = feature_matrix(sorted(genomes, key=lambda g: g.genes), mode)
        assert len({row.tobytes() for row in X}) == len(genomes)


def test_text_and_json_round_trip():
    rng = np.random.default_rng(1)
    for kind in SchemeKind:
        s = make_scheme(kind)
        for _ in range(50):
            g = sample_depth_uniform(s, rng)
            assert Genome.from_text(s, g.to_text()) == g
            assert Genome.from_json(s, g.to_json()) == g
            assert json.loads(g.to_json())["L"] == list(g.levels)
    t = minimal_genome(EEP).to_text()
    assert t.startswith("R:0 W:0 X:1 L:1,1,0,0,")
    assert "X:" not in minimal_genome(BASE).to_text()


def test_malformed_text_rejected():
    with pytest.raises(ValueError):
        Genome.from_text(BASE, "R:0 W:0")
    with pytest.raises(ValueError):
        Genome.from_text(BASE, "junk")


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(list(SchemeKind)), st.lists(st.integers(-5, 80), min_size=23, max_size=23))
def test_repair_always_valid_and_idempotent(kind, raw):
    s = make_scheme(kind)
    g = repair(Genome.from_genes(s, raw[:s.length]), np.random.default_rng(0))
    assert validate(g) == []
    assert repair(g) == g


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(SchemeKind)), st.integers(0, 2 ** 32 - 1))
def test_genes_round_trip(kind, seed):
    s = make_scheme(kind)
    g = sample_uniform_domain(s, np.random.default_rng(seed))
    assert Genome.from_genes(s, g.genes) == g
    assert len(g.genes) == s.length


def test_tiny_preset():
    assert make_scheme("Baseline", "tiny").resolution_choices == (48, 56, 64)
    with pytest.raises(ValueError):
        make_scheme("Baseline", "huge")
