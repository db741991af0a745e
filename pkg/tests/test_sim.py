import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capdist.channel import ChannelSpec, estimation_profile, random_channel
from capdist.closed_form import bmc_build_channel
from capdist.sim import (
    build_codebook,
    composition_counts,
    messages_for_rate,
    ml_decode,
    rate_sweep,
    simulate,
    substream,
)
from capdist.solver import capacity_distortion, unconstrained_capacity
from conftest import identity_channel
from oracles import exact_error_probability

P_X = [0.2, 0.8]


@pytest.fixture(scope="module")
def bmc():
    return bmc_build_channel(1, 0.3)


# --- codebooks ------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5).filter(lambda v: sum(v) > 0),
       st.integers(1, 300))
def test_composition_rounding(weights, n):
    p = np.array(weights) / sum(weights)
    counts = composition_counts(p, n)
    assert counts.sum() == n
    assert np.all(np.abs(counts - n * p) < 1)


def test_composition_rejects_non_pmf():
    with pytest.raises(ValueError):
        composition_counts([0.5, 0.6], 10)


def test_codebook_constant_composition():
    cb = build_codebook([0.5, 0.5], 4, 6, seed=1)
    for word in cb.codewords:
        assert np.bincount(word, minlength=2).tolist() == [2, 2]
    assert cb.rate == pytest.approx(math.log(6) / 4)


def test_codebook_point_mass():
    cb = build_codebook([0.0, 1.0, 0.0], 7, 1, seed=0)
    np.testing.assert_array_equal(cb.codewords, np.ones((1, 7)))


def test_codebook_determinism():
    a = build_codebook(P_X, 64, 20, seed=5)
    b = build_codebook(P_X, 64, 20, seed=5)
    c = build_codebook(P_X, 64, 20, seed=6)
    np.testing.assert_array_equal(a.codewords, b.codewords)
    assert not np.array_equal(a.codewords, c.codewords)
    assert not a.codewords.flags.writeable


def test_codebook_rejects_too_many_messages():
    with pytest.raises(ValueError):
        build_codebook([0.5, 0.5], 3, 9, seed=0)
    with pytest.raises(ValueError):
        build_codebook([0.5, 0.5], 0, 1, seed=0)


def test_substreams_are_independent_of_order():
    a = substream(7, 1, 3).random(4)
    substream(7, 1, 2).random(100)
    np.testing.assert_array_equal(a, substream(7, 1, 3).random(4))
    assert not np.array_equal(a, substream(7, 1, 4).random(4))


def test_ml_decode_tie_rule():
    assert ml_decode(np.array([-3.0, -1.0, -1.0 + 1e-12, -2.0])) == 1
    assert ml_decode(np.array([-5.0, -1.0, -0.5])) == 2


def test_messages_for_rate():
    assert messages_for_rate(10, math.log(2) / 10) == 2
    assert messages_for_rate(10, 0.0) == 1
    assert messages_for_rate(4, math.log(3) / 4 + 1e-6) == 4


# --- simulation -------------------------------------------------------------------

def test_noiseless_channel():
    spec = identity_channel(2)
    cb = build_codebook([0.5, 0.5], 16, 8, seed=2)
    assert len({tuple(w) for w in cb.codewords}) == 8
    rep = simulate(spec, cb, 300, seed=3)
    assert rep.pe_hat == 0.0 and rep.dbar_hat == 0.0


def test_bound_holds_on_bmc(bmc):
    cb = build_codebook(P_X, 128, 2, seed=11)
    rep = simulate(bmc, cb, 10_000, seed=12)
    assert rep.codebook_cost == pytest.approx(26 * 0.3 / 128)
    assert 0 <= rep.pe_hat <= 1 and 0 <= rep.dbar_hat <= 1
    assert rep.dbar_hat <= rep.bound + 3 * rep.dbar_se
    assert rep.bound == pytest.approx(rep.codebook_cost + 1.0 * rep.pe_hat)


def test_zero_rate(bmc):
    cb = build_codebook(P_X, 128, 1, seed=4)
    rep = simulate(bmc, cb, 5_000, seed=5)
    assert rep.pe_hat == 0.0 and rep.rate == 0.0
    target = estimation_profile(bmc).cost[cb.codewords[0]].mean()
    assert abs(rep.dbar_hat - target) <= 3 * rep.dbar_se


@pytest.mark.parametrize("seed", range(3))
def test_genie_ordering(seed):
    spec = random_channel(np.random.default_rng(seed), 3, 2, 3)
    p = unconstrained_capacity(spec).input_pmf
    cb = build_codebook(p, 24, 16, seed=seed)
    rep = simulate(spec, cb, 2_000, seed=seed + 100)
    assert rep.genie_dbar_hat <= rep.dbar_hat + 3 * rep.dbar_se
    assert abs(rep.genie_dbar_hat - rep.codebook_cost) <= 3 * rep.genie_se + 1e-12
    assert rep.dbar_hat <= rep.bound + 3 * rep.dbar_se


@pytest.mark.parametrize("seed", range(2))
def test_error_probability_matches_enumeration(seed):
    rng = np.random.default_rng(300 + seed)
    spec = random_channel(rng, 2, 2, 2)
    cb = build_codebook([0.5, 0.5], 8, 2, seed=seed)
    exact = exact_error_probability(np.asarray(spec.transition), np.asarray(spec.state_pmf),
                                    cb.codewords)
    rep = simulate(spec, cb, 20_000, seed=seed)
    se = math.sqrt(exact * (1 - exact) / rep.trials)
    assert abs(rep.pe_hat - exact) <= 3 * max(se, rep.pe_se)


def test_determinism_and_threads(bmc):
    cb = build_codebook(P_X, 32, 4, seed=1)
    a = simulate(bmc, cb, 500, seed=9)
    b = simulate(bmc, cb, 500, seed=9, workers=4)
    assert a == b
    assert simulate(bmc, cb, 500, seed=10) != a


def test_alphabet_mismatch(bmc):
    cb = build_codebook([0.3, 0.3, 0.4], 8, 2, seed=0)
    with pytest.raises(ValueError):
        simulate(bmc, cb, 10, seed=0)


# --- rate sweeps ------------------------------------------------------------------

def test_error_falls_with_blocklength_below_capacity(bmc):
    R = 0.5 * unconstrained_capacity(bmc).value
    p = unconstrained_capacity(bmc).input_pmf
    reps = rate_sweep(bmc, p, [32, 64, 128], R, 500, seed=1)
    for a, b in zip(reps, reps[1:]):
        assert b.pe_hat <= a.pe_hat + 2 * math.hypot(a.pe_se, b.pe_se)
    assert reps[-1].pe_hat < reps[0].pe_hat


def test_rate_above_log_alphabet_is_undecodable():
    spec = random_channel(np.random.default_rng(4), 2, 2, 2)
    R = 1.5 * math.log(2)
    with pytest.raises(ValueError):
        rate_sweep(spec, [0.5, 0.5], [4], R, 10, seed=0)
    # the largest admissible codebook at that block length is still hopeless
    cb = build_codebook([0.5, 0.5], 4, 6, seed=0)
    rep = simulate(spec, cb, 2_000, seed=1)
    assert cb.M >= 4 and rep.pe_hat > 0.5


def test_empirical_rates_respect_converse(bmc):
    p = capacity_distortion(bmc, 0.05).input_pmf
    checked = 0
    for n, M in [(128, 2), (256, 4), (256, 8)]:
        cb = build_codebook(p, n, M, seed=n + M)
        rep = simulate(bmc, cb, 1_000, seed=M)
        if rep.pe_hat < 0.01:
            checked += 1
            D = rep.dbar_hat + 2 * rep.dbar_se
            assert cb.rate <= capacity_distortion(bmc, min(D, 0.3)).value + 0.15
    assert checked >= 2


def test_memory_guard(bmc):
    with pytest.raises(MemoryError):
        rate_sweep(bmc, P_X, [400], 0.1, 1, seed=0, budget=1_000)
    with pytest.raises(ValueError):
        rate_sweep(bmc, P_X, [10], 0.0, 1, seed=0)
