import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capdist.channel import ChannelSpec, estimation_profile, marginal_channel, random_channel
from capdist.closed_form import bmc_build_channel, bmc_capdist, h2
from capdist.solver import (
    CurvePointError,
    InfeasibleError,
    blahut_arimoto,
    capacity_distortion,
    capacity_distortion_cost,
    cd_curve,
    unconstrained_capacity,
)
from conftest import bsc_channel, identity_channel, noisy_xor_channel, random_specs
from oracles import grid_search_capacity


def _check_solution(sol, spec, D=None, V=None):
    p = sol.input_pmf
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12
    d_star = estimation_profile(spec).cost
    assert sol.distortion_attained == pytest.approx(p @ d_star, abs=1e-15)
    assert sol.value >= 0
    assert sol.value <= min(math.log(spec.nx), math.log(spec.ny)) + 1e-12
    assert sol.converged
    if D is not None:
        assert sol.distortion_attained <= D + 1e-9
        if math.isfinite(sol.lambda_d):
            assert sol.lambda_d * (D - sol.distortion_attained) <= 1e-6
        else:
            assert abs(D - sol.distortion_attained) <= 1e-12
    if V is not None:
        assert sol.cost_attained <= V + 1e-9
        assert sol.lambda_v * (V - sol.cost_attained) <= 1e-6


# --- unconstrained capacity ----------------------------------------------------

def test_noiseless_binary():
    sol = unconstrained_capacity(identity_channel(2))
    assert sol.value == pytest.approx(math.log(2), abs=1e-10)
    np.testing.assert_allclose(sol.input_pmf, [0.5, 0.5], atol=1e-6)


def test_bmc_unconstrained_closed_form(bmc04):
    r = 0.4
    p_star = 1 / (r * (1 + math.exp(h2(r) / r)))
    expected = h2(r * p_star) - p_star * h2(r)
    sol = unconstrained_capacity(bmc04)
    assert p_star == pytest.approx(0.3919, abs=1e-4)
    assert sol.value == pytest.approx(expected, abs=1e-9)
    assert sol.value == pytest.approx(0.1706, abs=1e-4)
    assert sol.input_pmf[1] == pytest.approx(p_star, abs=1e-5)


def test_bsc_textbook():
    eps = 0.11
    sol = unconstrained_capacity(bsc_channel(eps))
    assert sol.value == pytest.approx(math.log(2) - h2(eps), abs=1e-10)


def test_iteration_limit_reports_non_convergence(bmc04):
    sol = unconstrained_capacity(bmc04, max_iter=2)
    assert not sol.converged
    assert sol.iterations == 2


@pytest.mark.parametrize("lam", [0.0, 0.5, 3.0])
def test_surrogate_ascent(lam):
    spec = random_channel(np.random.default_rng(8), 3, 2, 3)
    penalty = lam * estimation_profile(spec).cost
    res = blahut_arimoto(marginal_channel(spec), penalty, tol=1e-12, track=True)
    hist = np.array(res.history)
    assert np.all(np.diff(hist) >= -1e-13)
    assert res.lower <= hist[-1] + 1e-12 <= res.upper + 2e-12


# --- capacity_distortion -------------------------------------------------------

def test_vacuous_constraint_equals_capacity(bmc04):
    sol = capacity_distortion(bmc04, 0.4)
    assert not sol.active_d
    assert sol.value == pytest.approx(unconstrained_capacity(bmc04).value, abs=1e-12)


def test_bmc_tight_branch(bmc04):
    r, D = 0.4, 0.1
    expected = h2(r - D) + (1 - D / r) * (-h2(r))
    sol = capacity_distortion(bmc04, D)
    assert sol.active_d
    assert sol.value == pytest.approx(expected, abs=1e-6)
    assert sol.input_pmf[1] == pytest.approx(0.75, abs=1e-6)
    _check_solution(sol, bmc04, D=D)


@pytest.mark.parametrize("D", [-0.01, -1e-6])
def test_infeasible_below_dmin(bmc04, D):
    with pytest.raises(InfeasibleError):
        capacity_distortion(bmc04, D)


def test_infeasible_when_every_input_costs():
    spec = noisy_xor_channel()
    d0 = estimation_profile(spec).d_min
    assert d0 > 0
    with pytest.raises(InfeasibleError):
        capacity_distortion(spec, 0.0)


def test_dmin_unique_minimiser_gives_zero(bmc04):
    sol = capacity_distortion(bmc04, 0.0)
    assert sol.value == 0.0
    np.testing.assert_array_equal(sol.input_pmf, [0.0, 1.0])


def test_dmin_face_with_several_minimisers():
    # K=2 block channel: three nonzero words all have d* = 0
    spec = bmc_build_channel(2, 0.3)
    sol = capacity_distortion(spec, 0.0)
    assert sol.value / 2 == pytest.approx(bmc_capdist(2, 0.3, 0.0).value, abs=1e-9)
    assert sol.input_pmf[0] == 0.0


# --- capacity_distortion_cost --------------------------------------------------

def _with_cost(spec, cost):
    d = spec.to_dict()
    d["input_cost"] = list(cost)
    return ChannelSpec.from_dict(d)


def test_dv_vacuous():
    spec = random_channel(np.random.default_rng(2), 3, 2, 3, with_cost=True)
    prof = estimation_profile(spec)
    sol = capacity_distortion_cost(spec, prof.d_max, spec.input_cost.max())
    assert sol.value == pytest.approx(unconstrained_capacity(spec).value, abs=1e-10)


def test_dv_duplicate_constraint():
    spec = random_channel(np.random.default_rng(4), 3, 2, 3)
    prof = estimation_profile(spec)
    spec = _with_cost(spec, prof.cost)
    D = 0.5 * (prof.d_min + prof.d_max)
    a = capacity_distortion(spec, D).value
    b = capacity_distortion_cost(spec, D, D).value
    assert b == pytest.approx(a, abs=1e-8)


def test_dv_infeasible():
    spec = random_channel(np.random.default_rng(6), 3, 2, 3, with_cost=True)
    with pytest.raises(InfeasibleError):
        capacity_distortion_cost(spec, estimation_profile(spec).d_max, -1.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dv_matches_grid_search(seed):
    spec = random_channel(np.random.default_rng(100 + seed), 3, 2, 3, with_cost=True)
    prof = estimation_profile(spec)
    D = prof.d_min + 0.6 * (prof.d_max - prof.d_min)
    V = float(np.median(spec.input_cost))
    sol = capacity_distortion_cost(spec, D, V)
    ref, _ = grid_search_capacity(marginal_channel(spec), [prof.cost, spec.input_cost], [D, V])
    assert sol.value == pytest.approx(ref, abs=1e-4)
    assert sol.value >= ref - 1e-9
    _check_solution(sol, spec, D=D, V=V)


# --- cd_curve --------------------------------------------------------------------

def test_curve_single_point(bmc04):
    ((D, sol),) = cd_curve(bmc04, [0.4])
    assert sol.value == pytest.approx(unconstrained_capacity(bmc04).value, abs=1e-12)


def test_curve_matches_closed_form(bmc04):
    Ds = np.linspace(0, 0.4, 50)
    for D, sol in cd_curve(bmc04, Ds):
        assert sol.value == pytest.approx(bmc_capdist(1, 0.4, D).value, abs=1e-5)


def test_curve_uniform_cost_is_flat():
    spec = noisy_xor_channel()
    d0 = estimation_profile(spec).d_min
    cap = unconstrained_capacity(spec).value
    for D, sol in cd_curve(spec, [d0, d0 + 0.1, 1.0]):
        assert sol.value == pytest.approx(cap, abs=1e-10)
    with pytest.raises(CurvePointError) as err:
        cd_curve(spec, [d0 - 0.05, d0])
    assert err.value.D == pytest.approx(d0 - 0.05)


def test_curve_parallel_equals_serial(bmc04):
    Ds = np.linspace(0.05, 0.4, 6)
    serial = cd_curve(bmc04, Ds, workers=1)
    parallel = cd_curve(bmc04, Ds, workers=3)
    assert [s.value for _, s in serial] == [s.value for _, s in parallel]


# --- shape of the curve on random channels ---------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([(2, 2, 2), (3, 2, 3), (3, 3, 2)]))
def test_curve_monotone_concave_saturating(seed, shape):
    spec = random_channel(np.random.default_rng(seed), *shape)
    prof = estimation_profile(spec)
    lo, hi = prof.d_min, prof.d_max
    Ds = np.linspace(lo, hi, 7)
    vals = {D: capacity_distortion(spec, D).value for D in Ds}
    seq = [vals[D] for D in Ds]
    assert all(b >= a - 1e-8 for a, b in zip(seq, seq[1:]))
    for mu in (0.25, 0.5, 0.75):
        D1, D2 = Ds[1], Ds[-2]
        mid = capacity_distortion(spec, mu * D1 + (1 - mu) * D2).value
        assert mid >= mu * vals[D1] + (1 - mu) * vals[D2] - 1e-7
    cap = unconstrained_capacity(spec).value
    for D in (hi, hi + 0.1, 2 * hi + 1):
        assert capacity_distortion(spec, D).value == pytest.approx(cap, abs=1e-9)
    if np.count_nonzero(prof.cost <= lo + 1e-12) == 1:
        assert capacity_distortion(spec, lo).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_grid_search_equivalence(seed):
    spec = random_specs(4, 77, shapes=((2, 2, 3), (3, 2, 2), (3, 3, 3), (2, 3, 2)))[seed]
    prof = estimation_profile(spec)
    D = prof.d_min + 0.4 * (prof.d_max - prof.d_min)
    sol = capacity_distortion(spec, D)
    ref, _ = grid_search_capacity(marginal_channel(spec), [prof.cost], [D])
    assert sol.value == pytest.approx(ref, abs=1e-4)
    _check_solution(sol, spec, D=D)
