"""Capacity-distortion (and -cost) by penalised Blahut-Arimoto iterations.

For a fixed multiplier vector the surrogate ``I(X;Y) - sum_k lam_k E[c_k(X)]``
is maximised by alternating maximisation; the multipliers are then found by
bisection so the linear constraints hold with complementary slackness.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelSpec, estimation_profile, marginal_channel, mutual_information

BRACKET_TOL = 1e-10
MAX_ITER = 100_000
FLOOR = 1e-300
ZERO_REPORT = 1e-12
DIST_TOL = 1e-8
FEAS_TOL = 1e-12
LAMBDA_TOL = 1e-12
LAMBDA_CAP = 1e12
# iterations per inner solve while bisecting; the final polish has the full budget
SEARCH_ITER = 5_000
# polish iterations at which a Newton step on the KKT system is attempted
NEWTON_AT = frozenset(int(20 * 4 ** j) for j in range(8))


class InfeasibleError(ValueError):
    """No input distribution satisfies the requested constraints."""


@dataclass
class CapDistSolution:
    value: float
    input_pmf: np.ndarray
    lambda_d: float = 0.0
    lambda_v: float = 0.0
    distortion_attained: float = 0.0
    cost_attained: Optional[float] = None
    active_d: bool = False
    active_v: bool = False
    iterations: int = 0
    converged: bool = True
    upper_bound: float = math.nan  # dual bound on the constrained optimum


@dataclass
class _Inner:
    p: np.ndarray
    lower: float  # surrogate lower bound log sum p c
    upper: float  # surrogate upper bound max log c
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _kl_rows(channel: np.ndarray, log_channel: np.ndarray, q: np.ndarray) -> np.ndarray:
    """D(P(.|x) || q) for every row x."""
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
    mask = channel > 0
    terms = np.where(mask, channel * (log_channel - np.where(mask, log_q, 0.0)), 0.0)
    return terms.sum(axis=1)


def blahut_arimoto(channel: np.ndarray, penalty: Optional[np.ndarray] = None,
                   p0: Optional[np.ndarray] = None, tol: float = BRACKET_TOL,
                   max_iter: int = MAX_ITER, track: bool = False) -> _Inner:
    """Maximise ``I(X;Y) - sum_x p(x) penalty(x)`` over the input simplex.

    Stops once the standard bracket ``max_x log c(x) - log sum_x p(x) c(x)``
    drops below ``tol``.
    """
    nx = channel.shape[0]
    if penalty is None:
        penalty = np.zeros(nx)
    with np.errstate(divide="ignore"):
        log_channel = np.where(channel > 0, np.log(np.where(channel > 0, channel, 1.0)), 0.0)
    p = np.full(nx, 1.0 / nx) if p0 is None else np.maximum(np.asarray(p0, float), FLOOR)
    p = p / p.sum()
    history = []
    lower = upper = -math.inf
    for it in range(1, max_iter + 1):
        q = p @ channel
        log_c = _kl_rows(channel, log_channel, q) - penalty
        shift = log_c.max()
        c = np.exp(log_c - shift)
        total = p @ c
        lower = math.log(total) + shift
        upper = shift
        if track:
            history.append(_surrogate(p, channel, penalty))
        if upper - lower < tol:
            return _Inner(p, lower, upper, it, True, history)
        p = np.maximum(p * c / total, FLOOR)
        p /= p.sum()
    return _Inner(p, lower, upper, max_iter, False, history)


def _surrogate(p, channel, penalty) -> float:
    return mutual_information(p, channel) - float(p @ penalty)


def dual_certificate(a: np.ndarray, costs: np.ndarray, limits: np.ndarray):
    """Upper bound ``min_{lam >= 0} max_x [a_x - lam.c_x] + lam.L`` on the
    constrained capacity, where ``a_x = D(P(.|x) || q)`` for any output law q.

    The minimum of this convex piecewise-linear function sits at a vertex; an
    LP locates it approximately and the vertex is then recovered exactly from
    the pieces that are nearly active there.
    """
    from scipy.optimize import linprog

    costs = np.atleast_2d(costs)
    limits = np.asarray(limits, float)
    k = limits.size
    slopes = limits[None, :] - costs.T  # piece x: a_x + lam . slopes[x]

    def value(lam):
        return float(np.max(a + slopes @ lam))

    res = linprog(np.r_[1.0, np.zeros(k)],
                  A_ub=np.column_stack([-np.ones(a.size), slopes]), b_ub=-a,
                  bounds=[(None, None)] + [(0, None)] * k, method="highs")
    lam0 = np.maximum(res.x[1:], 0.0) if res.status == 0 else np.zeros(k)
    best_val, best_lam = value(lam0), lam0
    vals = a + slopes @ lam0
    near = np.argsort(-vals)[:12]
    near = near[vals[near] >= vals.max() - 1e-6 * (1 + abs(vals.max()))]
    rows, rhs = [], []
    for i, j in itertools.combinations(near, 2):
        rows.append(slopes[i] - slopes[j])
        rhs.append(a[j] - a[i])
    for m in range(k):
        rows.append(np.eye(k)[m])
        rhs.append(0.0)
    for pick in itertools.combinations(range(len(rows)), k):
        A = np.array([rows[r] for r in pick])
        if abs(np.linalg.det(A)) < 1e-14:
            continue
        lam = np.linalg.solve(A, np.array([rhs[r] for r in pick]))
        if np.all(lam >= -1e-15):
            lam = np.maximum(lam, 0.0)
            val = value(lam)
            if val < best_val:
                best_val, best_lam = val, lam
    return best_val, best_lam


def _tilt(log_w: np.ndarray, costs: np.ndarray, limits: np.ndarray, lam0: np.ndarray):
    """I-projection of ``exp(log_w)`` onto ``{p : costs @ p <= limits}``.

    Minimises the dual ``log sum exp(log_w - lam.c) + lam.L`` over lam >= 0 by
    damped Newton on each candidate free set, keeping the one meeting KKT.
    """
    k = limits.size

    def stats(lam):
        z = log_w - lam @ costs
        shift = z.max()
        w = np.exp(z - shift)
        tot = w.sum()
        w /= tot
        mean = costs @ w
        return w, mean, math.log(tot) + shift + float(lam @ limits)

    free_sets = [()] + [(m,) for m in range(k)] + ([tuple(range(k))] if k > 1 else [])
    # the previous step's free set is almost always still right
    warm = tuple(m for m in range(k) if lam0[m] > 0)
    free_sets.sort(key=lambda f: f != warm)
    fallback = None
    for free in free_sets:
        free = list(free)
        lam = np.zeros(k)
        lam[free] = lam0[free]
        w, mean, f = stats(lam)
        for _ in range(200):
            g = limits[free] - mean[free]
            if not free or np.max(np.abs(g)) <= 1e-15 * (1 + np.max(np.abs(limits))):
                break
            centred = costs[free] - mean[free, None]
            H = (centred * w) @ centred.T
            step = np.linalg.lstsq(H, g, rcond=None)[0]
            t = 1.0
            while True:
                trial = lam.copy()
                trial[free] = lam[free] - t * step
                w2, mean2, f2 = stats(trial)
                if f2 <= f + 1e-16 * abs(f) or t < 1e-12:
                    break
                t *= 0.5
            if np.array_equal(trial, lam):
                break
            lam, w, mean, f = trial, w2, mean2, f2
        ok_free = np.all(lam[free] >= -1e-12)
        ok_fixed = all(mean[m] <= limits[m] + 1e-12 for m in range(k) if m not in free)
        if ok_free and ok_fixed:
            return w, np.maximum(lam, 0.0)
        if fallback is None or np.max(mean - limits) < np.max(fallback[2] - limits):
            fallback = (w, np.maximum(lam, 0.0), mean)
    return fallback[0], fallback[1]


def _kkt_newton(channel, log_channel, costs, limits, p, lam):
    """Newton on the stationarity system restricted to the current support.

    Unknowns are the support weights, the multipliers of the active
    constraints and the normalisation multiplier. An input whose weight goes
    negative is dropped and the solve repeated. Returns a candidate input law
    or None.
    """
    support = np.flatnonzero(p > 1e-9 * p.max())
    active = np.flatnonzero(lam > 0)
    for _ in range(3):
        out, negative = _kkt_newton_on(channel, log_channel, costs, limits, p, lam,
                                       support, active)
        if out is not None or negative is None or negative.size == support.size:
            return out
        support = np.setdiff1d(support, negative)
    return None


def _kkt_newton_on(channel, log_channel, costs, limits, p, lam, support, active, steps=30):
    W = channel[support]
    C = costs[:, support]
    m, na = support.size, active.size
    x = np.concatenate([p[support], lam[active], [0.0]])
    q = x[:m] @ W
    a = _kl_rows(W, log_channel[support], q)
    x[-1] = float(np.mean(a - lam @ C))
    for _ in range(steps):
        ps, la, nu = x[:m], x[m:m + na], x[-1]
        q = ps @ W
        if np.any(q <= 0):
            return None, None
        a = _kl_rows(W, log_channel[support], q)
        F = np.concatenate([a - la @ C[active] - nu, C[active] @ ps - limits[active],
                            [ps.sum() - 1.0]])
        if np.max(np.abs(F)) < 1e-15:
            break
        J = np.zeros((m + na + 1, m + na + 1))
        J[:m, :m] = -(W / q) @ W.T
        J[:m, m:m + na] = -C[active].T
        J[:m, -1] = -1.0
        J[m:m + na, :m] = C[active]
        J[-1, :m] = 1.0
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x = x + step
        if np.all(np.abs(step) < 1e-16):
            break
    ps = x[:m]
    if np.any(ps < 0):
        return None, support[ps < 0]
    if np.any(x[m:m + na] < 0):
        return None, None
    out = np.zeros_like(p)
    out[support] = ps / ps.sum()
    if np.any(costs @ out > limits + FEAS_TOL):
        return None, None
    return out, None


def polish(channel: np.ndarray, costs, limits, p: np.ndarray, *,
           tol: float = BRACKET_TOL, max_iter: int = MAX_ITER):
    """Alternating maximisation with the constraints enforced at every step.

    Starting from a feasible ``p``, each update is the Blahut-Arimoto
    reweighting projected back onto the constraint set. Returns
    ``(p, upper, lam, iterations, converged)`` where ``upper`` is a dual
    certificate with multipliers ``lam`` and convergence means
    ``upper - I(p) < tol``.
    """
    costs = np.atleast_2d(np.asarray(costs, float))
    limits = np.asarray(limits, float)
    with np.errstate(divide="ignore"):
        log_channel = np.where(channel > 0, np.log(np.where(channel > 0, channel, 1.0)), 0.0)
    lam = np.zeros(limits.size)
    upper, best_lam = math.inf, lam
    for it in range(max_iter + 1):
        q = p @ channel
        a = _kl_rows(channel, log_channel, q)
        if np.all(costs @ p <= limits + FEAS_TOL):
            # any lam >= 0 gives a bound; the exact minimiser only now and then
            cand = float(np.max(a - lam @ costs) + lam @ limits)
            cand_lam = lam
            if cand - float(p @ a) >= tol and (it % 32 == 0 or it == max_iter):
                cand, cand_lam = dual_certificate(a, costs, limits)
            if cand < upper:
                upper, best_lam = cand, cand_lam
            if cand - float(p @ a) < tol:
                return p, cand, cand_lam, it, True
        if it == max_iter:
            break
        if it in NEWTON_AT:
            trial = _kkt_newton(channel, log_channel, costs, limits, p, lam)
            if trial is not None:
                a_t = _kl_rows(channel, log_channel, trial @ channel)
                cand, cand_lam = dual_certificate(a_t, costs, limits)
                if cand - float(trial @ a_t) < tol:
                    return trial, cand, cand_lam, it, True
        with np.errstate(divide="ignore"):
            log_w = np.log(p) + a
        p, lam = _tilt(log_w, costs, limits, lam)
    return p, upper, best_lam, max_iter, False


def _clean_pmf(p: np.ndarray) -> np.ndarray:
    p = np.where(p < ZERO_REPORT, 0.0, p)
    return p / p.sum()


def _solution(channel, p, costs, limits, lams, iters, converged, upper=math.nan):
    p = _clean_pmf(p)
    value = max(mutual_information(p, channel), 0.0)
    attained = [float(p @ c) for c in costs]
    active = [lam > 0 for lam in lams]
    sol = CapDistSolution(value=value, input_pmf=p, iterations=iters,
                          converged=converged, upper_bound=upper)
    sol.distortion_attained = attained[0]
    sol.lambda_d = lams[0]
    sol.active_d = active[0]
    if len(costs) > 1:
        sol.cost_attained = attained[1]
        sol.lambda_v = lams[1]
        sol.active_v = active[1]
    return sol


def unconstrained_capacity(spec: ChannelSpec, *, tol: float = BRACKET_TOL,
                           max_iter: int = MAX_ITER) -> CapDistSolution:
    channel = marginal_channel(spec)
    d_star = estimation_profile(spec).cost
    res = blahut_arimoto(channel, tol=tol, max_iter=max_iter)
    return _solution(channel, res.p, [d_star], [math.inf], [0.0],
                     res.iterations, res.converged, res.upper)


class _Problem:
    """One constrained maximisation with 1 or 2 linear cost vectors."""

    def __init__(self, channel, costs, limits, tol, max_iter):
        self.channel = channel
        self.costs = [np.asarray(c, float) for c in costs]
        self.limits = list(limits)
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0
        # set once an inner solve runs out of iterations; near the multiplier
        # where the optimal support switches, further bisection only gets slower
        self.stalled = False

    def inner(self, lams, p0=None) -> _Inner:
        penalty = sum(l * c for l, c in zip(lams, self.costs))
        res = blahut_arimoto(self.channel, penalty, p0, self.tol,
                             min(self.max_iter, SEARCH_ITER))
        self.iterations += res.iterations
        self.stalled |= not res.converged
        return res

    def finish(self, p, lams) -> CapDistSolution:
        p, upper, cert_lams, iters, converged = polish(
            self.channel, self.costs, self.limits, p, tol=self.tol, max_iter=self.max_iter)
        self.iterations += iters
        if converged:
            lams = [float(v) for v in cert_lams]
        return _solution(self.channel, p, self.costs, self.limits, lams,
                         self.iterations, converged, upper)


def _bisect_one(prob: _Problem, k: int, fixed: dict, p0=None):
    """Find lam_k >= 0 meeting constraint k given other multipliers in ``fixed``.

    Returns ``(lam, p, res)`` where ``p`` satisfies constraint k with
    complementary slackness (mixing the two bracketing iterates if the
    attained cost jumps across the limit).
    """
    cost, limit = prob.costs[k], prob.limits[k]

    def lams_for(lam):
        out = [fixed.get(j, 0.0) for j in range(len(prob.costs))]
        out[k] = lam
        return out

    res0 = prob.inner(lams_for(0.0), p0)
    if res0.p @ cost <= limit + FEAS_TOL:
        return 0.0, res0.p, res0, lams_for(0.0)
    lo, res_lo = 0.0, res0
    hi = 1.0
    res_hi = prob.inner(lams_for(hi), res0.p)
    while res_hi.p @ cost > limit:
        lo, res_lo = hi, res_hi
        hi *= 2.0
        if hi > LAMBDA_CAP:
            raise InfeasibleError(
                f"constraint {k} cannot reach {limit!r} (attained {res_hi.p @ cost!r})")
        res_hi = prob.inner(lams_for(hi), res_hi.p)
    # shrink until the two bracketing iterates have nearly equal cost
    while (res_lo.p @ cost - res_hi.p @ cost > DIST_TOL
           and hi - lo > LAMBDA_TOL * max(1.0, hi) and not prob.stalled):
        mid = 0.5 * (lo + hi)
        res_mid = prob.inner(lams_for(mid), res_hi.p)
        if res_mid.p @ cost > limit:
            lo, res_lo = mid, res_mid
        else:
            hi, res_hi = mid, res_mid
    p = _mix_to_limit(res_lo.p, res_hi.p, cost, limit)
    return hi, p, res_hi, lams_for(hi)


def _mix_to_limit(p_over, p_under, cost, limit):
    """Convex combination of the two iterates whose cost equals ``limit``."""
    a_over, a_under = p_over @ cost, p_under @ cost
    if limit - a_under <= 0.0 or a_over <= a_under:
        return p_under
    theta = (a_over - limit) / (a_over - a_under)
    return theta * p_under + (1.0 - theta) * p_over


def _restrict_face(channel, costs, limits, tol, max_iter):
    """Solve on inputs where cost 0 equals its minimum (the D = d_min face)."""
    d = costs[0]
    face = d <= d.min() + 1e-12
    sub = channel[face]
    sub_costs = [c[face] for c in costs[1:]]
    p = np.zeros(channel.shape[0])
    if len(sub_costs) == 0:
        res = blahut_arimoto(sub, tol=tol, max_iter=max_iter)
        p[face] = res.p
        return p, [0.0], res.iterations, res.converged, res.upper
    prob = _Problem(sub, sub_costs, limits[1:], tol, max_iter)
    if sub_costs[0].min() > limits[1] + 1e-12:
        raise InfeasibleError("no input on the minimal-distortion face meets the cost limit")
    lam, q, res, _ = _bisect_one(prob, 0, {})
    sol = prob.finish(q, [lam])
    p[face] = sol.input_pmf
    return p, [math.inf, lam], sol.iterations, sol.converged, sol.upper_bound


def capacity_distortion(spec: ChannelSpec, D: float, *, tol: float = BRACKET_TOL,
                        max_iter: int = MAX_ITER, p0=None) -> CapDistSolution:
    """C(D): maximise I(X;Y) subject to E[d*(X)] <= D."""
    channel = marginal_channel(spec)
    d_star = estimation_profile(spec).cost
    return _solve(channel, [d_star], [float(D)], tol, max_iter, p0)


def capacity_distortion_cost(spec: ChannelSpec, D: float, V: float, *,
                             tol: float = BRACKET_TOL, max_iter: int = MAX_ITER,
                             p0=None) -> CapDistSolution:
    """C(D, V): additionally constrain the average input cost by V."""
    if spec.input_cost is None:
        raise ValueError("channel has no input_cost vector")
    channel = marginal_channel(spec)
    d_star = estimation_profile(spec).cost
    return _solve(channel, [d_star, spec.input_cost], [float(D), float(V)], tol, max_iter, p0)


def _check_feasible(costs, limits):
    d = costs[0]
    if limits[0] < d.min() - 1e-12:
        raise InfeasibleError(f"D={limits[0]!r} below d_min={d.min()!r}")
    if len(costs) == 1:
        return
    # two linear constraints: feasible iff the LP min of c1 over {E d <= D} <= V
    from scipy.optimize import linprog
    n = d.size
    res = linprog(costs[1], A_ub=[d], b_ub=[limits[0] + 1e-12],
                  A_eq=[np.ones(n)], b_eq=[1.0], bounds=[(0, None)] * n, method="highs")
    if res.status != 0 or res.fun > limits[1] + 1e-12:
        raise InfeasibleError(f"no input distribution meets D={limits[0]!r} and V={limits[1]!r}")


def _solve(channel, costs, limits, tol, max_iter, p0=None) -> CapDistSolution:
    _check_feasible(costs, limits)
    d = costs[0]
    if limits[0] <= d.min() + 1e-12:
        p, lams, iters, conv, upper = _restrict_face(channel, costs, limits, tol, max_iter)
        # on a proper face the distortion multiplier is unbounded
        proper_face = np.count_nonzero(d <= d.min() + 1e-12) < d.size
        lams[0] = math.inf if proper_face else 0.0
        return _solution(channel, p, costs, limits, lams, iters, conv, upper)
    prob = _Problem(channel, costs, limits, tol, max_iter)
    if len(costs) == 1:
        lam, p, res, lams = _bisect_one(prob, 0, {}, p0)
        return prob.finish(p, lams)
    return _solve_two(prob, p0)


def _solve_two(prob: _Problem, p0=None) -> CapDistSolution:
    """Nested bisection: outer on lam_v, inner on lam_d."""
    cost_v, limit_v = prob.costs[1], prob.limits[1]

    def inner_d(lam_v, start):
        lam_d, p, res, lams = _bisect_one(prob, 0, {1: lam_v}, start)
        return lam_d, p, res

    lam_d, p, res = inner_d(0.0, p0)
    if p @ cost_v <= limit_v + FEAS_TOL:
        return prob.finish(p, [lam_d, 0.0])
    lo, p_lo = 0.0, p
    hi = 1.0
    lam_d_hi, p_hi, res_hi = inner_d(hi, p)
    while p_hi @ cost_v > limit_v:
        lo, p_lo = hi, p_hi
        hi *= 2.0
        if hi > LAMBDA_CAP:
            raise InfeasibleError("cost constraint unreachable")
        lam_d_hi, p_hi, res_hi = inner_d(hi, p_hi)
    while (p_lo @ cost_v - p_hi @ cost_v > DIST_TOL and hi - lo > LAMBDA_TOL * max(1.0, hi)
           and not prob.stalled):
        mid = 0.5 * (lo + hi)
        lam_d_mid, p_mid, res_mid = inner_d(mid, p_hi)
        if p_mid @ cost_v > limit_v:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi, lam_d_hi, res_hi = mid, p_mid, lam_d_mid, res_mid
    # both iterates meet the D constraint, so their mixture does too
    p = _mix_to_limit(p_lo, p_hi, cost_v, limit_v)
    return prob.finish(p, [lam_d_hi, hi])


class CurvePointError(ValueError):
    def __init__(self, D: float, cause: Exception):
        super().__init__(f"D={D!r}: {cause}")
        self.D = D
        self.cause = cause


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CAPDIST_THREADS", "1")))
    except ValueError:
        return 1


def cd_curve(spec: ChannelSpec, D_values: Sequence[float], *, V: Optional[float] = None,
             workers: Optional[int] = None, raise_errors: bool = True):
    """Pointwise C(D) (or C(D, V)) over ``D_values``.

    Points are solved independently so the result does not depend on the
    number of workers. With ``raise_errors=False`` a failing point yields the
    exception object in place of a solution.
    """
    def one(D):
        try:
            if V is None:
                return capacity_distortion(spec, D)
            return capacity_distortion_cost(spec, D, V)
        except InfeasibleError as exc:
            if raise_errors:
                raise CurvePointError(D, exc) from exc
            return exc

    workers = workers or _threads()
    D_values = [float(D) for D in D_values]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, D_values))
    else:
        results = [one(D) for D in D_values]
    return list(zip(D_values, results))
