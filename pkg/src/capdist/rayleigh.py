"""Bounds on C(D) for the memoryless non-coherent Rayleigh fading channel.

``Y = S X + Z`` with ``S, Z ~ CN(0, 1)``, power limit ``E|X|^2 <= rho`` and
squared-error state distortion. With ``U = log(|X|^2 + 1) / 2`` and
``T = log |Y|`` the channel becomes additive, ``T = U + W``, where ``W`` has a
log-Gamma type density. The lower bound uses a uniform ``U`` that meets both
constraints with equality; the upper bound uses the maximum-entropy law of
``T`` under a mean constraint and a second-moment constraint on ``exp(T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .specfun import EULER_GAMMA, digamma, log_gamma

NOISE_ENTROPY = 1.0 - math.log(2.0) + EULER_GAMMA  # h(W), nats
# E[W] = E[log |S|^2] / 2 for |S|^2 ~ Exp(1); often quoted as 0
NOISE_MEAN = -0.5 * EULER_GAMMA
FADING_NUMBER = -1.0 - EULER_GAMMA

DELTA_BRACKET = (1e-9, 50.0)
ROOT_TOL = 1e-12


class DegenerateConstructionError(ValueError):
    """The uniform-U construction needs (rho + 1) D > 1."""


@dataclass(frozen=True)
class RayleighQuery:
    rho: float
    D: float
    alpha: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if not 0.0 < self.D <= 1.0:
            raise ValueError(f"D must lie in (0, 1], got {self.D!r}")

    @classmethod
    def scaled(cls, rho: float, alpha: float, kappa: float) -> "RayleighQuery":
        """Query with ``D = kappa * rho**(-alpha)``."""
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        return cls(rho, kappa * rho ** (-alpha), alpha, kappa)


def noise_pdf(w):
    """Density of ``W = log|G|`` for a unit-variance circular Gaussian ``G``."""
    w = np.asarray(w, dtype=float)
    with np.errstate(over="ignore"):
        out = 2.0 * np.exp(2.0 * w - np.exp(2.0 * w))
    return out if out.ndim else float(out)


def mmse_estimate(x: complex, y: complex) -> complex:
    return np.conj(x) / (abs(x) ** 2 + 1.0) * y


def per_symbol_cost(x: complex) -> float:
    return 1.0 / (abs(x) ** 2 + 1.0)


def _bisect(f, lo, hi, tol=ROOT_TOL, max_iter=400):
    """Root of a function with f(lo) < 0 < f(hi)."""
    flo, fhi = f(lo), f(hi)
    if not (flo < 0 < fhi):
        raise ValueError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_delta(snr_distortion: float) -> float:
    """Width of the uniform U law for a given ``(rho + 1) D > 1``.

    Solves ``exp(2 t) = 2 t^2 a [1 + sqrt(1 + 1/(t^2 a))] + 1`` for ``t > 0``.
    """
    a = snr_distortion
    if not a > 1.0:
        raise DegenerateConstructionError(
            f"(rho+1)*D = {a!r} <= 1: uniform construction degenerates")

    def f(t):
        b = t * t * a
        rhs = 2.0 * b * (1.0 + math.sqrt(1.0 + 1.0 / b))
        if t < 1.0:
            # expm1 keeps the small-t end (where both sides are near 1) accurate
            return math.expm1(2.0 * t) - rhs
        return 2.0 * t - math.log1p(rhs)  # same sign, no overflow

    lo, hi = DELTA_BRACKET
    while f(hi) <= 0:  # only for (rho + 1) D beyond ~1e39
        hi *= 2.0
    return _bisect(f, lo, hi)


def lower_bound(q: RayleighQuery) -> float:
    delta = solve_delta((q.rho + 1.0) * q.D)
    gap = math.log(delta) - NOISE_ENTROPY
    return math.log(delta) + 0.5 * math.log1p(math.exp(-2.0 * gap)) - NOISE_ENTROPY


def solve_mu(target: float) -> float:
    """Solve ``log(mu) - digamma(mu) = target`` for ``mu > 0`` (target > 0)."""
    if not target > 0.0:
        raise ValueError("log(mu) - digamma(mu) is positive; target must be > 0")

    # left side is strictly decreasing in mu: bisect on log(mu)
    def f(log_mu):
        mu = math.exp(log_mu)
        return target - (log_mu - digamma(mu))

    lo, hi = -40.0, 40.0
    while f(lo) >= 0:
        lo -= 40.0
    log_mu = _bisect(f, lo, hi, tol=1e-14)
    return math.exp(log_mu)


def upper_bound(q: RayleighQuery, mean_correction: bool = False) -> float:
    """Maximum-entropy upper bound on C(D).

    The mean constraint on ``T`` is ``E[T] >= log(1/D)/2 + E[W]``. By default
    ``E[W]`` is taken as 0, giving ``log(mu) - digamma(mu) = log((rho+1) D)``;
    this version drops below zero (and below :func:`lower_bound`) when
    ``(rho+1) D`` is close to 1. ``mean_correction=True`` uses the exact
    ``E[W] = -gamma/2``, which adds ``gamma`` to the right-hand side and
    stays a valid bound on the whole domain.

    Raises ``ValueError`` when ``(rho + 1) D < 1``: by Jensen no input meets
    both constraints. At ``(rho + 1) D = 1`` the input is forced to be
    deterministic and 0 is returned.
    """
    a = (q.rho + 1.0) * q.D
    if a < 1.0 - 1e-12:
        raise ValueError(f"(rho+1)*D = {a!r} < 1: constraints are infeasible")
    if a <= 1.0 + 1e-12:
        return 0.0
    target = math.log(a) - (2.0 * NOISE_MEAN if mean_correction else 0.0)
    mu = solve_mu(target)
    return log_gamma(mu) - mu * digamma(mu) + mu - EULER_GAMMA - 1.0


def asymptotic_window(rho: float, alpha: float) -> tuple[float, float]:
    """High-SNR interval containing C(D) when ``D rho^alpha -> kappa``."""
    if not rho > math.e:
        raise ValueError("rho must exceed e so that log log rho is defined")
    if alpha >= 1.0:
        raise ValueError("alpha = 1 is the bounded-capacity regime: C(D) stays finite "
                         "as rho grows, so no log-log window applies")
    if alpha < 0.0:
        raise ValueError("alpha must lie in [0, 1)")
    lo = math.log(math.log(rho)) + math.log1p(-alpha) - 1.0 - EULER_GAMMA
    return lo, lo + 1.0
