"""Closed-form capacity-distortion values for two textbook channels.

* The block binary multiplicative channel ``Y = S * X`` with ``X, Y`` in
  ``{0,1}^K`` and a block-constant binary state with ``Pr[S=1] = r < 1/2``.
* The additive Gaussian channel with a Gaussian state (uniform estimation
  cost), plus the rate/distortion pair attainable when the transmitter
  knows the state.

All rates are in nats.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec

MAX_BLOCK = 8


def h2(p: float) -> float:
    """Binary entropy in nats, with h2(0) = h2(1) = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


@dataclass(frozen=True)
class BmcParams:
    K: int
    r: float
    D: float = 0.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"block length K must be an integer >= 1, got {self.K!r}")
        if not 0.0 < self.r < 0.5:
            raise ValueError(f"r must lie strictly inside (0, 1/2), got {self.r!r}")
        if self.D < 0:
            raise ValueError(f"D must be >= 0, got {self.D!r}")


@dataclass(frozen=True)
class BmcResult:
    value: float
    p_star: float
    case: int
    tight: bool


def bmc_case(K: int, r: float) -> int:
    """1 if the all-zero super-symbol is never used at the optimum, else 2."""
    BmcParams(K, r)
    return 1 if 2.0 ** K > 1.0 + (1.0 - r) ** (-1.0 / r) else 2


def _rate(K: int, r: float, p: float) -> float:
    return (h2(p * r) + p * (r * math.log(2.0 ** K - 1.0) - h2(r))) / K


def bmc_unconstrained_p(K: int, r: float) -> float:
    """Maximiser of the per-block mutual information ignoring p <= 1."""
    return 1.0 / (r * (1.0 + math.exp(h2(r) / r) / (2.0 ** K - 1.0)))


def bmc_threshold(K: int, r: float) -> float:
    """Distortion above which the constraint is slack (Case 2 only)."""
    return r - 1.0 / (1.0 + math.exp(h2(r) / r) / (2.0 ** K - 1.0))


def bmc_capdist(K: int, r: float, D: float) -> BmcResult:
    """C(D) per channel use and the optimal probability of a nonzero super-symbol."""
    BmcParams(K, r, D)
    case = bmc_case(K, r)
    if case == 1:
        return BmcResult(r * math.log(2.0 ** K - 1.0) / K, 1.0, 1, False)
    if D >= bmc_threshold(K, r):
        p = bmc_unconstrained_p(K, r)
        return BmcResult(_rate(K, r, p), p, 2, False)
    p = 1.0 - D / r
    value = (h2(r - D) + p * (r * math.log(2.0 ** K - 1.0) - h2(r))) / K
    return BmcResult(value, p, 2, True)


def bmc_training_rate(K: int, r: float) -> float:
    """Rate of the scheme that spends one channel use per block on training."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return r * (K - 1) * math.log(2.0) / K


def bmc_small_d_slope(r: float) -> float:
    """Limit of C(D)/D as D -> 0 for K = 1."""
    if not 0.0 < r < 0.5:
        raise ValueError("r must lie in (0, 1/2)")
    return -math.log1p(-r) / r


def bmc_build_channel(K: int, r: float) -> ChannelSpec:
    """Super-symbol channel with inputs/outputs in {0,1}^K and y = s * x.

    Rates from the solver on this channel are per block; divide by K.
    """
    BmcParams(K, r)
    if K > MAX_BLOCK:
        raise ValueError(f"K={K} too large to materialise (max {MAX_BLOCK})")
    words = ["".join(bits) for bits in itertools.product("01", repeat=K)]
    n = len(words)
    trans = np.zeros((n, 2, n))
    for x in range(n):
        trans[x, 0, 0] = 1.0  # state 0 kills the link
        trans[x, 1, x] = 1.0  # state 1 passes the word through
    return ChannelSpec(
        input_alphabet=words,
        state_alphabet=["0", "1"],
        output_alphabet=list(words),
        state_pmf=np.array([1.0 - r, r]),
        transition=trans,
        distortion=1.0 - np.eye(2),
    )


def gaussian_state_cd(P: float, Q: float, N: float, D: float) -> float:
    """C(D) of Y = X + S + Z with Gaussian state, as printed for MSE distortion."""
    if min(P, Q, N) <= 0:
        raise ValueError("P, Q, N must be positive")
    if D > Q * N / (Q + N):
        return math.log1p(P / (Q + N))
    return 0.0


def known_state_tradeoff(gamma: float, P: float, Q: float, N: float) -> tuple[float, float]:
    """(rate, distortion) attainable when the transmitter knows the state."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if min(P, Q, N) <= 0:
        raise ValueError("P, Q, N must be positive")
    rate = 0.5 * math.log1p(gamma * P / N)
    denom = (math.sqrt(Q) + math.sqrt((1.0 - gamma) * P)) ** 2 + gamma * P + N
    return rate, Q * (gamma * P + N) / denom
