"""Monte-Carlo simulation of joint decoding and state estimation.

Each trial draws a message, an i.i.d. state sequence and the channel output;
the receiver decodes by maximum likelihood under the state-averaged channel,
re-encodes the decoded message and estimates every state symbol with the
one-shot estimator ``h*(x_hat_i, y_i)``.

Randomness comes from Philox (a counter-based generator). Trial ``t`` uses
its own substream keyed by ``(seed, t)``, so results do not depend on the
order in which trials run.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelSpec, estimation_profile, marginal_channel

TIE_TOL = 1e-9
CODEBOOK_STREAM = 0
TRIAL_STREAM = 1
DEFAULT_BUDGET = 50_000_000  # codebook entries M * n


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def composition_counts(p_x, n: int) -> np.ndarray:
    """Largest-remainder rounding of n * P_X to integer counts summing to n."""
    p = np.asarray(p_x, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("composition must be a probability vector")
    raw = p * n
    counts = np.floor(raw).astype(np.int64)
    short = n - int(counts.sum())
    # stable order: larger remainder first, then smaller index
    order = sorted(range(p.size), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class Codebook:
    n: int
    M: int
    codewords: np.ndarray  # [M, n] input indices
    composition: np.ndarray
    counts: np.ndarray
    seed: int

    @property
    def rate(self) -> float:
        return math.log(self.M) / self.n


def build_codebook(p_x, n: int, M: int, seed: int) -> Codebook:
    """Constant-composition random codebook: every codeword is a uniform
    permutation of the same symbol multiset."""
    if n < 1 or M < 1:
        raise ValueError("need n >= 1 and M >= 1")
    p = np.asarray(p_x, dtype=float)
    if M > 1 and math.log(M) > n * math.log(p.size) + 1e-12:
        raise ValueError(f"M={M} exceeds |X|^n = {p.size}^{n}")
    counts = composition_counts(p, n)
    base = np.repeat(np.arange(p.size), counts)
    rng = substream(seed, CODEBOOK_STREAM)
    words = np.stack([rng.permutation(base) for _ in range(M)]) if M else base[None, :]
    words.setflags(write=False)
    return Codebook(n, M, words, p, counts, seed)


@dataclass(frozen=True)
class SimReport:
    n: int
    M: int
    rate: float
    trials: int
    pe_hat: float
    pe_se: float
    dbar_hat: float
    dbar_se: float
    genie_dbar_hat: float
    genie_se: float
    codebook_cost: float  # (1/(nM)) sum_m sum_i d*(x_i(m))
    bound: float  # codebook_cost + D_bar * pe_hat
    bound_se: float

    def as_row(self) -> dict:
        return asdict(self)


def ml_decode(loglik: np.ndarray) -> int:
    """Index of the most likely message; near-ties go to the smallest index."""
    top = loglik.max()
    return int(np.flatnonzero(loglik >= top - TIE_TOL)[0])


class _Trial:
    def __init__(self, spec: ChannelSpec, cb: Codebook, seed: int):
        self.spec, self.cb, self.seed = spec, cb, seed
        with np.errstate(divide="ignore"):
            self.log_w = np.log(marginal_channel(spec))
        self.cdf_y = np.cumsum(spec.transition, axis=2)
        self.cdf_s = np.cumsum(spec.state_pmf)
        self.h = estimation_profile(spec).estimator

    def run(self, t: int):
        cb, spec = self.cb, self.spec
        rng = substream(self.seed, TRIAL_STREAM, t)
        m = int(rng.integers(cb.M))
        x = cb.codewords[m]
        s = np.minimum(np.searchsorted(self.cdf_s, rng.random(cb.n), side="right"), spec.ns - 1)
        u = rng.random(cb.n)
        y = np.minimum((u[:, None] >= self.cdf_y[x, s, :]).sum(axis=1), spec.ny - 1)
        loglik = self.log_w[cb.codewords, y[None, :]].sum(axis=1)
        m_hat = ml_decode(loglik)
        x_hat = cb.codewords[m_hat]
        d = spec.distortion
        dist = d[s, self.h[x_hat, y]].mean()
        genie = d[s, self.h[x, y]].mean()
        return float(m_hat != m), float(dist), float(genie)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    k = values.size
    mean = math.fsum(values) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (k - 1)
    return mean, math.sqrt(var / k)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CAPDIST_THREADS", "1")))
    except ValueError:
        return 1


def simulate(spec: ChannelSpec, cb: Codebook, trials: int, seed: int,
             workers: Optional[int] = None) -> SimReport:
    if cb.codewords.max() >= spec.nx:
        raise ValueError("codebook uses input symbols outside the channel alphabet")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    runner = _Trial(spec, cb, seed)
    workers = workers or _workers()
    out = np.empty((trials, 3))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for t, row in enumerate(pool.map(runner.run, range(trials))):
                out[t] = row
    else:
        for t in range(trials):
            out[t] = runner.run(t)
    pe, pe_se = _mean_se(out[:, 0])
    dbar, dbar_se = _mean_se(out[:, 1])
    genie, genie_se = _mean_se(out[:, 2])
    d_star = estimation_profile(spec).cost
    cb_cost = math.fsum(d_star[cb.codewords].ravel()) / (cb.n * cb.M)
    dmax = spec.max_distortion
    return SimReport(cb.n, cb.M, cb.rate, trials, pe, pe_se, dbar, dbar_se, genie, genie_se,
                     cb_cost, cb_cost + dmax * pe, dmax * pe_se)


def messages_for_rate(n: int, R: float) -> int:
    return max(1, math.ceil(math.exp(n * R) - 1e-9))


def rate_sweep(spec: ChannelSpec, p_x, n_list: Sequence[int], R: float, trials: int,
               seed: int, budget: int = DEFAULT_BUDGET) -> list[SimReport]:
    """One simulation per block length at a fixed rate, M = ceil(exp(n R))."""
    if R <= 0:
        raise ValueError("rate must be positive")
    reports = []
    for n in n_list:
        M = messages_for_rate(n, R)
        if M * n > budget:
            raise MemoryError(f"codebook of {M} x {n} exceeds budget {budget}")
        cb = build_codebook(p_x, n, M, seed)
        reports.append(simulate(spec, cb, trials, seed))
    return reports
