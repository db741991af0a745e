"""log-Gamma and digamma for positive real arguments."""
from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Bernoulli numbers B_{2k} / (2k) for the digamma asymptotic series
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _check(z: float) -> float:
    z = float(z)
    if not z > 0.0 or math.isinf(z):
        raise ValueError(f"argument must be positive and finite, got {z!r}")
    return z


def log_gamma(z: float) -> float:
    z = _check(z)
    shift = 0.0
    # Lanczos is used on z >= 1; recur down for smaller arguments
    while z < 1.0:
        shift -= math.log(z)
        z += 1.0
    x = z - 1.0
    acc = _LANCZOS[0]
    for k in range(1, len(_LANCZOS)):
        acc += _LANCZOS[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(acc) + shift


def digamma(z: float) -> float:
    z = _check(z)
    acc = 0.0
    while z < 10.0:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    series = 0.0
    power = inv2
    for coef in _DIGAMMA_SERIES:
        series += coef * power
        power *= inv2
    return acc + math.log(z) - 0.5 / z - series


def special_functions(z: float) -> dict:
    return {"log_gamma": log_gamma(z), "digamma": digamma(z)}
