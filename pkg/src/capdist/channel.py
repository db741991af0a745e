"""Finite-alphabet state-dependent channels and one-shot state estimation.

A channel is described by a transition tensor ``P(y | x, s)`` indexed
``[x, s, y]``, a state prior ``P_S`` and a distortion matrix ``d(s, s_hat)``.
Estimates live in the state alphabet.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

PROB_TOL = 1e-12


class SpecError(ValueError):
    """Invalid channel description; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _as_float_array(value, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(path, f"not a rectangular numeric array ({exc})") from None
    if arr.ndim != ndim:
        raise SpecError(path, f"expected {ndim}-level nested array, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise SpecError(path + "".join(f"[{i}]" for i in idx), "NaN/Inf not permitted")
    return arr


def _check_pmf(vec: np.ndarray, path: str) -> None:
    if np.any(vec < 0) or np.any(vec > 1):
        i = int(np.argwhere((vec < 0) | (vec > 1))[0][0])
        raise SpecError(f"{path}[{i}]", f"probability {vec[i]!r} outside [0, 1]")
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise SpecError(path, f"sums to {total!r}, not 1")


def _check_labels(labels, path: str, size: Optional[int] = None) -> list[str]:
    if not isinstance(labels, (list, tuple)) or len(labels) < 1:
        raise SpecError(path, "must be a non-empty array")
    labels = [str(v) for v in labels]
    if size is not None and len(labels) != size:
        raise SpecError(path, f"has {len(labels)} entries, tensor needs {size}")
    return labels


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    input_alphabet: list[str]
    state_alphabet: list[str]
    output_alphabet: list[str]
    state_pmf: np.ndarray
    transition: np.ndarray  # [x, s, y]
    distortion: np.ndarray  # [s, s_hat]
    input_cost: Optional[np.ndarray] = None

    def __post_init__(self):
        pmf = _as_float_array(self.state_pmf, "state_pmf", 1)
        trans = _as_float_array(self.transition, "transition", 3)
        dist = _as_float_array(self.distortion, "distortion", 2)
        nx, ns, ny = trans.shape
        _check_labels(self.input_alphabet, "input_alphabet", nx)
        _check_labels(self.state_alphabet, "state_alphabet", ns)
        _check_labels(self.output_alphabet, "output_alphabet", ny)
        if pmf.shape != (ns,):
            raise SpecError("state_pmf", f"length {pmf.shape[0]}, expected {ns}")
        _check_pmf(pmf, "state_pmf")
        for x in range(nx):
            for s in range(ns):
                _check_pmf(trans[x, s], f"transition[{x}][{s}]")
        if dist.shape != (ns, ns):
            raise SpecError("distortion", f"shape {dist.shape}, expected {(ns, ns)}")
        if np.any(dist < 0):
            i, j = np.argwhere(dist < 0)[0]
            raise SpecError(f"distortion[{i}][{j}]", "negative distortion")
        cost = None
        if self.input_cost is not None:
            cost = _as_float_array(self.input_cost, "input_cost", 1)
            if cost.shape != (nx,):
                raise SpecError("input_cost", f"length {cost.shape[0]}, expected {nx}")
            if np.any(cost < 0):
                raise SpecError(f"input_cost[{int(np.argmin(cost))}]", "negative cost")
        for name, arr in (("state_pmf", pmf), ("transition", trans),
                          ("distortion", dist), ("input_cost", cost)):
            if arr is not None:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("input_alphabet", "state_alphabet", "output_alphabet"):
            object.__setattr__(self, name, [str(v) for v in getattr(self, name)])

    @property
    def nx(self) -> int:
        return self.transition.shape[0]

    @property
    def ns(self) -> int:
        return self.transition.shape[1]

    @property
    def ny(self) -> int:
        return self.transition.shape[2]

    @property
    def max_distortion(self) -> float:
        """The bound D-bar on any single distortion value."""
        return float(self.distortion.max())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelSpec):
            return NotImplemented
        same_cost = (self.input_cost is None and other.input_cost is None) or (
            self.input_cost is not None and other.input_cost is not None
            and np.array_equal(self.input_cost, other.input_cost))
        return (self.input_alphabet == other.input_alphabet
                and self.state_alphabet == other.state_alphabet
                and self.output_alphabet == other.output_alphabet
                and np.array_equal(self.state_pmf, other.state_pmf)
                and np.array_equal(self.transition, other.transition)
                and np.array_equal(self.distortion, other.distortion)
                and same_cost)

    __hash__ = None

    @classmethod
    def from_arrays(cls, transition, state_pmf, distortion=None, input_cost=None):
        """Build a spec with integer labels; Hamming distortion by default."""
        trans = np.asarray(transition, dtype=float)
        nx, ns, ny = trans.shape
        if distortion is None:
            distortion = 1.0 - np.eye(ns)
        return cls(
            input_alphabet=[str(i) for i in range(nx)],
            state_alphabet=[str(i) for i in range(ns)],
            output_alphabet=[str(i) for i in range(ny)],
            state_pmf=np.asarray(state_pmf, dtype=float),
            transition=trans,
            distortion=np.asarray(distortion, dtype=float),
            input_cost=None if input_cost is None else np.asarray(input_cost, dtype=float),
        )

    def to_dict(self) -> dict:
        out = {
            "input_alphabet": list(self.input_alphabet),
            "state_alphabet": list(self.state_alphabet),
            "output_alphabet": list(self.output_alphabet),
            "state_pmf": self.state_pmf.tolist(),
            "transition": self.transition.tolist(),
            "distortion": self.distortion.tolist(),
        }
        if self.input_cost is not None:
            out["input_cost"] = self.input_cost.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSpec":
        if not isinstance(data, dict):
            raise SpecError("<root>", "top level must be a JSON object")
        required = ("input_alphabet", "state_alphabet", "output_alphabet",
                    "state_pmf", "transition", "distortion")
        for key in required:
            if key not in data:
                raise SpecError(key, "missing required key")
        for key in required[:3]:
            _check_labels(data[key], key)
        return cls(
            input_alphabet=data["input_alphabet"],
            state_alphabet=data["state_alphabet"],
            output_alphabet=data["output_alphabet"],
            state_pmf=data["state_pmf"],
            transition=data["transition"],
            distortion=data["distortion"],
            input_cost=data.get("input_cost"),
        )


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} not permitted")


def load_json(path) -> dict:
    """Read a JSON document, rejecting NaN/Infinity literals."""
    text = Path(path).read_text()
    return json.loads(text, parse_constant=_reject_constant)


def load_channel(path) -> ChannelSpec:
    try:
        data = load_json(path)
    except json.JSONDecodeError as exc:
        raise SpecError("<root>", f"malformed JSON ({exc})") from None
    except ValueError as exc:
        raise SpecError("<root>", str(exc)) from None
    return ChannelSpec.from_dict(data)


def dump_channel(spec: ChannelSpec, path=None) -> str:
    text = json.dumps(spec.to_dict(), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


# ---------------------------------------------------------------------------
# estimation machinery
# ---------------------------------------------------------------------------

def marginal_channel(spec: ChannelSpec) -> np.ndarray:
    """``P(y|x) = sum_s P_S(s) P(y|x,s)`` as an ``[x, y]`` matrix."""
    return np.einsum("s,xsy->xy", spec.state_pmf, spec.transition)


@dataclass(frozen=True)
class Posterior:
    pmf: np.ndarray
    reachable: bool


def posterior_state(spec: ChannelSpec, x: int, y: int) -> Posterior:
    """Posterior over states after seeing output ``y`` for input ``x``.

    Falls back to the prior (with ``reachable=False``) when ``y`` has zero
    probability under ``x``.
    """
    joint = spec.transition[x, :, y] * spec.state_pmf
    total = joint.sum()
    if total <= 0.0:
        return Posterior(spec.state_pmf.copy(), False)
    return Posterior(joint / total, True)


@dataclass(frozen=True)
class EstimationProfile:
    estimator: np.ndarray  # [x, y] -> state index
    cost: np.ndarray  # d*(x)

    @property
    def d_min(self) -> float:
        return float(self.cost.min())

    @property
    def d_max(self) -> float:
        return float(self.cost.max())


def _posterior_risk(transition: np.ndarray, state_pmf: np.ndarray,
                    distortion: np.ndarray) -> np.ndarray:
    """Unnormalised posterior risk ``sum_s P_S(s) P(y|x,s) d(s, s_hat)`` as [x, y, s_hat]."""
    joint = transition * state_pmf[None, :, None]  # [x, s, y]
    return np.einsum("xsy,st->xyt", joint, distortion)


def estimation_profile(spec: ChannelSpec) -> EstimationProfile:
    """Optimal one-shot estimator table and the per-input estimation cost d*."""
    risk = _posterior_risk(spec.transition, spec.state_pmf, spec.distortion)
    p_y = marginal_channel(spec)
    reach = p_y > 0
    # ties are judged on the normalised posterior risk
    post_risk = risk / np.where(reach, p_y, 1.0)[:, :, None]
    prior_risk = spec.state_pmf @ spec.distortion
    prior_best = int(np.argmin(prior_risk))
    estimator = np.empty(reach.shape, dtype=np.int64)
    for x in range(spec.nx):
        for y in range(spec.ny):
            if reach[x, y]:
                estimator[x, y] = _argmin_tol(post_risk[x, y])
            else:
                estimator[x, y] = prior_best
    best = np.take_along_axis(risk, estimator[:, :, None], axis=2)[:, :, 0]
    cost = np.where(reach, best, 0.0).sum(axis=1)
    return EstimationProfile(estimator=estimator, cost=np.maximum(cost, 0.0))


def _argmin_tol(values: np.ndarray, tol: float = 1e-13) -> int:
    """Smallest index whose value is within ``tol`` of the minimum."""
    lo = values.min()
    return int(np.flatnonzero(values <= lo + tol * max(1.0, abs(lo)))[0])


def prior_risk(spec: ChannelSpec) -> float:
    """Best distortion achievable without observing the output."""
    return float((spec.state_pmf @ spec.distortion).min())


def entropy(p: np.ndarray, axis=-1) -> np.ndarray:
    """Shannon entropy in nats along ``axis`` (0 log 0 = 0)."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


def mutual_information(p_x: np.ndarray, channel: np.ndarray) -> float:
    """I(X;Y) in nats for input PMF ``p_x`` over channel matrix ``[x, y]``."""
    p_y = p_x @ channel
    return float(entropy(p_y) - p_x @ entropy(channel, axis=1))


def random_channel(rng: np.random.Generator, nx: int, ns: int, ny: int,
                   with_cost: bool = False, sparsity: float = 0.0) -> ChannelSpec:
    """Random spec for property tests: Dirichlet rows, random distortion."""
    trans = rng.dirichlet(np.ones(ny), size=(nx, ns))
    if sparsity > 0:
        mask = rng.random(trans.shape) < sparsity
        mask[..., 0] = False
        trans = np.where(mask, 0.0, trans)
        trans /= trans.sum(axis=2, keepdims=True)
    pmf = rng.dirichlet(np.ones(ns))
    dist = rng.random((ns, ns))
    np.fill_diagonal(dist, 0.0)
    # enforce exact normalisation at the 1e-12 tolerance
    trans[..., -1] = 1.0 - trans[..., :-1].sum(axis=2)
    trans = np.clip(trans, 0.0, 1.0)
    pmf[-1] = 1.0 - pmf[:-1].sum()
    pmf = np.clip(pmf, 0.0, 1.0)
    cost = rng.random(nx) if with_cost else None
    return ChannelSpec.from_arrays(trans, pmf, dist, cost)
