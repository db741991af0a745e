"""Two-user multiple-access channels with state estimation at the receiver.

The estimation cost ``d*(x1, x2)`` couples the users: the constraint
``sum P_X1(x1) P_X2(x2) d*(x1, x2) <= D`` does not split into per-user
constraints. The region is computed by enumerating product input PMFs on a
simplex grid and convexifying (time sharing) in ``(cost, R1, R2)`` space.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import (
    ChannelSpec,
    SpecError,
    _as_float_array,
    _check_labels,
    _check_pmf,
    entropy,
    estimation_profile,
    load_json,
)

MAX_PAIRS = 2_000_000
DEFAULT_GRID = 51
DEFAULT_DIRECTIONS = 181


@dataclass(frozen=True, eq=False)
class MacChannelSpec:
    input_alphabet_1: list[str]
    input_alphabet_2: list[str]
    state_alphabet: list[str]
    output_alphabet: list[str]
    state_pmf: np.ndarray
    transition: np.ndarray  # [x1, x2, s, y]
    distortion: np.ndarray

    def __post_init__(self):
        pmf = _as_float_array(self.state_pmf, "state_pmf", 1)
        trans = _as_float_array(self.transition, "transition", 4)
        dist = _as_float_array(self.distortion, "distortion", 2)
        n1, n2, ns, ny = trans.shape
        _check_labels(self.input_alphabet_1, "input_alphabet_1", n1)
        _check_labels(self.input_alphabet_2, "input_alphabet_2", n2)
        _check_labels(self.state_alphabet, "state_alphabet", ns)
        _check_labels(self.output_alphabet, "output_alphabet", ny)
        if pmf.shape != (ns,):
            raise SpecError("state_pmf", f"length {pmf.shape[0]}, expected {ns}")
        _check_pmf(pmf, "state_pmf")
        for i, j, s in itertools.product(range(n1), range(n2), range(ns)):
            _check_pmf(trans[i, j, s], f"transition[{i}][{j}][{s}]")
        if dist.shape != (ns, ns):
            raise SpecError("distortion", f"shape {dist.shape}, expected {(ns, ns)}")
        if np.any(dist < 0):
            i, j = np.argwhere(dist < 0)[0]
            raise SpecError(f"distortion[{i}][{j}]", "negative distortion")
        for name, arr in (("state_pmf", pmf), ("transition", trans), ("distortion", dist)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return self.transition.shape

    @classmethod
    def from_arrays(cls, transition, state_pmf, distortion=None):
        trans = np.asarray(transition, dtype=float)
        n1, n2, ns, ny = trans.shape
        if distortion is None:
            distortion = 1.0 - np.eye(ns)
        labels = lambda n: [str(i) for i in range(n)]
        return cls(labels(n1), labels(n2), labels(ns), labels(ny),
                   np.asarray(state_pmf, float), trans, np.asarray(distortion, float))

    @classmethod
    def from_dict(cls, data: dict) -> "MacChannelSpec":
        if not isinstance(data, dict):
            raise SpecError("<root>", "top level must be a JSON object")
        keys = ("input_alphabet_1", "input_alphabet_2", "state_alphabet",
                "output_alphabet", "state_pmf", "transition", "distortion")
        for key in keys:
            if key not in data:
                raise SpecError(key, "missing required key")
        for key in keys[:4]:
            _check_labels(data[key], key)
        return cls(*(data[k] for k in keys))

    def to_dict(self) -> dict:
        return {
            "input_alphabet_1": list(self.input_alphabet_1),
            "input_alphabet_2": list(self.input_alphabet_2),
            "state_alphabet": list(self.state_alphabet),
            "output_alphabet": list(self.output_alphabet),
            "state_pmf": self.state_pmf.tolist(),
            "transition": self.transition.tolist(),
            "distortion": self.distortion.tolist(),
        }

    def as_single_user(self) -> ChannelSpec:
        """The channel seen by the pair (x1, x2) as one super-input."""
        n1, n2, ns, ny = self.shape
        return ChannelSpec(
            input_alphabet=[f"{a},{b}" for a in self.input_alphabet_1 for b in self.input_alphabet_2],
            state_alphabet=list(self.state_alphabet),
            output_alphabet=list(self.output_alphabet),
            state_pmf=self.state_pmf,
            transition=self.transition.reshape(n1 * n2, ns, ny),
            distortion=self.distortion,
        )


def load_mac_channel(path) -> MacChannelSpec:
    try:
        data = load_json(path)
    except ValueError as exc:
        raise SpecError("<root>", f"malformed JSON ({exc})") from None
    return MacChannelSpec.from_dict(data)


def mac_estimation_cost(spec: MacChannelSpec) -> np.ndarray:
    """``d*(x1, x2)`` as a matrix."""
    n1, n2 = spec.shape[:2]
    return estimation_profile(spec.as_single_user()).cost.reshape(n1, n2)


def marginal_mac(spec: MacChannelSpec) -> np.ndarray:
    return np.einsum("s,ijsy->ijy", spec.state_pmf, spec.transition)


def _pentagons(W: np.ndarray, d_star: np.ndarray, P1: np.ndarray, P2: np.ndarray):
    """Vectorised (I1, I2, I12, cost) for every pair of rows of P1 x P2."""
    h = entropy(W, axis=2)  # H(Y | x1, x2)
    cond = np.einsum("ai,bj,ij->ab", P1, P2, h)
    q = np.einsum("ai,bj,ijy->aby", P1, P2, W)
    i12 = entropy(q, axis=2) - cond
    q1 = np.einsum("ai,ijy->ajy", P1, W)  # output law given x2, user 1 random
    i1 = np.einsum("bj,aj->ab", P2, entropy(q1, axis=2)) - cond
    q2 = np.einsum("bj,ijy->biy", P2, W)
    i2 = np.einsum("ai,bi->ab", P1, entropy(q2, axis=2)) - cond
    cost = np.einsum("ai,bj,ij->ab", P1, P2, d_star)
    clip = lambda v: np.maximum(v, 0.0)
    return clip(i1), clip(i2), clip(i12), cost


def mac_pentagon(spec: MacChannelSpec, p_x1, p_x2) -> dict:
    """Mutual informations of the state-averaged MAC under a product input."""
    p1 = np.atleast_2d(np.asarray(p_x1, float))
    p2 = np.atleast_2d(np.asarray(p_x2, float))
    _check_pmf(p1[0], "p_x1")
    _check_pmf(p2[0], "p_x2")
    i1, i2, i12, cost = _pentagons(marginal_mac(spec), mac_estimation_cost(spec), p1, p2)
    return {"I1": float(i1[0, 0]), "I2": float(i2[0, 0]),
            "I12": float(i12[0, 0]), "avg_cost": float(cost[0, 0])}


def simplex_grid(k: int, steps: int) -> np.ndarray:
    """All PMFs on k symbols with entries in {0, 1/(steps-1), ..., 1}."""
    if steps < 2:
        raise ValueError("grid needs at least 2 points per dimension")
    n = steps - 1
    rows = []
    for cut in itertools.combinations(range(n + k - 1), k - 1):
        parts = np.diff((-1,) + cut + (n + k - 1,)) - 1
        rows.append(parts)
    return np.asarray(rows, dtype=float) / n


@dataclass(frozen=True)
class Atom:
    weight: float
    p_x1: tuple
    p_x2: tuple
    corner: int  # 1: user 1 decoded last (R1 = I1), 2: user 2 decoded last


@dataclass(frozen=True)
class BoundaryPoint:
    r1: float
    r2: float
    cost: float
    atoms: tuple


@dataclass
class MacRegion:
    D: float
    points: list
    grid_steps: int
    n_directions: int
    n_pairs: int

    def support(self, w1: float, w2: float) -> float:
        """max of w1 R1 + w2 R2 over the reported region."""
        return max(w1 * p.r1 + w2 * p.r2 for p in self.points)


class _Cloud:
    """Enumerated product-PMF pairs and their pentagon corners."""

    def __init__(self, spec: MacChannelSpec, grid_steps: int):
        n1, n2 = spec.shape[:2]
        self.P1 = simplex_grid(n1, grid_steps)
        self.P2 = simplex_grid(n2, grid_steps)
        pairs = len(self.P1) * len(self.P2)
        if pairs > MAX_PAIRS:
            raise ValueError(f"{pairs} PMF pairs exceed the budget of {MAX_PAIRS}; "
                             "reduce grid_steps")
        i1, i2, i12, cost = _pentagons(marginal_mac(spec), mac_estimation_cost(spec),
                                       self.P1, self.P2)
        self.n2 = len(self.P2)
        self.cost = cost.ravel()
        i1, i2, i12 = i1.ravel(), i2.ravel(), i12.ravel()
        # corner 1 = (I1, I12 - I1), corner 2 = (I12 - I2, I2)
        self.c1 = np.stack([i1, np.maximum(i12 - i1, 0.0)], axis=1)
        self.c2 = np.stack([np.maximum(i12 - i2, 0.0), i2], axis=1)

    def atom(self, k: int, corner: int, weight: float) -> Atom:
        a, b = divmod(int(k), self.n2)
        return Atom(float(weight), tuple(self.P1[a].tolist()), tuple(self.P2[b].tolist()), corner)

    def support_point(self, w: np.ndarray, D: float) -> Optional[BoundaryPoint]:
        """Maximise w.R over time-shared corners subject to mean cost <= D."""
        v1, v2 = self.c1 @ w, self.c2 @ w
        corner = np.where(v1 >= v2, 1, 2)
        g = np.maximum(v1, v2)
        hull = _upper_hull(self.cost, g)
        best = max(hull, key=lambda k: (g[k], -self.cost[k]))
        if self.cost[best] <= D:
            mix = [(best, 1.0)]
        else:
            # hull is increasing left of ``best``: interpolate at D
            hcost = self.cost[hull]
            pos = int(np.searchsorted(hcost, D, side="right"))
            if pos == 0:
                return None
            left, right = hull[pos - 1], hull[pos]
            if self.cost[left] == D:
                mix = [(left, 1.0)]
            else:
                theta = (self.cost[right] - D) / (self.cost[right] - self.cost[left])
                mix = [(left, theta), (right, 1.0 - theta)]
        atoms, r, c = [], np.zeros(2), 0.0
        for k, wt in mix:
            pt = self.c1[k] if corner[k] == 1 else self.c2[k]
            r += wt * pt
            c += wt * self.cost[k]
            atoms.append(self.atom(k, int(corner[k]), wt))
        return BoundaryPoint(float(r[0]), float(r[1]), float(c), tuple(atoms))


def _upper_hull(x: np.ndarray, y: np.ndarray) -> list:
    """Indices of the upper concave hull of points, sorted by x."""
    order = np.lexsort((-y, x))
    hull: list = []
    last_x = None
    for k in order:
        if last_x is not None and x[k] == last_x:
            continue  # keep only the highest point per abscissa
        last_x = x[k]
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[k] - y[o]) - (y[a] - y[o]) * (x[k] - x[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def _pareto(points: list, tol: float = 1e-12) -> list:
    pts = sorted(points, key=lambda p: (-p.r1, -p.r2))
    out: list = []
    best_r2 = -math.inf
    for p in pts:
        if p.r2 > best_r2 + tol:
            out.append(p)
            best_r2 = p.r2
    return sorted(out, key=lambda p: (p.r1, -p.r2))


def _directions(n: int, extra: Sequence = ()) -> list:
    eps = 1e-7
    angles = np.linspace(eps, math.pi / 2 - eps, n)
    dirs = [np.array([math.cos(t), math.sin(t)]) for t in angles]
    for w1, w2 in extra:
        dirs.append(np.array([w1, w2], dtype=float))
    return dirs


def mac_region_compute(spec: MacChannelSpec, D: float, grid_steps: int = DEFAULT_GRID,
                       n_directions: int = DEFAULT_DIRECTIONS,
                       extra_directions: Sequence = (), _cloud: Optional[_Cloud] = None) -> MacRegion:
    """Pareto boundary of the capacity-distortion region at distortion D."""
    if grid_steps < 10:
        raise ValueError("grid_steps must be >= 10")
    d_star = mac_estimation_cost(spec)
    if D < d_star.min() - 1e-12:
        from .solver import InfeasibleError
        raise InfeasibleError(f"D={D!r} below min d*={d_star.min()!r}")
    cloud = _cloud or _Cloud(spec, grid_steps)
    pts = []
    for w in _directions(n_directions, extra_directions):
        p = cloud.support_point(w, D)
        if p is not None:
            pts.append(p)
    boundary = _pareto(pts)
    # with a single-input user the boundary is a single point by construction
    if len(boundary) < 3 and min(spec.shape[:2]) > 1:
        warnings.warn(f"only {len(boundary)} boundary points at D={D!r}; grid may be too coarse",
                      RuntimeWarning, stacklevel=2)
    return MacRegion(float(D), boundary, grid_steps, n_directions, len(cloud.cost))


def mac_weighted_sum(spec: MacChannelSpec, D: float, w1: float, w2: float,
                     grid_steps: int = DEFAULT_GRID) -> BoundaryPoint:
    """Boundary point maximising w1 R1 + w2 R2."""
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise ValueError("weights must be nonnegative and not both zero")
    # tiny secondary weight picks the Pareto-optimal end among ties
    w = (w1 + 1e-9 * (w1 == 0), w2 + 1e-9 * (w2 == 0))
    region = mac_region_compute(spec, D, grid_steps, extra_directions=[w])
    return max(region.points, key=lambda p: w[0] * p.r1 + w[1] * p.r2)


def verify_certificate(spec: MacChannelSpec, point: BoundaryPoint) -> tuple[float, float, float]:
    """Recompute (R1, R2, cost) of a boundary point from its atoms."""
    r1 = r2 = cost = 0.0
    for atom in point.atoms:
        pent = mac_pentagon(spec, atom.p_x1, atom.p_x2)
        if atom.corner == 1:
            a, b = pent["I1"], max(pent["I12"] - pent["I1"], 0.0)
        else:
            a, b = max(pent["I12"] - pent["I2"], 0.0), pent["I2"]
        r1 += atom.weight * a
        r2 += atom.weight * b
        cost += atom.weight * pent["avg_cost"]
    return r1, r2, cost
