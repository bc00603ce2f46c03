"""Non-standard approximations of rough drivers.

Three constructions live here:

* commutator loops whose step-N signature realizes a prescribed central
  group element exactly (the computable stand-in for geodesic loops),
* the chord-plus-loop interpolation that runs each chord at double speed and
  spends the second half-interval on such a loop,
* the two-dimensional interpolation through a fixed function phi with
  component swapping on sign changes, whose area bias accumulates linearly.

Plus the machinery that makes the limit theorems executable: perturbation
extraction, centrality/growth condition measurements, and central
perturbations of grid rough paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .paths import (
    Dissection,
    GridRoughPath,
    PiecewisePath,
    levy_area,
    lift_on_grid,
)
from .tensor import (
    ATOL_LIE,
    GroupElement,
    LieElement,
    TensorShape,
    TruncatedTensor,
    _dynkin_level,
    is_central,
    tensor_exp,
)


class PerturbationSpec:
    """Central perturbation direction: a Lie element concentrated in the top
    graded level, so its exponentials lie in the center of G^N."""

    __slots__ = ("v", "shape")

    def __init__(self, v: LieElement | TruncatedTensor):
        tensor = v.tensor if isinstance(v, LieElement) else v
        lie = LieElement(tensor, top_level_only=True)  # validates lower levels
        if tensor.shape.N < 2:
            raise ValueError("central perturbations need depth N >= 2")
        top = tensor.levels[tensor.shape.N]
        resid = _dynkin_level(top, tensor.shape.d) - tensor.shape.N * top
        if float(np.max(np.abs(resid))) > ATOL_LIE * max(1.0, float(np.max(np.abs(top)))):
            raise ValueError("perturbation tensor fails the Lie (Dynkin) test")
        self.v = lie
        self.shape = tensor.shape

    @classmethod
    def from_bracket_word(cls, word: Sequence[int], d: int, coeff: float = 1.0) -> "PerturbationSpec":
        from .tensor import bracket_word_tensor

        shape = TensorShape(d, len(word))
        return cls(bracket_word_tensor(word, shape).tensor * float(coeff))

    def exp(self, scale: float = 1.0) -> GroupElement:
        return tensor_exp(self.v.tensor * float(scale))

    # -- JSON wire format: list of {"word": [i1,...,iN], "coeff": c} --------

    def to_json(self) -> str:
        N = self.shape.N
        top = self.v.tensor.levels[N]
        entries = []
        for idx in np.argwhere(top != 0.0):
            word = [int(i) + 1 for i in idx]
            entries.append({"word": word, "coeff": float(top[tuple(idx)])})
        return json.dumps(entries)

    @classmethod
    def from_json(cls, text: str, d: int | None = None) -> "PerturbationSpec":
        entries = json.loads(text)
        if not entries:
            raise ValueError("empty perturbation JSON")
        lengths = {len(e["word"]) for e in entries}
        if len(lengths) != 1:
            raise ValueError("all perturbation words must share one length")
        N = lengths.pop()
        letters = [i for e in entries for i in e["word"]]
        d = d if d is not None else max(letters)
        if min(letters) < 1 or max(letters) > d:
            raise ValueError(f"word letters outside 1..{d}")
        shape = TensorShape(d, N)
        t = TruncatedTensor.zero(shape)
        for e in entries:
            t.levels[N][tuple(i - 1 for i in e["word"])] += float(e["coeff"])
        return cls(t)


# -- central commutator loops -------------------------------------------------


def _bracket_word_steps(word: Sequence[int], d: int) -> list[np.ndarray]:
    # Unit steps of the commutator loop for the right-normed bracket word:
    # P(e_i) is one segment, P([e_j, w]) = P(e_j) P(w) P(e_j)^- P(w)^-.
    if len(word) == 1:
        e = np.zeros(d)
        e[word[0] - 1] = 1.0
        return [e]
    head = _bracket_word_steps(word[-1:], d)
    tail = _bracket_word_steps(word[:-1], d)
    reverse = lambda steps: [-s for s in reversed(steps)]
    return head + tail + reverse(head) + reverse(tail)


def central_loop(v: PerturbationSpec, lam: float) -> PiecewisePath:
    """Closed piecewise-linear loop on [0, 1] whose depth-N Chen signature is
    exp(lam * v) exactly (to round-off).

    Each word of v contributes one commutator loop for the reversed
    (right-normed) bracket word, weighted 1/N by the Dynkin eigenvalue;
    spatial dilation by (lam |coeff|)^(1/N) places the weight in the top
    level only, since every correction term has degree above N and truncates
    away.  The loop runs at constant speed.
    """
    if lam <= 0.0:
        raise ValueError("loop weight lam must be positive")
    shape = v.shape
    d, N = shape.d, shape.N
    top = v.v.tensor.levels[N]
    steps: list[np.ndarray] = []
    for idx in np.argwhere(top != 0.0):
        coeff = float(top[tuple(idx)]) / N
        word = tuple(int(i) + 1 for i in idx)
        word_steps = _bracket_word_steps(tuple(reversed(word)), d)
        factor = (lam * abs(coeff)) ** (1.0 / N)
        if coeff < 0.0:
            word_steps = [-s for s in reversed(word_steps)]
        steps.extend(factor * s for s in word_steps)
    if not steps:
        return PiecewisePath([0.0, 1.0], np.zeros((2, d)))
    values = np.vstack([np.zeros(d), np.cumsum(steps, axis=0)])
    values[-1] = 0.0  # structurally closed; snap away cumsum round-off
    lengths = np.linalg.norm(steps, axis=1)
    times = np.concatenate(([0.0], np.cumsum(lengths) / np.sum(lengths)))
    times[-1] = 1.0
    return PiecewisePath(times, values)


def loop_length(v: PerturbationSpec, lam: float) -> float:
    """Arc length of central_loop(v, lam); scales like lam**(1/N)."""
    loop = central_loop(v, lam)
    return float(np.sum(np.linalg.norm(np.diff(loop.values, axis=0), axis=1)))


# -- chord-plus-loop approximation ---------------------------------------------


def sussmann_approx(x: PiecewisePath, D: Dissection, v: PerturbationSpec) -> PiecewisePath:
    """Chord-plus-loop approximation on the dissection D.

    On each interval [a, b] the path runs the linear chord from x(a) to
    x(b) at double speed, reaching x(b) by the midpoint, then spends the
    second half on a central loop realizing exp(v * (b - a)), translated to
    start at x(b).  It matches x at every dissection point, and the lifted
    increments between dissection points pick up exactly exp(v (t - s)).
    """
    if x.d != v.shape.d:
        raise ValueError(f"path dimension {x.d} does not match perturbation d={v.shape.d}")
    t0, t1 = x.span
    if D.times[0] < t0 - 1e-12 or D.times[-1] > t1 + 1e-12:
        raise ValueError("dissection escapes the sample path domain")
    ev = v.exp()
    if not is_central(ev):
        raise ValueError("perturbation exponential is not central")
    times = [np.array([D.times[0]])]
    values = [x.value_at(D.times[0])[None, :]]
    for a, b in zip(D.times[:-1], D.times[1:]):
        mid = 0.5 * (a + b)
        xb = x.value_at(b)
        loop = central_loop(v, b - a)
        # chord at double speed, then the loop on the second half-interval
        seg_times = np.concatenate(([mid], mid + (b - mid) * loop.times[1:]))
        seg_times[-1] = b
        seg_values = np.vstack([xb, loop.values[1:] + xb])
        times.append(seg_times)
        values.append(seg_values)
    return PiecewisePath(np.concatenate(times), np.vstack(values))


# -- interpolation functions and the planar swap construction ------------------


class InterpolationFunction:
    """C^1 interpolation function phi = (phi1, phi2) on [0, 1] with
    phi(0) = (0, 0) and phi(1) = (1, 1), ingested as a fine piecewise-linear
    path so that areas and signatures stay exact for the represented path."""

    __slots__ = ("path", "area")

    def __init__(self, path: PiecewisePath):
        if path.d != 2:
            raise ValueError("interpolation function must be planar")
        if abs(path.times[0]) > 1e-12 or abs(path.times[-1] - 1.0) > 1e-12:
            raise ValueError("interpolation function must be parametrized on [0, 1]")
        if float(np.max(np.abs(path.values[0]))) > 1e-12:
            raise ValueError("interpolation function must start at (0, 0)")
        if float(np.max(np.abs(path.values[-1] - 1.0))) > 1e-12:
            raise ValueError("interpolation function must end at (1, 1)")
        self.path = path
        self.area = levy_area(path)

    @classmethod
    def from_sampler(cls, f: Callable[[np.ndarray], np.ndarray], n_segments: int = 256) -> "InterpolationFunction":
        """Sample a formula phi(u) on a uniform grid of n_segments pieces."""
        u = np.linspace(0.0, 1.0, n_segments + 1)
        vals = np.asarray(f(u), dtype=float)
        if vals.shape != (n_segments + 1, 2):
            vals = np.stack([np.asarray(f(np.array([ui])), dtype=float).ravel() for ui in u])
        return cls(PiecewisePath(u, vals))

    @classmethod
    def diagonal(cls) -> "InterpolationFunction":
        """phi(u) = (u, u): plain linear interpolation, zero area."""
        return cls(PiecewisePath([0.0, 1.0], [[0.0, 0.0], [1.0, 1.0]]))

    def area_increment(self, u: float, v: float) -> float:
        """Signed area of phi over [u, v] relative to its chord."""
        if not 0.0 <= u <= v <= 1.0:
            raise ValueError("need 0 <= u <= v <= 1")
        if v - u < 1e-15:
            return 0.0
        inner = (self.path.times > u) & (self.path.times < v)
        knots = np.concatenate(([u], self.path.times[inner], [v]))
        pts = np.array([self.path.value_at(w) for w in knots])
        return levy_area(PiecewisePath(knots, pts))


def _interp_values(x: PiecewisePath, times: np.ndarray) -> np.ndarray:
    return np.stack([np.interp(times, x.times, x.values[:, j]) for j in range(x.d)], axis=1)


def _mcshane_value_blocks(xa: np.ndarray, phi_vals: np.ndarray) -> np.ndarray:
    # per-interval interpolated values, shape (intervals, phi breakpoints, 2);
    # phi's components swap wherever the increment product is negative
    dx = np.diff(xa, axis=0)
    swap = dx[:, 0] * dx[:, 1] < 0.0
    sel = np.where(swap[:, None, None], phi_vals[None, :, ::-1], phi_vals[None, :, :])
    return xa[:-1, None, :] + sel * dx[:, None, :]


def mcshane_interpolate(x: PiecewisePath, D: Dissection, phi: InterpolationFunction) -> PiecewisePath:
    """Planar interpolation of x's dissection values through phi, swapping
    the two components of phi on intervals where the increment product
    x1 * x2 is negative.  The output grid refines D by phi's breakpoints."""
    if x.d != 2:
        raise ValueError("the swap interpolation is defined for planar paths only")
    t0, t1 = x.span
    if D.times[0] < t0 - 1e-12 or D.times[-1] > t1 + 1e-12:
        raise ValueError("dissection escapes the sample path domain")
    xa = _interp_values(x, D.times)
    values = _mcshane_value_blocks(xa, phi.path.values)
    u = phi.path.times
    ta, dt = D.times[:-1], np.diff(D.times)
    times = ta[:, None] + u[None, :] * dt[:, None]
    # stitch intervals, dropping each interval's duplicated left endpoint
    out_times = np.concatenate([times[0]] + [row[1:] for row in times[1:]])
    out_values = np.vstack([values[0]] + [blk[1:] for blk in values[1:]])
    out_times[-1] = D.times[-1]
    return PiecewisePath(out_times, out_values)


def mcshane_block_areas(xa: np.ndarray, phi: InterpolationFunction) -> np.ndarray:
    """Signed area of each interval's interpolated piece relative to its own
    start, vectorized across intervals.  Summed, this is exactly the area
    mismatch between the interpolation and the chord path, since chord-
    polygon contributions cancel in the difference (pinned against the
    chen_signature route in tests)."""
    blocks = _mcshane_value_blocks(np.asarray(xa, dtype=float), phi.path.values)
    rel = blocks - blocks[:, :1, :]
    cross = rel[:, :-1, 0] * rel[:, 1:, 1] - rel[:, :-1, 1] * rel[:, 1:, 0]
    return 0.5 * np.sum(cross, axis=1)


# -- perturbation extraction and condition checks ------------------------------


def extract_perturbation(xn: PiecewisePath, xD: PiecewisePath, grid: Dissection, N: int) -> GridRoughPath:
    """Per grid time, S_N(xn)_{0,t} (x) S_N(xD)_{0,t}^{-1}: the group-valued
    mismatch between the approximation and the plain chord path."""
    Xn = lift_on_grid(xn, grid, N)
    XD = lift_on_grid(xD, grid, N)
    elements = [g @ h.inverse() for g, h in zip(Xn.elements, XD.elements)]
    return GridRoughPath(grid, elements)


@dataclass
class ConditionReport:
    """Measured constants for the per-interval speed bound

        |xn|_{1-Hol;I} <= c1 |xD|_{1-Hol;I} + c2 |I|^(beta-1)

    and the perturbation growth bound |p_{s,t}| <= c3 |t-s|^beta on grid
    pairs.  c1_observed is the raw worst speed ratio (inf when a chord
    degenerates), c2_observed is the smallest c2 that works with the
    supplied c1, c3_observed the worst perturbation ratio."""

    beta: float
    c1_observed: float
    c2_observed: float
    c3_observed: float
    interval_speeds: np.ndarray
    chord_speeds: np.ndarray
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    pass_speed: bool | None = None
    pass_perturbation: bool | None = None

    @property
    def passed(self) -> bool:
        checks = [p for p in (self.pass_speed, self.pass_perturbation) if p is not None]
        return bool(checks) and all(checks)


def _interval_max_speeds(xn: PiecewisePath, D: Dissection) -> np.ndarray:
    speeds = xn.segment_speeds()
    seg_lo, seg_hi = xn.times[:-1], xn.times[1:]
    out = np.zeros(len(D.times) - 1)
    for i, (a, b) in enumerate(zip(D.times[:-1], D.times[1:])):
        mask = (seg_hi > a + 1e-15) & (seg_lo < b - 1e-15)
        out[i] = float(np.max(speeds[mask])) if np.any(mask) else 0.0
    return out


def check_condition_i(
    xn: PiecewisePath,
    xD: PiecewisePath,
    D: Dissection,
    beta: float,
    c1: float | None = None,
    c2: float | None = None,
    c3: float | None = None,
    N: int | None = None,
) -> ConditionReport:
    """Measure the smallest constants for the speed and perturbation growth
    conditions; flags pass/fail against any supplied constants."""
    if N is None:
        N = max(2, round(1.0 / beta))
    dts = np.diff(D.times)
    speeds_n = _interval_max_speeds(xn, D)
    chords = np.array([xD.value_at(b) - xD.value_at(a) for a, b in zip(D.times[:-1], D.times[1:])])
    speeds_d = np.linalg.norm(chords, axis=1) / dts
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(speeds_d > 0.0, speeds_n / speeds_d, np.where(speeds_n > 0.0, np.inf, 1.0))
    c1_obs = float(np.max(ratios))
    c1_eff = c1 if c1 is not None else 2.0
    c2_obs = float(np.max(np.maximum(speeds_n - c1_eff * speeds_d, 0.0) * dts ** (1.0 - beta)))
    p = extract_perturbation(xn, xD, D, N)
    times = D.times
    c3_obs = 0.0
    for i in range(len(times) - 1):
        for j in range(i + 1, len(times)):
            c3_obs = max(c3_obs, p.increment(i, j).norm() / (times[j] - times[i]) ** beta)
    report = ConditionReport(
        beta=beta,
        c1_observed=c1_obs,
        c2_observed=c2_obs,
        c3_observed=c3_obs,
        interval_speeds=speeds_n,
        chord_speeds=speeds_d,
        c1=c1,
        c2=c2,
        c3=c3,
    )
    if c1 is not None and c2 is not None:
        bound = c1 * speeds_d + c2 * dts ** (beta - 1.0)
        report.pass_speed = bool(np.all(speeds_n <= bound * (1.0 + 1e-12) + 1e-12))
    if c3 is not None:
        report.pass_perturbation = bool(c3_obs <= c3 * (1.0 + 1e-12))
    return report


def perturbed_driver(X: GridRoughPath, v: PerturbationSpec) -> GridRoughPath:
    """Multiply a central drift into the driver: increments become
    exp(log g_{s,t} + v (t - s)), which stays multiplicative exactly because
    the perturbation exponentials commute with everything."""
    if X.shape.d != v.shape.d:
        raise ValueError(f"driver d={X.shape.d} does not match perturbation d={v.shape.d}")
    if X.shape.N < v.shape.N:
        raise ValueError(f"driver depth {X.shape.N} below perturbation depth {v.shape.N}")
    if X.shape.N > v.shape.N:
        X = X.truncated(v.shape.N)
    ev = v.exp()
    if not is_central(ev):
        raise ValueError("perturbation exponential is not central")
    t0 = X.grid.times[0]
    elements = [g @ v.exp(t - t0) for g, t in zip(X.elements, X.grid.times)]
    return GridRoughPath(X.grid, elements)
