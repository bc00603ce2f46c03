"""Piecewise-linear paths, exact Chen signatures, and grid rough paths.

A piecewise-linear path is the only concrete path representation in the
package; its truncated signature over any interval is an exact (to round-off)
ordered product of segment exponentials, so every lift here is a genuine
group-valued path with multiplicative increments.

Holder norms and distances are suprema over the pairs of a finite grid; the
continuum suprema have no computable closed form, so experiments refine grids
to show stability instead.
"""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np

from .tensor import (
    GroupElement,
    TensorShape,
    TruncatedTensor,
    homogeneous_norm,
    tensor_mul,
)


class Dissection:
    """Strictly increasing time grid t_0 < ... < t_m (at least two points)."""

    __slots__ = ("times",)

    def __init__(self, times: Sequence[float]):
        arr = np.asarray(times, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("dissection needs at least two time points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dissection times must be finite")
        if not np.all(np.diff(arr) > 0.0):
            raise ValueError("dissection times must be strictly increasing")
        self.times = arr

    @classmethod
    def uniform(cls, t0: float, t1: float, n_intervals: int) -> "Dissection":
        return cls(np.linspace(t0, t1, n_intervals + 1))

    def refine(self, factor: int) -> "Dissection":
        """Insert factor-1 equally spaced points into every interval."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        t = self.times
        pieces = [np.linspace(t[i], t[i + 1], factor + 1)[:-1] for i in range(len(t) - 1)]
        return Dissection(np.concatenate(pieces + [t[-1:]]))

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    def __len__(self) -> int:
        return len(self.times)

    def __repr__(self):
        return f"Dissection({len(self.times)} pts on [{self.times[0]:g}, {self.times[-1]:g}])"


class PiecewisePath:
    """R^d-valued path, linear between breakpoints."""

    __slots__ = ("times", "values")

    def __init__(self, times, values):
        self.times = Dissection(times).times
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.times.size:
            raise ValueError(f"{vals.shape[0]} values for {self.times.size} breakpoints")
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")
        self.values = vals

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def value_at(self, t: float) -> np.ndarray:
        t0, t1 = self.span
        if t < t0 - 1e-12 or t > t1 + 1e-12:
            raise ValueError(f"time {t} outside path domain [{t0}, {t1}]")
        t = min(max(t, t0), t1)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 2)
        h = self.times[i + 1] - self.times[i]
        u = (t - self.times[i]) / h
        return (1.0 - u) * self.values[i] + u * self.values[i + 1]

    def segment_speeds(self) -> np.ndarray:
        """Euclidean speed on each linear segment (the 1-Holder norm there)."""
        dt = np.diff(self.times)
        dx = np.linalg.norm(np.diff(self.values, axis=0), axis=1)
        return dx / dt

    def __repr__(self):
        return f"PiecewisePath(d={self.d}, {len(self.times)} breakpoints on [{self.times[0]:g}, {self.times[-1]:g}])"


# -- Chen signatures ----------------------------------------------------------


def _segment_signature(delta: np.ndarray, shape: TensorShape) -> GroupElement:
    # Signature of one linear segment is exp(delta): level k = delta^(x)k / k!.
    levels = [np.array(1.0)]
    acc = np.array(1.0)
    for k in range(1, shape.N + 1):
        acc = np.multiply.outer(acc, delta) / k
        levels.append(acc)
    return GroupElement(TruncatedTensor(shape, levels))


def chen_signature(path: PiecewisePath, s: float, t: float, N: int) -> GroupElement:
    """Signature of the path over [s, t], depth N: the ordered product of
    segment exponentials, splitting partial segments exactly."""
    t0, t1 = path.span
    if s < t0 - 1e-12 or t > t1 + 1e-12 or s > t + 1e-12:
        raise ValueError(f"interval [{s}, {t}] outside path domain [{t0}, {t1}]")
    shape = TensorShape(path.d, N)
    if t <= s:
        return GroupElement.identity(shape)
    inner = (path.times > s) & (path.times < t)
    knots = np.concatenate(([s], path.times[inner], [t]))
    points = np.array([path.value_at(u) for u in knots])
    sig = GroupElement.identity(shape)
    for k in range(len(knots) - 1):
        sig = sig @ _segment_signature(points[k + 1] - points[k], shape)
    return sig


class GridRoughPath:
    """A dissection plus a group element at each grid time: the lift of a
    path evaluated on a grid, started at the identity at the first time."""

    __slots__ = ("grid", "elements", "shape")

    def __init__(self, grid: Dissection, elements: Sequence[GroupElement]):
        if len(elements) != len(grid):
            raise ValueError(f"{len(elements)} elements for {len(grid)} grid points")
        shape = elements[0].shape
        for g in elements:
            if g.shape != shape:
                raise ValueError("all elements must share one tensor shape")
        if not elements[0].allclose(GroupElement.identity(shape)):
            raise ValueError("grid rough path must start at the identity")
        self.grid = grid
        self.elements = list(elements)
        self.shape = shape

    def increment(self, i: int, j: int) -> GroupElement:
        """g_{t_i, t_j} = g_i^{-1} (x) g_j."""
        return self.elements[i].inverse() @ self.elements[j]

    def truncated(self, M: int) -> "GridRoughPath":
        """Drop levels above M (requires M <= N)."""
        if M > self.shape.N:
            raise ValueError(f"cannot truncate depth {self.shape.N} up to {M}")
        shp = TensorShape(self.shape.d, M)
        els = [GroupElement(TruncatedTensor(shp, g.tensor.levels[: M + 1])) for g in self.elements]
        return GridRoughPath(self.grid, els)

    def __repr__(self):
        return f"GridRoughPath(d={self.shape.d}, N={self.shape.N}, {len(self.grid)} grid pts)"


def lift_on_grid(path: PiecewisePath, grid: Dissection, N: int) -> GridRoughPath:
    """Running signatures of the path from the first grid time, at every
    grid time.  Chen's identity makes the result multiplicative exactly, and
    refining the grid leaves values at common times unchanged."""
    t0, t1 = path.span
    g0, g1 = grid.span
    if g0 < t0 - 1e-12 or g1 > t1 + 1e-12:
        raise ValueError(f"grid [{g0}, {g1}] escapes path domain [{t0}, {t1}]")
    shape = TensorShape(path.d, N)
    elements = [GroupElement.identity(shape)]
    for i in range(len(grid) - 1):
        step = chen_signature(path, grid.times[i], grid.times[i + 1], N)
        elements.append(elements[-1] @ step)
    return GridRoughPath(grid, elements)


# -- metrics ------------------------------------------------------------------


def cc_distance(g: GroupElement, h: GroupElement) -> float:
    """Homogeneous distance |g^{-1} (x) h|; symmetric, zero iff equal."""
    if g.shape != h.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {h.shape}")
    return homogeneous_norm(g.inverse() @ h)


def _check_common_grid(X: GridRoughPath, Y: GridRoughPath):
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    if len(X.grid) != len(Y.grid) or not np.allclose(X.grid.times, Y.grid.times, rtol=0.0, atol=1e-12):
        raise ValueError("grid mismatch: rough paths must share one grid")


def d_inf(X: GridRoughPath, Y: GridRoughPath) -> float:
    """Uniform distance over grid times."""
    _check_common_grid(X, Y)
    return max(cc_distance(g, h) for g, h in zip(X.elements, Y.elements))


def holder_norm(X: GridRoughPath, alpha: float) -> float:
    """sup over grid pairs s < t of |X_{s,t}| / (t - s)^alpha."""
    times = X.grid.times
    inv = [g.inverse() for g in X.elements]
    best = 0.0
    for i in range(len(times) - 1):
        for j in range(i + 1, len(times)):
            inc = inv[i] @ X.elements[j]
            best = max(best, homogeneous_norm(inc) / (times[j] - times[i]) ** alpha)
    return best


def d_holder(X: GridRoughPath, Y: GridRoughPath, gamma: float) -> float:
    """sup over grid pairs s < t of d(X_{s,t}, Y_{s,t}) / (t - s)^gamma."""
    _check_common_grid(X, Y)
    times = X.grid.times
    inv_x = [g.inverse() for g in X.elements]
    inv_y = [g.inverse() for g in Y.elements]
    best = 0.0
    for i in range(len(times) - 1):
        for j in range(i + 1, len(times)):
            gx = inv_x[i] @ X.elements[j]
            gy = inv_y[i] @ Y.elements[j]
            best = max(best, cc_distance(gx, gy) / (times[j] - times[i]) ** gamma)
    return best


def grid_p_variation(X: GridRoughPath, p: float) -> float:
    """p-variation over sub-partitions of the grid, by dynamic programming."""
    times = X.grid.times
    m = len(times)
    inv = [g.inverse() for g in X.elements]
    dist = [[0.0] * m for _ in range(m)]
    for i in range(m - 1):
        for j in range(i + 1, m):
            dist[i][j] = homogeneous_norm(inv[i] @ X.elements[j]) ** p
    best = [0.0] * m
    for j in range(1, m):
        best[j] = max(best[i] + dist[i][j] for i in range(j))
    return best[-1] ** (1.0 / p)


# -- path surgery -------------------------------------------------------------


def path_concat(a: PiecewisePath, b: PiecewisePath) -> PiecewisePath:
    """Concatenate in time; b must start where a ends (its breakpoints are
    translated onto a's endpoint so signatures compose exactly)."""
    if a.d != b.d:
        raise ValueError("paths must share one spatial dimension")
    gap = a.values[-1] - b.values[0]
    if float(np.max(np.abs(gap))) > 1e-9:
        raise ValueError(f"concat endpoint mismatch: |gap| = {np.max(np.abs(gap)):.3g}")
    times = np.concatenate([a.times, a.times[-1] + (b.times[1:] - b.times[0])])
    values = np.vstack([a.values, b.values[1:] + gap])
    return PiecewisePath(times, values)


def path_reverse(a: PiecewisePath) -> PiecewisePath:
    """Time reversal t -> t0 + t1 - t; the signature becomes the inverse."""
    t0, t1 = a.span
    return PiecewisePath(t0 + t1 - a.times[::-1], a.values[::-1])


def path_scale(a: PiecewisePath, c: float) -> PiecewisePath:
    """Spatial scaling; level-k signature terms scale by c**k."""
    return PiecewisePath(a.times, a.values * float(c))


def path_run_at_speed(a: PiecewisePath, interval: tuple[float, float]) -> PiecewisePath:
    """Affine reparametrization onto the given time interval (signatures are
    parametrization-invariant, so lifts are unchanged up to time labels)."""
    u0, u1 = interval
    if not u1 > u0:
        raise ValueError("target interval must have positive length")
    t0, t1 = a.span
    times = u0 + (a.times - t0) * ((u1 - u0) / (t1 - t0))
    times[-1] = u1  # pin the endpoint against round-off
    return PiecewisePath(times, a.values)


def path_sample_at(a: PiecewisePath, grid: Dissection) -> PiecewisePath:
    """Piecewise-linear path through a's values at the grid times."""
    return PiecewisePath(grid.times, np.array([a.value_at(t) for t in grid.times]))


def path_translate(a: PiecewisePath, offset: np.ndarray) -> PiecewisePath:
    return PiecewisePath(a.times, a.values + np.asarray(offset, dtype=float))


def path_restrict(a: PiecewisePath, s: float, t: float) -> PiecewisePath:
    """Restriction to [s, t], splitting partial segments exactly."""
    t0, t1 = a.span
    if s < t0 - 1e-12 or t > t1 + 1e-12 or not t > s:
        raise ValueError(f"bad restriction interval [{s}, {t}] for domain [{t0}, {t1}]")
    inner = (a.times > s) & (a.times < t)
    knots = np.concatenate(([s], a.times[inner], [t]))
    return PiecewisePath(knots, np.array([a.value_at(u) for u in knots]))


def levy_area(a: PiecewisePath) -> float:
    """Signed area of a planar path relative to its chord, i.e. the (1,2)
    coefficient of the log-signature at depth 2.  Fast vectorized form used
    by the Monte-Carlo experiments; pinned against chen_signature in tests.
    """
    if a.d != 2:
        raise ValueError("levy_area needs a planar path")
    rel = a.values - a.values[0]
    cross = rel[:-1, 0] * rel[1:, 1] - rel[:-1, 1] * rel[1:, 0]
    return 0.5 * float(np.sum(cross))


# -- CSV interface ------------------------------------------------------------


def write_path_csv(a: PiecewisePath, fp) -> None:
    """Write `t,x1,...,xd` rows, one per breakpoint, full precision."""
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp, "w")
        close = True
    try:
        fp.write("t," + ",".join(f"x{i}" for i in range(1, a.d + 1)) + "\n")
        for t, row in zip(a.times, a.values):
            fp.write(f"{float(t)!r}," + ",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if close:
            fp.close()


def read_path_csv(fp) -> PiecewisePath:
    """Read the path CSV format; rejects bad headers, ragged rows, and
    non-monotone time columns."""
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp, "r")
        close = True
    try:
        lines = [ln.strip() for ln in fp if ln.strip()]
    finally:
        if close:
            fp.close()
    if not lines:
        raise ValueError("empty path CSV")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "t" or len(header) < 2 or header[1:] != [f"x{i}" for i in range(1, len(header))]:
        raise ValueError(f"bad path CSV header: {lines[0]!r} (expected t,x1,...,xd)")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValueError(f"row has {len(parts)} fields, expected {len(header)}: {ln!r}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"non-numeric field in row {ln!r}") from exc
    data = np.array(rows)
    if data.shape[0] < 2:
        raise ValueError("path CSV needs at least two rows")
    if not np.all(np.diff(data[:, 0]) > 0.0):
        raise ValueError("path CSV time column must be strictly increasing")
    return PiecewisePath(data[:, 0], data[:, 1:])


def path_from_csv_text(text: str) -> PiecewisePath:
    return read_path_csv(io.StringIO(text))
