"""Exact arithmetic in the truncated tensor algebra T^N(R^d) and the free
nilpotent group G^N(R^d).

A truncated tensor is stored densely, one numpy array per level: level k has
shape ``(d,)*k`` and the coefficient of the basis word
``e_{i1} (x) ... (x) e_{ik}`` (letters in ``{1, ..., d}``) sits at array index
``(i1-1, ..., ik-1)``.  Flattened in C order this is the base-d digit
convention; it is the single indexing rule used throughout the package and is
pinned by tests.

All values are immutable by convention: no operation mutates its inputs, so
everything here is safe to share between concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Tolerance for identities that are pure round-off (associativity, Chen, ...).
ATOL_ALGEBRA = 1e-12
# Tolerance for identities routed through log (Lie membership, centrality).
ATOL_LIE = 1e-10


@dataclass(frozen=True)
class TensorShape:
    """Ambient dimensions: d driving directions, truncation depth N.

    Level k of T^N(R^d) holds exactly d**k coefficients.  The supported
    envelope is small (N <= 6, d <= 4); storage is dense by design.
    """

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise ValueError(f"need d >= 1 and N >= 1, got d={self.d}, N={self.N}")

    def level_shape(self, k: int) -> tuple[int, ...]:
        return (self.d,) * k

    def words(self, k: int) -> Iterable[tuple[int, ...]]:
        """All words of length k, letters in {1, ..., d}."""
        for idx in np.ndindex(self.level_shape(k)):
            yield tuple(i + 1 for i in idx)


def _word_index(word: Sequence[int]) -> tuple[int, ...]:
    return tuple(i - 1 for i in word)


class TruncatedTensor:
    """Element of T^N(R^d), a graded coefficient table.

    ``levels[k]`` is an ndarray of shape ``(d,)*k`` (a 0-d array at k = 0).
    """

    __slots__ = ("shape", "levels")

    def __init__(self, shape: TensorShape, levels: Sequence[np.ndarray]):
        if len(levels) != shape.N + 1:
            raise ValueError(f"expected {shape.N + 1} levels, got {len(levels)}")
        clean = []
        for k, lvl in enumerate(levels):
            arr = np.asarray(lvl, dtype=float)
            if arr.shape != shape.level_shape(k):
                raise ValueError(f"level {k} has shape {arr.shape}, expected {shape.level_shape(k)}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"level {k} contains non-finite coefficients")
            clean.append(arr)
        self.shape = shape
        self.levels = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, shape: TensorShape) -> "TruncatedTensor":
        return cls(shape, [np.zeros(shape.level_shape(k)) for k in range(shape.N + 1)])

    @classmethod
    def unit(cls, shape: TensorShape) -> "TruncatedTensor":
        t = cls.zero(shape)
        t.levels[0] = np.array(1.0)
        return t

    @classmethod
    def basis(cls, shape: TensorShape, letter: int) -> "TruncatedTensor":
        """The generator e_letter, letter in {1, ..., d}."""
        if not 1 <= letter <= shape.d:
            raise ValueError(f"letter {letter} outside 1..{shape.d}")
        t = cls.zero(shape)
        t.levels[1][letter - 1] = 1.0
        return t

    @classmethod
    def from_word(cls, shape: TensorShape, word: Sequence[int], coeff: float = 1.0) -> "TruncatedTensor":
        """coeff times the basis word e_{w1} (x) ... (x) e_{wk}."""
        k = len(word)
        if k > shape.N:
            raise ValueError(f"word {tuple(word)} longer than depth {shape.N}")
        t = cls.zero(shape)
        if k == 0:
            t.levels[0] = np.array(float(coeff))
        else:
            t.levels[k][_word_index(word)] = float(coeff)
        return t

    # -- basic access ------------------------------------------------------

    def coeff(self, word: Sequence[int]) -> float:
        """Coefficient of the basis word (empty word gives level 0)."""
        k = len(word)
        if k == 0:
            return float(self.levels[0])
        return float(self.levels[k][_word_index(word)])

    def level_norms(self) -> np.ndarray:
        """Euclidean norm of each level, index 0..N."""
        return np.array([float(np.linalg.norm(lvl.ravel())) for lvl in self.levels])

    def copy(self) -> "TruncatedTensor":
        return TruncatedTensor(self.shape, [lvl.copy() for lvl in self.levels])

    # -- linear structure ---------------------------------------------------

    def __add__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        self._check_shape(other)
        return TruncatedTensor(self.shape, [a + b for a, b in zip(self.levels, other.levels)])

    def __sub__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        self._check_shape(other)
        return TruncatedTensor(self.shape, [a - b for a, b in zip(self.levels, other.levels)])

    def __mul__(self, c: float) -> "TruncatedTensor":
        return TruncatedTensor(self.shape, [lvl * float(c) for lvl in self.levels])

    __rmul__ = __mul__

    def __neg__(self) -> "TruncatedTensor":
        return self * -1.0

    def __matmul__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return tensor_mul(self, other)

    def allclose(self, other: "TruncatedTensor", atol: float = ATOL_ALGEBRA) -> bool:
        self._check_shape(other)
        return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.levels, other.levels))

    def max_abs_difference(self, other: "TruncatedTensor") -> float:
        self._check_shape(other)
        return max(float(np.max(np.abs(a - b))) if a.size else 0.0
                   for a, b in zip(self.levels, other.levels))

    def _check_shape(self, other: "TruncatedTensor"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __repr__(self):
        norms = ", ".join(f"{n:.3g}" for n in self.level_norms())
        return f"TruncatedTensor(d={self.shape.d}, N={self.shape.N}, |levels|=[{norms}])"


class GroupElement:
    """Group-like truncated tensor: level 0 equals 1 and log passes the Lie
    test.  Only the level-0 condition is enforced at construction; the Lie
    condition is semantic and checked by :func:`is_lie` where tests need it.
    """

    __slots__ = ("tensor",)

    def __init__(self, tensor: TruncatedTensor):
        if abs(float(tensor.levels[0]) - 1.0) > ATOL_ALGEBRA:
            raise ValueError("group element must have level-0 coefficient 1")
        self.tensor = tensor

    @property
    def shape(self) -> TensorShape:
        return self.tensor.shape

    @classmethod
    def identity(cls, shape: TensorShape) -> "GroupElement":
        return cls(TruncatedTensor.unit(shape))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(tensor_mul(self.tensor, other.tensor))

    def inverse(self) -> "GroupElement":
        return group_inverse(self)

    def log(self) -> TruncatedTensor:
        return tensor_log(self)

    def norm(self) -> float:
        return homogeneous_norm(self)

    def allclose(self, other: "GroupElement", atol: float = ATOL_ALGEBRA) -> bool:
        return self.tensor.allclose(other.tensor, atol=atol)

    def __repr__(self):
        return f"GroupElement({self.tensor!r})"


class LieElement:
    """Tensor with zero level 0; with ``top_level_only`` set, levels
    1..N-1 must vanish as well (these exponentiate into the center of G^N).
    Full Lie membership is the Dynkin condition, checked by :func:`is_lie`.
    """

    __slots__ = ("tensor", "top_level_only")

    def __init__(self, tensor: TruncatedTensor, top_level_only: bool = False):
        if float(tensor.levels[0]) != 0.0:
            raise ValueError("Lie element must have zero level-0 coefficient")
        if top_level_only:
            for k in range(1, tensor.shape.N):
                if np.any(tensor.levels[k] != 0.0):
                    raise ValueError(f"top-level-only element has nonzero level {k}")
        self.tensor = tensor
        self.top_level_only = top_level_only

    @property
    def shape(self) -> TensorShape:
        return self.tensor.shape

    def validate(self, tol: float = ATOL_LIE) -> bool:
        return is_lie(self.tensor, tol)

    def __repr__(self):
        return f"LieElement({self.tensor!r}, top_level_only={self.top_level_only})"


# -- ring and group operations ----------------------------------------------


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product: level k of the result collects all splits
    i + j = k; levels above N are discarded."""
    a._check_shape(b)
    N = a.shape.N
    out = [np.zeros(a.shape.level_shape(k)) for k in range(N + 1)]
    for i in range(N + 1):
        ai = a.levels[i]
        if not np.any(ai):
            continue
        for j in range(N + 1 - i):
            bj = b.levels[j]
            if not np.any(bj):
                continue
            out[i + j] = out[i + j] + np.multiply.outer(ai, bj)
    return TruncatedTensor(a.shape, out)


def tensor_exp(x: TruncatedTensor) -> GroupElement:
    """exp of a tensor with zero level 0; a finite sum by nilpotency."""
    if float(x.levels[0]) != 0.0:
        raise ValueError("tensor_exp requires zero level-0 coefficient")
    N = x.shape.N
    acc = TruncatedTensor.unit(x.shape)
    for k in range(N, 0, -1):
        acc = TruncatedTensor.unit(x.shape) + tensor_mul(x, acc) * (1.0 / k)
    return GroupElement(acc)


def tensor_log(g: GroupElement | TruncatedTensor) -> TruncatedTensor:
    """Mercator series log of a group element; inverse of tensor_exp."""
    t = g.tensor if isinstance(g, GroupElement) else g
    if abs(float(t.levels[0]) - 1.0) > ATOL_ALGEBRA:
        raise ValueError("tensor_log requires level-0 coefficient 1")
    u = t - TruncatedTensor.unit(t.shape)
    u.levels[0] = np.array(0.0)
    N = t.shape.N
    # Horner form of sum_k (-1)^(k+1) u^k / k.
    inner = TruncatedTensor.unit(t.shape) * ((-1.0) ** (N + 1) / N)
    for k in range(N - 1, 0, -1):
        inner = TruncatedTensor.unit(t.shape) * ((-1.0) ** (k + 1) / k) + tensor_mul(u, inner)
    return tensor_mul(u, inner)


def group_inverse(g: GroupElement) -> GroupElement:
    """Inverse in G^N via the Neumann series of (1 + u)^-1; agrees with
    exp(-log g)."""
    u = g.tensor - TruncatedTensor.unit(g.shape)
    u.levels[0] = np.array(0.0)
    acc = TruncatedTensor.unit(g.shape)
    for _ in range(g.shape.N):
        acc = TruncatedTensor.unit(g.shape) - tensor_mul(u, acc)
    return GroupElement(acc)


def dilate(g: GroupElement, c: float) -> GroupElement:
    """Grading automorphism delta_c: level k scales by c**k."""
    levels = [lvl * float(c) ** k for k, lvl in enumerate(g.tensor.levels)]
    return GroupElement(TruncatedTensor(g.shape, levels))


def homogeneous_norm(g: GroupElement) -> float:
    """Computable homogeneous norm, max_k |log(g) level k|_2^(1/k).

    Equivalent to the Carnot-Caratheodory norm (no convergence constant in
    this package depends on the equivalence factors).  It is symmetric in g
    and its inverse, since log(g^-1) = -log(g), vanishes exactly at the
    identity, and is exactly 1-homogeneous under dilation.
    """
    x = tensor_log(g)
    # Levels at round-off scale are treated as exact zeros; the 1/k-th root
    # would otherwise blow float noise in a numerically-identity element up
    # to ~1e-5.  The floor is relative to the element's own magnitude.
    floor = 1e-13 * max(1.0, max(float(np.max(np.abs(lvl))) for lvl in g.tensor.levels))
    best = 0.0
    for k in range(1, g.shape.N + 1):
        nk = float(np.linalg.norm(x.levels[k].ravel()))
        if nk > floor:
            best = max(best, nk ** (1.0 / k))
    return best


def lie_bracket(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """[a, b] = a (x) b - b (x) a, truncated."""
    return tensor_mul(a, b) - tensor_mul(b, a)


def bracket_word_tensor(word: Sequence[int], shape: TensorShape) -> LieElement:
    """Tensor expansion of the right-normed bracket word

        e_word = [e_{w_k}, [e_{w_{k-1}}, ..., [e_{w_2}, e_{w_1}]]],

    homogeneous of degree k = len(word).  Note the reversed nesting: the
    first letter of the word sits innermost.
    """
    word = tuple(word)
    if not 1 <= len(word) <= shape.N:
        raise ValueError(f"word length {len(word)} outside 1..{shape.N}")
    for i in word:
        if not 1 <= i <= shape.d:
            raise ValueError(f"letter {i} outside 1..{shape.d}")
    t = TruncatedTensor.basis(shape, word[0])
    for letter in word[1:]:
        t = lie_bracket(TruncatedTensor.basis(shape, letter), t)
    return LieElement(t, top_level_only=(len(word) == shape.N))


def _dynkin_level(arr: np.ndarray, d: int) -> np.ndarray:
    # Right-normed bracketing r(e_{w1}...e_{wk}) = [e_{w1}, r(e_{w2}...e_{wk})],
    # extended linearly; recursion peels the first tensor slot.
    if arr.ndim <= 1:
        return arr.copy()
    out = np.zeros_like(arr)
    for i in range(d):
        inner = _dynkin_level(arr[i], d)
        out[i] += inner
        out[..., i] -= inner
    return out


def dynkin_project(x: TruncatedTensor) -> TruncatedTensor:
    """Dynkin right-normed bracketing map, applied level by level.

    On a Lie element each homogeneous level k is an eigenvector with
    eigenvalue k (Dynkin-Specht-Wever); that is the executable Lie test.
    """
    levels = [np.zeros(())] + [_dynkin_level(x.levels[k], x.shape.d) for k in range(1, x.shape.N + 1)]
    return TruncatedTensor(x.shape, levels)


def is_lie(x: TruncatedTensor, tol: float = ATOL_LIE) -> bool:
    """Dynkin test: level k of x satisfies rho(x_k) = k * x_k within tol
    (scaled by the level magnitude), and level 0 vanishes."""
    if abs(float(x.levels[0])) > tol:
        return False
    for k in range(1, x.shape.N + 1):
        xk = x.levels[k]
        resid = _dynkin_level(xk, x.shape.d) - k * xk
        scale = max(1.0, float(np.max(np.abs(xk))) if xk.size else 0.0)
        if xk.size and float(np.max(np.abs(resid))) > tol * scale:
            return False
    return True


def is_central(g: GroupElement, tol: float = ATOL_LIE) -> bool:
    """True iff g lies in the center of G^N.

    In the step-N truncation the center is exp of the top graded component,
    so the test is that log(g) vanishes on levels 1..N-1; it is cross-checked
    by commuting g against the generator exponentials exp(e_i), which
    generate the group.
    """
    shape = g.shape
    if shape.d == 1:
        return True  # one generator: the group is abelian
    x = tensor_log(g)
    for k in range(1, shape.N):
        if float(np.max(np.abs(x.levels[k]))) > tol:
            return False
    scale = max(1.0, float(np.max(np.abs(g.tensor.levels[shape.N]))))
    for i in range(1, shape.d + 1):
        h = tensor_exp(TruncatedTensor.basis(shape, i))
        resid = (g @ h).tensor - (h @ g).tensor
        if float(max(np.max(np.abs(lvl)) for lvl in resid.levels)) > tol * scale:
            return False
    return True
