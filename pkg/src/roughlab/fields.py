"""Vector fields on R^e with derivative oracles.

A field exposes its value and, up to a requested order, its k-th derivative
tensor applied to k direction vectors.  Built-in families (linear fields, the
bounded trigonometric bracket ladder, the nilpotent matrix ladder) carry
analytic derivatives; anything else falls back to nested central finite
differences, which is accurate enough for the desk-scale checks here.

The iterated-operator words V_{w1} ... V_{wk} I act with the *last* letter
innermost: (V_i f)(y) = Df(y) . V_i(y), so the word (i, j) evaluates to
DV_j(y) . V_i(y).  This convention is pinned by the Taylor-match tests of the
step-N scheme against classical ODE solutions.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .approx import PerturbationSpec
from .tensor import TensorShape, bracket_word_tensor

FD_STEP = 1e-5


class VectorField:
    """Base field: subclasses override value(), and deriv() when analytic
    derivatives are available; the default deriv() nests central finite
    differences (step 1e-5, scaled by state magnitude)."""

    def __init__(self, e: int):
        self.e = e

    def value(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, y: np.ndarray, dirs: Sequence[np.ndarray]) -> np.ndarray:
        if not dirs:
            return self.value(y)
        u = np.asarray(dirs[-1], dtype=float)
        h = FD_STEP * max(1.0, float(np.linalg.norm(y))) / max(1.0, float(np.linalg.norm(u)))
        hi = self.deriv(y + h * u, dirs[:-1])
        lo = self.deriv(y - h * u, dirs[:-1])
        return (hi - lo) / (2.0 * h)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        """Matrix DV(y): column b is the derivative along e_b."""
        cols = [self.deriv(y, [unit]) for unit in np.eye(self.e)]
        return np.stack(cols, axis=1)


class LinearField(VectorField):
    """V(y) = A y; first derivative is A, all higher derivatives vanish."""

    def __init__(self, A: np.ndarray):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("linear field needs a square matrix")
        super().__init__(A.shape[0])
        self.A = A

    def value(self, y):
        return self.A @ y

    def deriv(self, y, dirs):
        if not dirs:
            return self.A @ y
        if len(dirs) == 1:
            return self.A @ np.asarray(dirs[0], dtype=float)
        return np.zeros(self.e)


class ConstantField(VectorField):
    def __init__(self, c: np.ndarray):
        c = np.asarray(c, dtype=float)
        super().__init__(c.size)
        self.c = c

    def value(self, y):
        return self.c

    def deriv(self, y, dirs):
        return self.c if not dirs else np.zeros(self.e)


class CoordinateFunctionField(VectorField):
    """f(y[coord]) * d/d y[target] with analytic derivatives of f.

    ``f`` maps (x, order) to the order-th derivative of the profile at x.
    """

    def __init__(self, e: int, coord: int, target: int, f: Callable[[float, int], float]):
        super().__init__(e)
        self.coord = coord
        self.target = target
        self.f = f

    def value(self, y):
        out = np.zeros(self.e)
        out[self.target] = self.f(float(y[self.coord]), 0)
        return out

    def deriv(self, y, dirs):
        if not dirs:
            return self.value(y)
        out = np.zeros(self.e)
        factor = 1.0
        for u in dirs:
            factor *= float(np.asarray(u)[self.coord])
        out[self.target] = self.f(float(y[self.coord]), len(dirs)) * factor
        return out


class FuncField(VectorField):
    """Generic smooth field from a callable; derivatives by finite differences."""

    def __init__(self, e: int, fn: Callable[[np.ndarray], np.ndarray]):
        super().__init__(e)
        self.fn = fn

    def value(self, y):
        return np.asarray(self.fn(y), dtype=float)


class ScaledField(VectorField):
    def __init__(self, field: VectorField, c: float):
        super().__init__(field.e)
        self.field = field
        self.c = float(c)

    def value(self, y):
        return self.c * self.field.value(y)

    def deriv(self, y, dirs):
        return self.c * self.field.deriv(y, dirs)


class SumField(VectorField):
    def __init__(self, *fields: VectorField):
        if not fields:
            raise ValueError("need at least one summand")
        super().__init__(fields[0].e)
        self.fields = fields

    def value(self, y):
        return sum(f.value(y) for f in self.fields)

    def deriv(self, y, dirs):
        return sum(f.deriv(y, dirs) for f in self.fields)


class BracketField(VectorField):
    """Commutator of vector fields: [U, V](y) = DV(y).U(y) - DU(y).V(y),
    with derivatives by the Leibniz rule over the two bilinear halves."""

    def __init__(self, U: VectorField, V: VectorField):
        if U.e != V.e:
            raise ValueError("bracket needs fields on one state space")
        super().__init__(U.e)
        self.U = U
        self.V = V

    def value(self, y):
        return self.V.deriv(y, [self.U.value(y)]) - self.U.deriv(y, [self.V.value(y)])

    def deriv(self, y, dirs):
        if not dirs:
            return self.value(y)
        return self._half(self.V, self.U, y, dirs) - self._half(self.U, self.V, y, dirs)

    @staticmethod
    def _half(outer, inner, y, dirs):
        # D^m of y -> D outer(y)[inner(y)], distributing the m directions
        m = len(dirs)
        total = np.zeros(outer.e)
        for r in range(m + 1):
            for subset in combinations(range(m), r):
                rest = [dirs[i] for i in range(m) if i not in subset]
                inner_val = inner.deriv(y, [dirs[i] for i in subset])
                total += outer.deriv(y, [inner_val] + rest)
        return total


def word_operator_value(fields: Sequence[VectorField], word: Sequence[int], y: np.ndarray) -> np.ndarray:
    """(V_{w1} ... V_{wk} I)(y) with V_{wk} applied innermost; letters are
    1-based indices into ``fields``."""

    def op_deriv(j: int, dirs: tuple) -> np.ndarray:
        field = fields[word[j] - 1]
        if j == len(word) - 1:
            return field.deriv(y, list(dirs))
        # G_j(y) = D G_{j+1}(y)[field(y)]; Leibniz over the directions
        m = len(dirs)
        total = np.zeros(field.e)
        for r in range(m + 1):
            for subset in combinations(range(m), r):
                rest = tuple(dirs[i] for i in range(m) if i not in subset)
                shifted = field.deriv(y, [dirs[i] for i in subset])
                total += op_deriv(j + 1, (shifted,) + rest)
        return total

    return op_deriv(0, ())


class VectorFieldSystem:
    """d driving fields V_1..V_d on R^e plus an optional drift field V_0."""

    def __init__(self, fields: Sequence[VectorField], drift: VectorField | None = None):
        if not fields:
            raise ValueError("need at least one driving field")
        e = fields[0].e
        for f in fields:
            if f.e != e:
                raise ValueError("all fields must share one state dimension")
        if drift is not None and drift.e != e:
            raise ValueError("drift must share the state dimension")
        self.fields = list(fields)
        self.drift = drift
        self.e = e
        self.d = len(fields)

    def self_test(self, rng: np.random.Generator, order: int = 2, points: int = 5) -> float:
        """Max relative mismatch between claimed derivatives and central
        finite differences of values, over random points and directions."""
        worst = 0.0
        probe = list(self.fields) + ([self.drift] if self.drift is not None else [])
        for field in probe:
            for _ in range(points):
                y = rng.normal(0.0, 1.0, self.e)
                dirs = [rng.normal(0.0, 1.0, self.e) for _ in range(order)]
                for k in range(1, order + 1):
                    claimed = field.deriv(y, dirs[:k])
                    fd = VectorField.deriv(field, y, dirs[:k])
                    scale = max(1.0, float(np.linalg.norm(fd)))
                    worst = max(worst, float(np.linalg.norm(claimed - fd)) / scale)
        return worst


# -- built-in systems ----------------------------------------------------------


def linear_system(matrices: Sequence[np.ndarray], drift_matrix: np.ndarray | None = None) -> VectorFieldSystem:
    fields = [LinearField(A) for A in matrices]
    drift = LinearField(drift_matrix) if drift_matrix is not None else None
    return VectorFieldSystem(fields, drift)


def _sin_profile(x: float, order: int) -> float:
    return (np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t))[order % 4](x)


def _neg_cos_profile(x: float, order: int) -> float:
    return -(np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)[order % 4](x)


def _const_one_profile(x: float, order: int) -> float:
    return 1.0 if order == 0 else 0.0


def trig_ladder_fields(e: int, p: int) -> VectorFieldSystem:
    """Bounded fields V = sin(x_e) d_e, W = -cos(x_e) d_e, E = d_e arranged
    so the right-normed bracket [V_p, [..., [V_2, V_1]]] equals E.

    They satisfy [V, W] = E and [V, E] = W pointwise, so the ladder closes:
    V_1 is W for even p and E for odd p, all later fields are V.
    """
    if e < 1 or p < 1:
        raise ValueError("need e >= 1 and p >= 1")
    last = e - 1
    V = CoordinateFunctionField(e, last, last, _sin_profile)
    W = CoordinateFunctionField(e, last, last, _neg_cos_profile)
    E = CoordinateFunctionField(e, last, last, _const_one_profile)
    if p == 1:
        return VectorFieldSystem([E])
    first = W if p % 2 == 0 else E
    return VectorFieldSystem([first] + [V] * (p - 1))


def ladder_matrices(e: int) -> dict[str, np.ndarray]:
    """The four e x e matrices with [A, M] = N and [B, N] = M exactly."""
    if e < 2:
        raise ValueError("matrix ladder needs e >= 2")
    M = np.zeros((e, e))
    M[0, e - 1] = 1.0
    N = np.zeros((e, e))
    N[0, 0] = -1.0
    N[e - 1, e - 1] = 1.0
    A = np.zeros((e, e))
    A[e - 1, 0] = 1.0
    B = 0.5 * M
    return {"M": M, "N": N, "A": A, "B": B}


def matrix_ladder_sequence(e: int, p: int) -> list[np.ndarray]:
    """Matrices A_1..A_p whose *left*-normed commutator [[..[A_1,A_2],..],A_p]
    equals N, which is what the right-normed vector-field bracket
    [V_p, [..., [V_2, V_1]]] of the fields y -> A_i y produces (the usual
    field/matrix identification reverses each bracket)."""
    if p < 2:
        raise ValueError("matrix ladder needs p >= 2")
    m = ladder_matrices(e)
    seq = [m["A"], m["M"]] if p % 2 == 0 else [m["N"], m["B"], m["A"]]
    while len(seq) < p:
        seq.extend([m["B"], m["A"]])
    return seq


def matrix_ladder_system(e: int, p: int) -> VectorFieldSystem:
    return linear_system(matrix_ladder_sequence(e, p))


def system_from_config(cfg: dict) -> VectorFieldSystem:
    """Vector-field configuration from JSON-style dicts.

    Supported: {"type": "linear", "matrices": [...], ("drift": [...])},
    {"type": "trig_lemma42", "e": ..., "k": ...},
    {"type": "matrix_lemma43", "e": ..., "p": ...}.
    """
    kind = cfg.get("type")
    if kind == "linear":
        drift = cfg.get("drift")
        return linear_system(
            [np.asarray(A, dtype=float) for A in cfg["matrices"]],
            np.asarray(drift, dtype=float) if drift is not None else None,
        )
    if kind == "trig_lemma42":
        return trig_ladder_fields(int(cfg["e"]), int(cfg["k"]))
    if kind == "matrix_lemma43":
        return matrix_ladder_system(int(cfg["e"]), int(cfg["p"]))
    raise ValueError(f"unknown vector-field config type: {kind!r}")


# -- iterated brackets and the drift contraction --------------------------------


def bracket_vector_field(VF: VectorFieldSystem, word: Sequence[int]) -> VectorField:
    """Right-normed field bracket [V_{w_k}, [V_{w_{k-1}}, ..., [V_{w_2}, V_{w_1}]]]
    (the first letter sits innermost, matching bracket_word_tensor)."""
    word = tuple(word)
    if not word:
        raise ValueError("empty bracket word")
    for i in word:
        if not 1 <= i <= VF.d:
            raise ValueError(f"letter {i} outside 1..{VF.d}")
    field = VF.fields[word[0] - 1]
    for letter in word[1:]:
        field = BracketField(VF.fields[letter - 1], field)
    return field


def contraction_check(VF: VectorFieldSystem, word: Sequence[int], y: np.ndarray) -> float:
    """Residual of the word-operator contraction against the iterated
    bracket: sum_w (V_{w1}...V_{wk} I)(y) e_word^w  vs  V_word(y)."""
    word = tuple(word)
    shape = TensorShape(VF.d, len(word))
    e_word = bracket_word_tensor(word, shape).tensor.levels[len(word)]
    lhs = np.zeros(VF.e)
    for idx in np.argwhere(e_word != 0.0):
        w = tuple(int(i) + 1 for i in idx)
        lhs += float(e_word[tuple(idx)]) * word_operator_value(VF.fields, w, y)
    rhs = bracket_vector_field(VF, word).value(y)
    return float(np.linalg.norm(lhs - rhs))


class WordContractionField(VectorField):
    """Drift field induced by a central perturbation: the contraction of the
    perturbation's tensor coordinates against iterated-operator words.  On
    bracket words this equals the corresponding iterated field bracket, so no
    basis decomposition of the perturbation is ever needed."""

    def __init__(self, VF: VectorFieldSystem, v: PerturbationSpec):
        if v.shape.d != VF.d:
            raise ValueError(f"perturbation d={v.shape.d} does not match system d={VF.d}")
        super().__init__(VF.e)
        self.VF = VF
        N = v.shape.N
        top = v.v.tensor.levels[N]
        self.terms = [
            (tuple(int(i) + 1 for i in idx), float(top[tuple(idx)]))
            for idx in np.argwhere(top != 0.0)
        ]

    def value(self, y):
        out = np.zeros(self.e)
        for word, coeff in self.terms:
            out += coeff * word_operator_value(self.VF.fields, word, y)
        return out


def drift_field_W(VF: VectorFieldSystem, v: PerturbationSpec) -> VectorField:
    return WordContractionField(VF, v)
