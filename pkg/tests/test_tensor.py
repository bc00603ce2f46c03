import numpy as np
import pytest

from roughlab.tensor import (
    GroupElement,
    LieElement,
    TensorShape,
    TruncatedTensor,
    bracket_word_tensor,
    dilate,
    dynkin_project,
    group_inverse,
    homogeneous_norm,
    is_central,
    is_lie,
    lie_bracket,
    tensor_exp,
    tensor_log,
    tensor_mul,
)

from conftest import random_group_element, random_tensor

S22 = TensorShape(2, 2)


def _nilpotent(t):
    u = t.copy()
    u.levels[0] = np.array(0.0)
    return u


class TestTensorMul:
    def test_hand_expansion(self):
        a = TruncatedTensor.unit(S22) + TruncatedTensor.basis(S22, 1)
        b = TruncatedTensor.unit(S22) + TruncatedTensor.basis(S22, 2)
        prod = tensor_mul(a, b)
        expected = (
            TruncatedTensor.unit(S22)
            + TruncatedTensor.basis(S22, 1)
            + TruncatedTensor.basis(S22, 2)
            + TruncatedTensor.from_word(S22, (1, 2))
        )
        assert prod.allclose(expected)

    def test_identity(self, rng):
        shape = TensorShape(3, 3)
        for _ in range(5):
            g = random_group_element(rng, shape)
            assert tensor_mul(TruncatedTensor.unit(shape), g.tensor).allclose(g.tensor)

    def test_exp_e1_exp_e2_level2_words(self):
        g = tensor_exp(TruncatedTensor.basis(S22, 1)) @ tensor_exp(TruncatedTensor.basis(S22, 2))
        assert g.tensor.coeff((1, 2)) == pytest.approx(1.0, abs=1e-15)
        assert g.tensor.coeff((2, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_shape_mismatch_rejected(self):
        a = TruncatedTensor.unit(S22)
        b = TruncatedTensor.unit(TensorShape(3, 2))
        with pytest.raises(ValueError):
            tensor_mul(a, b)

    def test_associativity(self, rng):
        for d, N in [(2, 2), (2, 4), (3, 3)]:
            shape = TensorShape(d, N)
            for _ in range(20):
                a, b, c = (random_tensor(rng, shape) for _ in range(3))
                lhs = tensor_mul(tensor_mul(a, b), c)
                rhs = tensor_mul(a, tensor_mul(b, c))
                assert lhs.max_abs_difference(rhs) < 1e-12 * 100


class TestExpLog:
    def test_exp_zero(self):
        assert tensor_exp(TruncatedTensor.zero(S22)).allclose(GroupElement.identity(S22))

    def test_exp_of_bracket_at_depth2(self):
        lam = 0.37
        v = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2)) * lam
        g = tensor_exp(v)
        expected = TruncatedTensor.unit(S22) + v  # (level-2 square vanishes at N=2)
        assert g.tensor.allclose(expected)

    def test_exp_rejects_nonzero_scalar(self):
        with pytest.raises(ValueError):
            tensor_exp(TruncatedTensor.unit(S22))

    def test_log_identity(self):
        assert tensor_log(GroupElement.identity(S22)).allclose(TruncatedTensor.zero(S22))

    def test_log_bch_depth2(self):
        e1, e2 = TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2)
        g = tensor_exp(e1) @ tensor_exp(e2)
        expected = e1 + e2 + lie_bracket(e1, e2) * 0.5
        assert tensor_log(g).allclose(expected)

    def test_roundtrip_random(self, rng):
        shape = TensorShape(3, 4)
        for _ in range(100):
            x = _nilpotent(random_tensor(rng, shape))
            assert tensor_log(tensor_exp(x)).max_abs_difference(x) < 1e-12

    def test_exp_log_roundtrip_on_group(self, rng):
        shape = TensorShape(2, 4)
        for _ in range(50):
            g = random_group_element(rng, shape)
            assert tensor_exp(tensor_log(g)).tensor.max_abs_difference(g.tensor) < 1e-12


class TestInverse:
    def test_identity(self):
        e = GroupElement.identity(S22)
        assert group_inverse(e).allclose(e)

    def test_central_exponential(self):
        v = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2)) * 1.3
        assert group_inverse(tensor_exp(v)).allclose(tensor_exp(-v))

    def test_random_signatures(self, rng):
        shape = TensorShape(3, 3)
        e = GroupElement.identity(shape)
        for _ in range(100):
            g = random_group_element(rng, shape)
            assert (g @ group_inverse(g)).tensor.max_abs_difference(e.tensor) < 1e-12
            assert group_inverse(g).tensor.max_abs_difference(tensor_exp(-tensor_log(g)).tensor) < 1e-12


class TestDilate:
    def test_unit_factor(self, rng):
        g = random_group_element(rng, TensorShape(2, 3))
        assert dilate(g, 1.0).allclose(g)

    def test_level2_homogeneity(self):
        lam, c = 0.8, 1.7
        v = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2))
        assert dilate(tensor_exp(v * lam), c).allclose(tensor_exp(v * (lam * c**2)))

    def test_norm_one_homogeneous(self, rng):
        shape = TensorShape(3, 3)
        for c in [0.3, -2.0, 5.5]:
            for _ in range(10):
                g = random_group_element(rng, shape)
                lhs = homogeneous_norm(dilate(g, c))
                rhs = abs(c) * homogeneous_norm(g)
                assert abs(lhs - rhs) < 1e-12 * max(1.0, rhs)


class TestHomogeneousNorm:
    def test_identity_is_zero(self):
        assert homogeneous_norm(GroupElement.identity(TensorShape(3, 4))) == 0.0

    def test_pure_level1(self):
        a = -1.9
        g = tensor_exp(TruncatedTensor.basis(S22, 1) * a)
        assert homogeneous_norm(g) == pytest.approx(abs(a), abs=1e-14)

    def test_pure_area(self):
        lam = 0.41
        v = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2)) * lam
        assert homogeneous_norm(tensor_exp(v)) == pytest.approx((lam * np.sqrt(2.0)) ** 0.5, abs=1e-14)


class TestBracketWords:
    def test_single_letter(self):
        t = bracket_word_tensor((1,), S22)
        assert t.tensor.allclose(TruncatedTensor.basis(S22, 1))

    def test_two_letters_reversed_nesting(self):
        # word (1,2) is [e2, e1] = e2 (x) e1 - e1 (x) e2
        t = bracket_word_tensor((1, 2), S22)
        expected = TruncatedTensor.from_word(S22, (2, 1)) - TruncatedTensor.from_word(S22, (1, 2))
        assert t.tensor.allclose(expected)

    def test_too_long_rejected(self):
        with pytest.raises(ValueError):
            bracket_word_tensor((1, 2, 1), S22)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_dynkin_eigenvalue(self, k):
        shape = TensorShape(2, 4)
        for word in np.ndindex(*(2,) * k):
            w = tuple(i + 1 for i in word)
            t = bracket_word_tensor(w, shape).tensor
            proj = dynkin_project(t)
            assert proj.max_abs_difference(t * float(k)) < 1e-12


class TestLieBracket:
    def test_self_bracket_zero(self, rng):
        shape = TensorShape(3, 3)
        x = random_tensor(rng, shape)
        assert lie_bracket(x, x).max_abs_difference(TruncatedTensor.zero(shape)) < 1e-12

    def test_generators(self):
        got = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2))
        expected = TruncatedTensor.from_word(S22, (1, 2)) - TruncatedTensor.from_word(S22, (2, 1))
        assert got.allclose(expected)

    def test_jacobi(self, rng):
        shape = TensorShape(2, 4)
        for _ in range(20):
            a, b, c = (random_tensor(rng, shape) for _ in range(3))
            total = (
                lie_bracket(a, lie_bracket(b, c))
                + lie_bracket(b, lie_bracket(c, a))
                + lie_bracket(c, lie_bracket(a, b))
            )
            assert total.max_abs_difference(TruncatedTensor.zero(shape)) < 1e-12 * 100


class TestIsLie:
    def test_bracket_is_lie(self):
        x = lie_bracket(TruncatedTensor.basis(S22, 1), TruncatedTensor.basis(S22, 2))
        assert is_lie(x)

    def test_plain_word_is_not(self):
        assert not is_lie(TruncatedTensor.from_word(S22, (1, 2)))

    def test_log_of_signatures(self, rng):
        for d, N in [(2, 3), (3, 4)]:
            shape = TensorShape(d, N)
            for _ in range(10):
                g = random_group_element(rng, shape)
                assert is_lie(tensor_log(g), tol=1e-10)


class TestIsCentral:
    def test_top_level_exponential(self):
        v = bracket_word_tensor((1, 2), S22)
        assert is_central(tensor_exp(v.tensor * 0.6))

    def test_generator_not_central(self):
        assert not is_central(tensor_exp(TruncatedTensor.basis(S22, 1)))

    def test_central_commutes_with_random(self, rng):
        shape = TensorShape(2, 3)
        v = bracket_word_tensor((1, 2, 1), shape).tensor * 0.9
        ev = tensor_exp(v)
        for _ in range(20):
            g = random_group_element(rng, shape)
            resid = (g @ ev).tensor.max_abs_difference((ev @ g).tensor)
            assert resid < 1e-12 * 10


class TestGroupLikeStructure:
    def test_product_stays_group_like(self, rng):
        shape = TensorShape(3, 3)
        for _ in range(20):
            g = random_group_element(rng, shape)
            h = random_group_element(rng, shape)
            assert is_lie(tensor_log(g @ h), tol=1e-10)

    def test_level2_symmetry(self, rng):
        # Sym(level 2) = (level 1)^(x)2 / 2 for any group-like element.
        shape = TensorShape(3, 2)
        for _ in range(30):
            g = random_group_element(rng, shape)
            a = g.tensor.levels[1]
            b = g.tensor.levels[2]
            sym = 0.5 * (b + b.T)
            assert float(np.max(np.abs(sym - 0.5 * np.outer(a, a)))) < 1e-12 * 10

    def test_group_element_rejects_bad_scalar(self):
        t = TruncatedTensor.zero(S22)
        with pytest.raises(ValueError):
            GroupElement(t)

    def test_lie_element_top_level_flag(self):
        t = TruncatedTensor.basis(S22, 1)
        with pytest.raises(ValueError):
            LieElement(t, top_level_only=True)
        LieElement(t)  # fine without the flag
