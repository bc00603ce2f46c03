import numpy as np
import pytest

from roughlab.approx import (
    ConditionReport,
    InterpolationFunction,
    PerturbationSpec,
    central_loop,
    check_condition_i,
    extract_perturbation,
    loop_length,
    mcshane_interpolate,
    perturbed_driver,
    sussmann_approx,
)
from roughlab.paths import (
    Dissection,
    GridRoughPath,
    PiecewisePath,
    chen_signature,
    levy_area,
    lift_on_grid,
    path_sample_at,
)
from roughlab.paths import cc_distance
from roughlab.tensor import (
    GroupElement,
    TensorShape,
    TruncatedTensor,
    bracket_word_tensor,
    is_central,
    tensor_exp,
    tensor_log,
)

from conftest import random_piecewise_path


def spec_e12(coeff=1.0):
    return PerturbationSpec.from_bracket_word((1, 2), d=2, coeff=coeff)


def phi_t_t2(n_segments=256):
    return InterpolationFunction.from_sampler(lambda u: np.stack([u, u**2], axis=-1), n_segments)


class TestPerturbationSpec:
    def test_rejects_lower_level_mass(self):
        shape = TensorShape(2, 2)
        t = TruncatedTensor.basis(shape, 1)
        with pytest.raises(ValueError):
            PerturbationSpec(t)

    def test_rejects_non_lie_top(self):
        shape = TensorShape(2, 2)
        t = TruncatedTensor.from_word(shape, (1, 2))  # plain word, not a bracket
        with pytest.raises(ValueError):
            PerturbationSpec(t)

    def test_json_roundtrip(self):
        v = PerturbationSpec.from_bracket_word((1, 2, 3), d=3, coeff=-0.75)
        again = PerturbationSpec.from_json(v.to_json(), d=3)
        assert again.v.tensor.max_abs_difference(v.v.tensor) < 1e-15

    def test_json_infers_dimension(self):
        v = spec_e12(0.5)
        again = PerturbationSpec.from_json(v.to_json())
        assert again.shape == TensorShape(2, 2)


class TestCentralLoop:
    def test_square_commutator_depth2(self):
        v = spec_e12()
        loop = central_loop(v, 1.0)
        sig = chen_signature(loop, 0.0, 1.0, 2)
        assert sig.tensor.max_abs_difference(v.exp().tensor) < 1e-13

    def test_level1_closes_exactly(self):
        loop = central_loop(spec_e12(-0.6), 0.8)
        sig = chen_signature(loop, 0.0, 1.0, 2)
        assert float(np.max(np.abs(sig.tensor.levels[1]))) == 0.0

    def test_depth3_bracket_word(self):
        v = PerturbationSpec.from_bracket_word((1, 2, 3), d=3, coeff=1.0)
        lam = 0.5
        log = tensor_log(chen_signature(central_loop(v, lam), 0.0, 1.0, 3))
        target = v.v.tensor * lam
        assert float(np.max(np.abs(log.levels[1]))) < 1e-12
        assert float(np.max(np.abs(log.levels[2]))) < 1e-12
        top_err = float(np.max(np.abs(log.levels[3] - target.levels[3])))
        assert top_err < 1e-10 * max(1.0, float(np.max(np.abs(target.levels[3]))))

    def test_general_lie_combination(self):
        # a combination of two bracket words at depth 3, d = 2
        shape = TensorShape(2, 3)
        t = bracket_word_tensor((1, 2, 1), shape).tensor * 0.4
        t = t + bracket_word_tensor((1, 2, 2), shape).tensor * -1.1
        v = PerturbationSpec(t)
        lam = 0.9
        sig = chen_signature(central_loop(v, lam), 0.0, 1.0, 3)
        assert sig.tensor.max_abs_difference(v.exp(lam).tensor) < 1e-10

    def test_loop_length_scaling(self):
        v = spec_e12()
        ratio = loop_length(v, 0.5) / 0.5 ** 0.5
        for lam in (0.1, 1.0, 2.0):
            assert loop_length(v, lam) / lam ** 0.5 == pytest.approx(ratio, rel=1e-12)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            central_loop(spec_e12(), 0.0)


class TestSussmann:
    def test_matches_samples_at_dissection(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=8)
        D = Dissection.uniform(0.0, 1.0, 8)
        xn = sussmann_approx(x, D, spec_e12(0.7))
        for t in D.times:
            assert np.allclose(xn.value_at(t), x.value_at(t), atol=1e-12)

    def test_extraction_is_exponential_on_grid(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=8)
        D = Dissection.uniform(0.0, 1.0, 6)
        v = spec_e12(0.7)
        xn = sussmann_approx(x, D, v)
        xD = path_sample_at(x, D)
        p = extract_perturbation(xn, xD, D, 2)
        for i, t in enumerate(D.times):
            target = v.exp(t - D.times[0])
            assert p.elements[i].tensor.max_abs_difference(target.tensor) < 1e-10
        # increments between any two dissection points
        for i in range(len(D.times)):
            for j in range(i + 1, len(D.times)):
                target = v.exp(D.times[j] - D.times[i])
                assert p.increment(i, j).tensor.max_abs_difference(target.tensor) < 1e-10

    def test_zero_perturbation_degenerates(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=4)
        D = Dissection.uniform(0.0, 1.0, 4)
        v = PerturbationSpec(TruncatedTensor.zero(TensorShape(2, 2)))
        xn = sussmann_approx(x, D, v)
        # second half of each interval is constant at x(b)
        for a, b in zip(D.times[:-1], D.times[1:]):
            mid = 0.5 * (a + b)
            assert np.allclose(xn.value_at(0.5 * (mid + b)), x.value_at(b), atol=1e-12)

    def test_condition_i_with_doubling_constant(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=8)
        D = Dissection.uniform(0.0, 1.0, 8)
        v = spec_e12(0.7)
        N = 2
        xn = sussmann_approx(x, D, v)
        xD = path_sample_at(x, D)
        report = check_condition_i(xn, xD, D, beta=1.0 / N, c1=2.0, c2=None, c3=None, N=N)
        # chord half runs at exactly double speed; loop half is covered by c2
        bound = 2.0 * report.chord_speeds + report.c2_observed * np.diff(D.times) ** (1.0 / N - 1.0)
        assert np.all(report.interval_speeds <= bound * (1.0 + 1e-12))
        assert np.isfinite(report.c2_observed)

    def test_theorem_distance_bound_with_central_perturbation(self, rng):
        # d(S(xn), S(x) p) <= d(S(xD), S(x)) + d(p^n, p) for central p
        x = random_piecewise_path(rng, 2, n_segments=32)
        D = Dissection.uniform(0.0, 1.0, 4)
        v = spec_e12(0.5)
        xn = sussmann_approx(x, D, v)
        xD = path_sample_at(x, D)
        for t in D.times[1:]:
            lhs = cc_distance(
                chen_signature(xn, 0.0, t, 2),
                chen_signature(x, 0.0, t, 2) @ v.exp(t),
            )
            rhs = cc_distance(chen_signature(xD, 0.0, t, 2), chen_signature(x, 0.0, t, 2))
            assert lhs <= rhs + 1e-10


class TestInterpolationFunction:
    def test_diagonal_has_zero_area(self):
        assert InterpolationFunction.diagonal().area == 0.0

    def test_parabola_area_near_sixth(self):
        phi = phi_t_t2()
        assert phi.area == pytest.approx(1.0 / 6.0, abs=1e-4)

    def test_area_increment_matches_signature(self):
        phi = phi_t_t2(64)
        u, v = 0.25, 0.8
        log = tensor_log(chen_signature(phi.path, u, v, 2))
        area = 0.5 * (log.levels[2][0, 1] - log.levels[2][1, 0])
        assert phi.area_increment(u, v) == pytest.approx(area, abs=1e-12)

    def test_rejects_bad_endpoints(self):
        bad = PiecewisePath([0.0, 1.0], [[0.0, 0.0], [1.0, 0.5]])
        with pytest.raises(ValueError):
            InterpolationFunction(bad)


class TestMcShane:
    def test_diagonal_reduces_to_chords(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=16)
        D = Dissection.uniform(0.0, 1.0, 8)
        out = mcshane_interpolate(x, D, InterpolationFunction.diagonal())
        xD = path_sample_at(x, D)
        assert np.allclose(out.times, xD.times, atol=1e-14)
        assert np.allclose(out.values, xD.values, atol=1e-12)

    def test_single_interval_positive_increments(self):
        phi = phi_t_t2()
        x = PiecewisePath([0.0, 1.0], [[0.0, 0.0], [1.0, 1.0]])
        out = mcshane_interpolate(x, Dissection([0.0, 1.0]), phi)
        assert levy_area(out) == pytest.approx(phi.area, abs=1e-13)
        log = tensor_log(chen_signature(out, 0.0, 1.0, 2))
        area = 0.5 * (log.levels[2][0, 1] - log.levels[2][1, 0])
        assert area == pytest.approx(1.0 * 1.0 * phi.area, abs=1e-12)

    def test_single_interval_sign_flip_swaps_components(self):
        phi = phi_t_t2(32)
        x = PiecewisePath([0.0, 1.0], [[0.0, 0.0], [1.0, -1.0]])
        out = mcshane_interpolate(x, Dissection([0.0, 1.0]), phi)
        u = phi.path.times
        # component 1 follows phi^2, component 2 follows -phi^1
        assert np.allclose(out.values[:, 0], phi.path.values[:, 1], atol=1e-14)
        assert np.allclose(out.values[:, 1], -phi.path.values[:, 0], atol=1e-14)
        # the area bias keeps the + sign: |dx1| |dx2| A^phi
        assert levy_area(out) == pytest.approx(abs(-1.0) * phi.area, abs=1e-13)

    def test_within_interval_area_formula(self, rng):
        # area of the constructed interval = |dx1| |dx2| A^phi(0, 1), each interval
        phi = phi_t_t2(64)
        x = random_piecewise_path(rng, 2, n_segments=8)
        D = Dissection.uniform(0.0, 1.0, 5)
        out = mcshane_interpolate(x, D, phi)
        xa = np.array([x.value_at(t) for t in D.times])
        for i, (a, b) in enumerate(zip(D.times[:-1], D.times[1:])):
            dx = xa[i + 1] - xa[i]
            log = tensor_log(chen_signature(out, a, b, 2))
            area = 0.5 * (log.levels[2][0, 1] - log.levels[2][1, 0])
            assert area == pytest.approx(abs(dx[0]) * abs(dx[1]) * phi.area, abs=1e-12)

    def test_matches_samples_at_dissection(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=12)
        D = Dissection.uniform(0.0, 1.0, 6)
        out = mcshane_interpolate(x, D, phi_t_t2(32))
        for t in D.times:
            assert np.allclose(out.value_at(t), x.value_at(t), atol=1e-12)

    def test_condition_i_speed_bound(self, rng):
        # |xn|_{1-Hol;I} <= |phi'|_inf |xD|_{1-Hol;I}: c1 = max phi speed, c2 = 0
        phi = phi_t_t2(64)
        x = random_piecewise_path(rng, 2, n_segments=8)
        D = Dissection.uniform(0.0, 1.0, 8)
        out = mcshane_interpolate(x, D, phi)
        xD = path_sample_at(x, D)
        phi_speed = float(np.max(np.abs(np.diff(phi.path.values, axis=0)).sum(axis=1)
                                 / np.diff(phi.path.times)))
        report = check_condition_i(out, xD, D, beta=0.5, c1=phi_speed, c2=0.0, N=2)
        assert report.pass_speed

    def test_rejects_non_planar(self, rng):
        x = random_piecewise_path(rng, 3)
        with pytest.raises(ValueError):
            mcshane_interpolate(x, Dissection.uniform(0.0, 1.0, 2), phi_t_t2(16))


class TestExtractAndConditions:
    def test_identical_paths_give_identity(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=6)
        D = Dissection.uniform(0.0, 1.0, 6)
        xD = path_sample_at(x, D)
        p = extract_perturbation(xD, xD, D, 2)
        e = GroupElement.identity(TensorShape(2, 2))
        assert all(g.tensor.max_abs_difference(e.tensor) < 1e-12 for g in p.elements)

    def test_identical_paths_condition_constants(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=6)
        D = Dissection.uniform(0.0, 1.0, 6)
        xD = path_sample_at(x, D)
        report = check_condition_i(xD, xD, D, beta=0.5, c1=1.0, c2=0.0, c3=1e-9, N=2)
        assert report.c1_observed == pytest.approx(1.0, abs=1e-9)
        assert report.c2_observed == 0.0
        assert report.c3_observed < 1e-10
        assert report.passed


class TestPerturbedDriver:
    def test_zero_perturbation_is_identity_map(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=6)
        X = lift_on_grid(x, Dissection.uniform(0.0, 1.0, 6), 2)
        v = PerturbationSpec(TruncatedTensor.zero(TensorShape(2, 2)))
        Y = perturbed_driver(X, v)
        for g, h in zip(X.elements, Y.elements):
            assert g.tensor.max_abs_difference(h.tensor) == 0.0

    def test_identity_driver_becomes_central_line(self):
        grid = Dissection.uniform(0.0, 1.0, 5)
        shape = TensorShape(2, 2)
        X = GridRoughPath(grid, [GroupElement.identity(shape) for _ in grid.times])
        lam = 0.8
        v = spec_e12(lam)
        Y = perturbed_driver(X, v)
        for g, t in zip(Y.elements, grid.times):
            assert g.tensor.max_abs_difference(v.exp(t).tensor) < 1e-14

    def test_increments_multiplicative(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=8)
        X = lift_on_grid(x, Dissection.uniform(0.0, 1.0, 8), 2)
        Y = perturbed_driver(X, spec_e12(0.9))
        for (i, j, k) in [(0, 3, 6), (1, 4, 8), (2, 5, 7)]:
            lhs = Y.increment(i, j) @ Y.increment(j, k)
            assert lhs.tensor.max_abs_difference(Y.increment(i, k).tensor) < 1e-12

    def test_increment_formula(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=8)
        X = lift_on_grid(x, Dissection.uniform(0.0, 1.0, 8), 2)
        v = spec_e12(0.9)
        Y = perturbed_driver(X, v)
        i, j = 2, 6
        dt = X.grid.times[j] - X.grid.times[i]
        expected = tensor_exp(tensor_log(X.increment(i, j)) + v.v.tensor * dt)
        assert Y.increment(i, j).tensor.max_abs_difference(expected.tensor) < 1e-12

    def test_deeper_driver_is_truncated(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=6)
        X = lift_on_grid(x, Dissection.uniform(0.0, 1.0, 6), 3)
        Y = perturbed_driver(X, spec_e12(0.5))
        assert Y.shape == TensorShape(2, 2)

    def test_central_elements_commute_with_driver(self, rng):
        x = random_piecewise_path(rng, 2, n_segments=6)
        X = lift_on_grid(x, Dissection.uniform(0.0, 1.0, 6), 2)
        ev = spec_e12(0.7).exp()
        assert is_central(ev)
        g = X.elements[-1]
        assert (g @ ev).tensor.max_abs_difference((ev @ g).tensor) < 1e-12
