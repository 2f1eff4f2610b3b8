import numpy as np
import pytest

from delayvar.criterion import (
    QuadratureRule,
    derivative_load,
    directional_derivative,
    evaluate_J,
    free_gradient,
    gradient,
    time_breakpoints,
)
from delayvar.identities import random_builtin_problem, random_smooth_perturbation, random_smooth_trajectory
from delayvar.problem import (
    BUILTIN_PROBLEMS,
    DelayLagrangian,
    classical_quadratic,
    point_delay_lagrangian,
    point_delay_quadratic,
)
from delayvar.measures import CovectorMeasure
from delayvar.trajectory import HistoryFunction, affine_initial_guess, basis_perturbations, dofs_to_perturbation


def const_problem(n=1, r=0.5, T=1.0, value=1.0):
    return DelayLagrangian(
        n, r, T,
        lambda t, phi, v: value,
        lambda t, phi, v: CovectorMeasure.zero(r, n),
        lambda t, phi, v: np.zeros(n),
    )


def identity_line(r=0.5, N=8):
    return affine_initial_guess(HistoryFunction.constant(r, 0.0), 1.0, 1.0, N)


class TestQuadratureRule:
    def test_validation(self):
        with pytest.raises(ValueError):
            QuadratureRule(3)
        with pytest.raises(ValueError):
            QuadratureRule(0)

    def test_breakpoints_include_junction_and_T_minus_r(self):
        p = point_delay_quadratic(1, 0.5, 2.0)
        x = affine_initial_guess(HistoryFunction.constant(0.5, 0.0), 1.0, 2.0, 8)
        bps = time_breakpoints(p, x)
        assert np.any(np.isclose(bps, 0.5)) and np.any(np.isclose(bps, 1.5))

    def test_nodes_weights_integrate_cubics(self):
        x = identity_line()
        ts, ws = QuadratureRule(2, breakpoints=(0.3,)).nodes_weights(classical_quadratic(), x)
        assert ws @ ts**3 == pytest.approx(0.25, abs=1e-15)
        assert np.any(ts == 0.3)


class TestEvaluateJ:
    def test_constant_integrand(self):
        x = affine_initial_guess(HistoryFunction.constant(0.5, 0.0), 1.0, 2.0, 8)
        assert evaluate_J(const_problem(T=2.0), x) == pytest.approx(2.0, abs=1e-14)

    def test_kinetic_on_identity(self):
        assert evaluate_J(classical_quadratic(), identity_line()) == pytest.approx(0.5, abs=1e-15)

    def test_velocity_integrand(self):
        # F = 0 * phi(-r) + v
        p = point_delay_lagrangian(
            1, 0.5, 1.0,
            lambda t, a, b, v: 0.0 * b[0] + v[0],
            lambda t, a, b, v: np.zeros(1),
            lambda t, a, b, v: np.zeros(1),
            lambda t, a, b, v: np.ones(1),
        )
        assert evaluate_J(p, identity_line()) == pytest.approx(1.0, abs=1e-15)

    def test_simpson_order_in_subsamples(self):
        p = point_delay_quadratic(1, 0.5, 1.0, cv=1.0, ca=1.0, cb=1.0)
        rng = np.random.default_rng(5)
        x = random_smooth_trajectory(rng, 1, 0.5, 1.0, 4)
        ref = evaluate_J(p, x, QuadratureRule(64))
        errs = [abs(evaluate_J(p, x, QuadratureRule(s)) - ref) for s in (2, 4, 8)]
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.15)
        assert errs[1] / errs[2] == pytest.approx(16, rel=0.15)


class TestDirectionalDerivative:
    def test_zero_direction(self):
        p = point_delay_quadratic(1, 0.5, 1.0, ca=1.0)
        x = affine_initial_guess(HistoryFunction.constant(0.5, 1.0), 2.0, 1.0, 8)
        h = dofs_to_perturbation(np.zeros(16), 0.5, 1.0, 8, 1)
        assert directional_derivative(p, x, h) == 0.0

    def test_straight_line_stationary(self, rng):
        h = random_smooth_perturbation(rng, 1, 0.5, 1.0, 8)
        assert abs(directional_derivative(classical_quadratic(), identity_line(), h)) <= 1e-14

    def test_point_value_square(self, rng):
        # F = phi(0)^2 at x = c: DJ.h = int 2 c h
        c = 1.7
        p = point_delay_lagrangian(
            1, 0.5, 1.0,
            lambda t, a, b, v: float(a @ a),
            lambda t, a, b, v: 2 * a,
            lambda t, a, b, v: np.zeros(1),
            lambda t, a, b, v: np.zeros(1),
        )
        x = affine_initial_guess(HistoryFunction.constant(0.5, c), c, 1.0, 8)
        h = random_smooth_perturbation(rng, 1, 0.5, 1.0, 8)
        ts, ws = QuadratureRule(8).nodes_weights(p, x)
        expected = float(ws @ (2 * c * h(ts)[:, 0]))
        d = directional_derivative(p, x, h)
        assert d == pytest.approx(expected, rel=1e-13)
        eps = 1e-5
        fd = (evaluate_J(p, x.perturbed(h, eps)) - evaluate_J(p, x.perturbed(h, -eps))) / (2 * eps)
        assert d == pytest.approx(fd, rel=1e-7)

    def test_linearity(self, rng):
        p = random_builtin_problem(rng, "distributed_delay_quadratic", 2, 0.5, 1.0)
        x = random_smooth_trajectory(rng, 2, 0.5, 1.0, 8)
        h1 = random_smooth_perturbation(rng, 2, 0.5, 1.0, 8)
        h2 = random_smooth_perturbation(rng, 2, 0.5, 1.0, 8)
        lhs = directional_derivative(p, x, 2.0 * h1 + (-0.5) * h2)
        rhs = 2.0 * directional_derivative(p, x, h1) - 0.5 * directional_derivative(p, x, h2)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestGradient:
    def test_zero_at_classical_minimizer(self):
        x = identity_line(N=16)
        g = gradient(classical_quadratic(), x, basis_perturbations(16, 1, 0.5, 1.0))
        assert np.max(np.abs(g)) <= 1e-10

    def test_scaling(self, rng):
        p = random_builtin_problem(rng, "point_delay_quadratic", 1, 0.5, 1.0)
        x = random_smooth_trajectory(rng, 1, 0.5, 1.0, 8)
        assert np.allclose(free_gradient(p.scaled(3.0), x), 3.0 * free_gradient(p, x), rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("name", sorted(BUILTIN_PROBLEMS))
    def test_load_matches_direct_and_fd(self, name, rng):
        p = random_builtin_problem(rng, name, 2, 0.5, 1.0)
        x = random_smooth_trajectory(rng, 2, 0.5, 1.0, 8)
        basis = basis_perturbations(8, 2, 0.5, 1.0)
        g = gradient(p, x, basis)
        assert np.array_equal(g, free_gradient(p, x))
        direct = np.array([directional_derivative(p, x, h) for h in basis])
        assert np.allclose(g, direct, rtol=0, atol=1e-13)
        eps = 1e-5
        for i in (0, 5, 9, 20):
            h = basis[i]
            fd = (evaluate_J(p, x.perturbed(h, eps)) - evaluate_J(p, x.perturbed(h, -eps))) / (2 * eps)
            assert abs(g[i] - fd) <= 1e-9

    def test_load_shapes(self):
        x = identity_line(N=4)
        Lv, Ld = derivative_load(classical_quadratic(), x)
        assert Lv.shape == (5, 1) and Ld.shape == (5, 1)
