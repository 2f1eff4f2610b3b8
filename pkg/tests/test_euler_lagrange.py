import csv

import numpy as np
import pytest

from delayvar.criterion import LagrangianAlong, QuadratureRule
from delayvar.euler_lagrange import (
    advance_integral,
    el_data,
    fubini_identity_check,
    weak_stationarity,
    write_el_report_csv,
)
from delayvar.identities import random_smooth_perturbation, random_smooth_trajectory, synthetic_lagrangian
from delayvar.measures import CovectorMeasure
from delayvar.problem import DelayLagrangian, classical_quadratic, distributed_delay_quadratic, point_delay_quadratic
from delayvar.solver import SolveConfig, minimize
from delayvar.trajectory import HistoryFunction, Perturbation, affine_initial_guess


def atom_problem(loc, w, r=0.5, T=1.0):
    """Linear functional whose D2F is a fixed atom at ``loc``."""
    w = np.atleast_1d(np.asarray(w, float))
    n = w.size
    m = CovectorMeasure.atoms(r, [loc], [w])
    return DelayLagrangian(
        n, r, T,
        lambda t, phi, v: float(w @ phi(loc)),
        lambda t, phi, v: m,
        lambda t, phi, v: np.zeros(n),
        atoms=(loc,),
    )


def guess(r=0.5, T=1.0, N=16, start=1.0, end=2.0):
    return affine_initial_guess(HistoryFunction.constant(r, start), end, T, N)


class TestAdvanceIntegral:
    def test_vanishes_at_T(self):
        p = point_delay_quadratic(1, 0.5, 1.0)
        assert np.all(advance_integral(p, guess(), 1.0) == 0.0)

    @pytest.mark.parametrize("t", [0.0, 0.2, 0.5, 0.7])
    def test_atom_at_minus_r(self, t):
        w = np.array([1.5, -2.0])
        p = atom_problem(-0.5, w)
        x = affine_initial_guess(HistoryFunction.constant(0.5, [0.0, 0.0]), [1.0, 1.0], 1.0, 16)
        expected = w * (min(t + 0.5, 1.0) - t)
        assert np.allclose(advance_integral(p, x, t), expected, atol=1e-14)

    def test_atom_at_zero_contributes_nothing(self):
        p = atom_problem(0.0, 3.0)
        for t in (0.0, 0.3, 0.75):
            assert abs(advance_integral(p, guess(), t)[0]) <= 1e-14

    def test_outside_interval(self):
        with pytest.raises(ValueError):
            advance_integral(classical_quadratic(), guess(), 1.5)


class TestELData:
    def test_classical_minimizer_residual(self):
        x = guess()
        rep = el_data(classical_quadratic(), x)
        assert rep.residual_osc <= 1e-12
        assert rep.c_est == pytest.approx([1.0], abs=1e-12)

    def test_residual_shrinks_on_delayed_minimizer(self):
        p = point_delay_quadratic(1, 0.5, 1.0)
        psi = HistoryFunction.constant(0.5, 1.0)
        osc = []
        for N in (8, 16, 32):
            res = minimize(p, psi, 2.0, SolveConfig(N=N))
            osc.append(el_data(p, res.trajectory).residual_osc)
        assert osc[0] > osc[1] > osc[2]
        assert osc[1] / osc[2] >= 3.0

    def test_affine_guess_not_stationary(self):
        p = point_delay_quadratic(1, 0.5, 1.0)
        x = guess()
        assert el_data(p, x).residual_osc > 1e-2
        assert weak_stationarity(p, x) > 1e-3

    def test_zero_lagrangian(self):
        p = DelayLagrangian(
            1, 0.5, 1.0,
            lambda t, phi, v: 0.0,
            lambda t, phi, v: CovectorMeasure.zero(0.5, 1),
            lambda t, phi, v: np.zeros(1),
        )
        x = guess()
        assert weak_stationarity(p, x) == 0.0
        rep = el_data(p, x)
        assert rep.residual_osc == 0.0 and np.all(rep.q == 0.0)

    def test_report_csv(self, tmp_path):
        p = point_delay_quadratic(2, 0.5, 1.0)
        x = affine_initial_guess(HistoryFunction.constant(0.5, [1.0, 0.0]), [2.0, -1.0], 1.0, 8)
        rep = el_data(p, x)
        path = tmp_path / "el.csv"
        write_el_report_csv(rep, path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["t", "q_1", "q_2", "P_1", "P_2", "c_1", "c_2", "residual_1", "residual_2"]
        assert len(rows) == 10
        body = np.array(rows[1:], dtype=float)
        assert np.allclose(body[:, 0], x.nodes, atol=0)
        assert np.allclose(body[:, 1:3] - body[:, 3:5] - body[:, 5:7], body[:, 7:9], atol=1e-14)
        write_el_report_csv(rep, tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


class TestFubini:
    def test_zero_perturbation(self):
        p = point_delay_quadratic(1, 0.5, 1.0)
        x = guess()
        h = Perturbation(0.5, 1.0, np.zeros((17, 1)), np.zeros((17, 1)))
        assert fubini_identity_check(p, x, h) == (0.0, 0.0)

    def test_point_delay(self, rng):
        p = point_delay_quadratic(1, 0.5, 1.0, ca=1.0, cab=0.3, cbv=0.2)
        x = random_smooth_trajectory(rng, 1, 0.5, 1.0, 32)
        h = random_smooth_perturbation(rng, 1, 0.5, 1.0, 32)
        lhs, rhs = fubini_identity_check(p, x, h)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))

    def test_density_polynomial_direction(self):
        p = distributed_delay_quadratic(1, 0.5, 1.0, k0=1.0, k1=-1.0, M=16)
        N = 16
        t = np.linspace(0, 1, N + 1)
        x = affine_initial_guess(HistoryFunction.constant(0.5, 0.0), 1.0, 1.0, N)
        vals = (t * (1 - t))[:, None]
        ders = (1 - 2 * t)[:, None]
        h = Perturbation(0.5, 1.0, vals, ders)
        lhs, rhs = fubini_identity_check(p, x, h)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))

    def test_gap_shrinks_with_subsamples(self):
        rng = np.random.default_rng(7)
        p = synthetic_lagrangian(rng, 1, 0.5, 1.0)
        x = random_smooth_trajectory(rng, 1, 0.5, 1.0, 8)
        h = random_smooth_perturbation(rng, 1, 0.5, 1.0, 8)
        gaps = []
        for s in (2, 4, 8):
            lhs, rhs = fubini_identity_check(p, x, h, QuadratureRule(s), LagrangianAlong(p, x))
            gaps.append(abs(lhs - rhs))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[0] / gaps[2] > 30
