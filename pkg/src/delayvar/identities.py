"""Randomized instances and property suites for the measure identities.

Used by the ``identity`` command and the test-suite: the pairing bound,
the Stieltjes integration-by-parts identity, and the exchange-of-integration
identity for ``D2F`` along a trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criterion import QuadratureRule, directional_derivative, evaluate_J
from .euler_lagrange import fubini_identity_check
from .measures import (
    CovectorMeasure,
    coordinate_variations,
    cumulative,
    integrate_by_parts_check,
    pair,
    total_variation,
)
from .problem import BUILTIN_PROBLEMS, DelayLagrangian, make_problem
from .trajectory import HistoryFunction, Perturbation, Trajectory

__all__ = [
    "random_measure",
    "random_piecewise_linear",
    "random_smooth_trajectory",
    "random_smooth_perturbation",
    "synthetic_lagrangian",
    "pairing_bound_suite",
    "ibp_suite",
    "fubini_suite",
    "zero_measure_suite",
    "run_all",
    "random_builtin_problem",
    "gradient_fd_suite",
    "SuiteResult",
]


@dataclass
class SuiteResult:
    name: str
    cases: int
    max_discrepancy: float
    tolerance: float
    violations: int

    @property
    def passed(self):
        return self.violations == 0


def random_measure(rng, r, n, atoms=True, density=True, max_atoms=4, M=None, on_grid=None):
    """Random atoms (locations uniform in ``[-r, 0]``) plus a random density.

    ``on_grid`` (a step) snaps atom locations to multiples of that step.
    """
    m = CovectorMeasure.zero(r, n)
    if atoms:
        k = int(rng.integers(1, max_atoms + 1))
        locs = -r * rng.random(k)
        if on_grid is not None:
            locs = -on_grid * np.round(-locs / on_grid)
        if rng.random() < 0.3:
            locs[0] = 0.0
        if rng.random() < 0.3:
            locs[-1] = -r
        m = m + CovectorMeasure.atoms(r, locs, rng.normal(size=(k, n)))
    if density:
        M = M or int(rng.choice([4, 8, 16]))
        coef = rng.normal(size=(3, n))
        m = m + CovectorMeasure.from_density(
            r, lambda th: coef[0] + th[:, None] * coef[1] + np.sin(3 * th)[:, None] * coef[2], M, n
        )
    return m


def random_piecewise_linear(rng, r, n, pieces=None):
    """Random continuous piecewise-linear test function on ``[-r, 0]``."""
    pieces = pieces or int(rng.integers(1, 9))
    knots = np.sort(np.concatenate([[-r, 0.0], -r * rng.random(pieces - 1)]))
    vals = rng.normal(size=(knots.size, n)) * rng.exponential()

    def phi(theta):
        th = np.atleast_1d(theta)
        return np.column_stack([np.interp(th, knots, vals[:, k]) for k in range(n)])

    phi.breakpoints = knots[1:-1]
    phi.sup = float(np.abs(vals).max())
    phi.coordinate_sup = np.abs(vals).max(axis=0)
    return phi


def _smooth_coeffs(rng, n):
    return rng.normal(size=(4, n)), rng.uniform(0.5, 1.5, size=n)


def random_smooth_trajectory(rng, n, r, T, N):
    """History sinusoid glued to the Hermite interpolant of a smooth function."""
    amp = rng.normal(size=n)
    psi = HistoryFunction.sinusoid(r, amp, rng.uniform(0.5, 1.5, size=n), rng.normal(size=n), rng.normal(size=n))
    c, w = _smooth_coeffs(rng, n)
    a0 = psi(0.0)

    def f(t):
        t = t[:, None]
        return a0 + c[0] * t + c[1] * t * t + c[2] * (np.sin(w * t + c[3]) - np.sin(c[3]))

    def df(t):
        t = t[:, None]
        return c[0] + 2 * c[1] * t + c[2] * w * np.cos(w * t + c[3])

    t = T * np.arange(N + 1) / N
    vals = f(t)
    vals[0] = a0
    return Trajectory(psi, T, vals, df(t))


def random_smooth_perturbation(rng, n, r, T, N):
    """Hermite interpolant of ``t (T - t) (c0 + c1 sin(w t))``."""
    c, w = _smooth_coeffs(rng, n)

    def f(t):
        t = t[:, None]
        return t * (T - t) * (c[0] + c[1] * np.sin(w * t))

    def df(t):
        t = t[:, None]
        base = c[0] + c[1] * np.sin(w * t)
        return (T - 2 * t) * base + t * (T - t) * c[1] * w * np.cos(w * t)

    t = T * np.arange(N + 1) / N
    vals = f(t)
    vals[0] = 0.0
    vals[-1] = 0.0
    return Perturbation(r, T, vals, df(t))


def synthetic_lagrangian(rng, n, r, T, M=8, max_atoms=3):
    """A problem whose ``D2F`` is a random atoms-plus-density measure.

    Atom weights and the density amplitude vary with ``t`` and with the
    segment (through ``phi`` at the atom, resp. at 0), so the measure moves
    along the trajectory. Only ``d2`` is meaningful; the integrand is zero.
    """
    k = int(rng.integers(1, max_atoms + 1))
    locs = np.unique(np.concatenate([[-r], -r * rng.random(k - 1)]))
    k = locs.size
    base = rng.normal(size=(k, n))
    slope = rng.normal(size=(k, n))
    gain = rng.normal(size=(k, n))
    dc = rng.normal(size=(3, n))
    shape = rng.normal(size=(2, n))
    grid_shape = shape[0] + np.linspace(-r, 0.0, M + 1)[:, None] * shape[1]

    def d2(t, phi, v):
        at = np.asarray(phi(locs), dtype=float).reshape(k, n)
        wts = base + slope * t + gain * at
        amp = dc[0] + dc[1] * t + dc[2] * np.asarray(phi(0.0), dtype=float).reshape(n)
        return CovectorMeasure(r, n, locs, wts, grid_shape * amp[None, :])

    return DelayLagrangian(
        n,
        r,
        T,
        lambda t, phi, v: 0.0,
        d2,
        lambda t, phi, v: np.zeros(n),
        tuple(locs),
        "synthetic",
    )


def pairing_bound_suite(rng, cases=1000, r=0.5, max_n=3):
    """Count violations of ``|<m, phi>| <= n TV(m) |phi|`` and of the per-coordinate bound.

    The reported discrepancy is the largest excess over either bound
    (zero when both always hold).
    """
    worst = 0.0
    violations = 0
    for _ in range(cases):
        n = int(rng.integers(1, max_n + 1))
        m = random_measure(rng, r, n, atoms=bool(rng.random() < 0.8), density=bool(rng.random() < 0.8))
        phi = random_piecewise_linear(rng, r, n)
        val = abs(pair(m, phi))
        tv = total_variation(m)
        coarse = n * tv * phi.sup
        sharp = float(coordinate_variations(m) @ phi.coordinate_sup)
        slack = 1e-12 * (1.0 + coarse)
        if val > sharp + slack or sharp > coarse + slack:
            violations += 1
        worst = max(worst, val - sharp, sharp - coarse)
    return SuiteResult("pairing_bound", cases, worst, 0.0, violations)


def ibp_suite(rng, cases=200, r=0.5):
    """Integration by parts on atoms-only and density-with-polynomial cases."""
    worst_atoms = 0.0
    worst_dens = 0.0
    viol_atoms = viol_dens = 0
    for i in range(cases):
        n = int(rng.integers(1, 4))
        t = float(rng.uniform(0.0, 2.0))
        coef = rng.normal(size=(4, n))
        if i % 2:
            # density cases use quadratics, on which the rules are exact
            coef[3] = 0.0

        def h(s, c=coef):
            s = np.atleast_1d(s)[:, None]
            return c[0] + c[1] * s + c[2] * s**2 + c[3] * s**3

        def dh(s, c=coef):
            s = np.atleast_1d(s)[:, None]
            return c[1] + 2 * c[2] * s + 3 * c[3] * s**2

        if i % 2 == 0:
            m = random_measure(rng, r, n, atoms=True, density=False)
            lhs, rhs = integrate_by_parts_check(m, h, dh, t)
            err = abs(lhs - rhs)
            worst_atoms = max(worst_atoms, err)
            viol_atoms += err > 1e-12
        else:
            M = int(rng.choice([4, 8, 16]))
            cd = rng.normal(size=(2, n))
            m = CovectorMeasure.from_density(r, lambda th: cd[0] + th[:, None] * cd[1], M, n)
            lhs, rhs = integrate_by_parts_check(m, h, dh, t)
            err = abs(lhs - rhs)
            worst_dens = max(worst_dens, err)
            viol_dens += err > 1e-10
    return (
        SuiteResult("ibp_atoms", (cases + 1) // 2, worst_atoms, 1e-12, viol_atoms),
        SuiteResult("ibp_density", cases // 2, worst_dens, 1e-10, viol_dens),
    )


def fubini_suite(rng, cases=100, N=32, T=1.0, r=0.5, subsamples=4, tol=1e-8):
    """Relative gap ``|lhs - rhs| / (1 + |lhs|)`` on random triples."""
    q = QuadratureRule(subsamples)
    worst = 0.0
    viol = 0
    if cases == 0:
        return SuiteResult("fubini", 0, 0.0, tol, 0)
    for _ in range(cases):
        n = int(rng.integers(1, 3))
        prob = synthetic_lagrangian(rng, n, r, T)
        x = random_smooth_trajectory(rng, n, r, T, N)
        h = random_smooth_perturbation(rng, n, r, T, N)
        lhs, rhs = fubini_identity_check(prob, x, h, q)
        gap = abs(lhs - rhs) / (1.0 + abs(lhs))
        worst = max(worst, gap)
        viol += gap > tol
    return SuiteResult("fubini", cases, worst, tol, viol)


def zero_measure_suite(rng, cases=20, r=0.5):
    """Zero measures give exactly zero pairing, variation, cumulative and IBP sides."""
    worst = 0.0
    viol = 0
    for _ in range(cases):
        n = int(rng.integers(1, 4))
        m = CovectorMeasure.zero(r, n)
        phi = random_piecewise_linear(rng, r, n)
        theta = -r * rng.random(5)
        coef = rng.normal(size=(2, n))

        def h(s, c=coef):
            return c[0] + np.atleast_1d(s)[:, None] * c[1]

        def dh(s, c=coef):
            return np.broadcast_to(c[1], (np.size(s), n))

        vals = [pair(m, phi), total_variation(m), *integrate_by_parts_check(m, h, dh, 0.3)]
        vals += list(np.ravel(cumulative(m, theta)))
        big = max(abs(float(v)) for v in vals)
        worst = max(worst, big)
        viol += big != 0.0
    return SuiteResult("zero_measure", cases, worst, 0.0, viol)


def run_all(seed, fubini_cases=100, pairing_cases=1000, ibp_cases=200, zero_cases=20):
    """Every suite from one seed; each suite draws from its own child stream."""
    streams = np.random.SeedSequence(seed).spawn(4)
    rngs = [np.random.default_rng(s) for s in streams]
    results = [fubini_suite(rngs[0], fubini_cases), pairing_bound_suite(rngs[1], pairing_cases)]
    results += list(ibp_suite(rngs[2], ibp_cases))
    results.append(zero_measure_suite(rngs[3], zero_cases))
    return results


def random_builtin_problem(rng, name, n, r, T):
    """A built-in family with coefficients drawn from moderate ranges."""
    u = rng.uniform
    if name == "classical_quadratic":
        coeffs = dict(cv=u(0.5, 2.0), ca=u(0.0, 2.0), target=float(rng.normal()))
    elif name == "point_delay_quadratic":
        coeffs = dict(cv=u(0.5, 2.0), ca=u(0.0, 2.0), cb=u(0.0, 2.0), cab=u(-0.5, 0.5), cbv=u(-0.5, 0.5))
    elif name == "distributed_delay_quadratic":
        coeffs = dict(cv=u(0.5, 2.0), ca=u(0.0, 2.0), cw=u(0.0, 2.0), k0=u(-1.0, 1.0), k1=u(-2.0, 2.0),
                      M=int(rng.choice([8, 16])))
    else:
        raise ValueError(f"unknown built-in problem {name!r}")
    return make_problem(name, n, r, T, **coeffs)


def gradient_fd_suite(rng, cases=100, N=16, r=0.5, T=1.0, eps=1e-5, tol=1e-6):
    """Directional derivative against central differences of ``J`` on random built-ins."""
    names = sorted(BUILTIN_PROBLEMS)
    worst = 0.0
    viol = 0
    for i in range(cases):
        n = int(rng.integers(1, 3))
        prob = random_builtin_problem(rng, names[i % len(names)], n, r, T)
        x = random_smooth_trajectory(rng, n, r, T, N)
        h = random_smooth_perturbation(rng, n, r, T, N)
        d = directional_derivative(prob, x, h)
        fd = (evaluate_J(prob, x.perturbed(h, eps)) - evaluate_J(prob, x.perturbed(h, -eps))) / (2 * eps)
        rel = abs(d - fd) / max(abs(d), abs(fd), 1e-300)
        worst = max(worst, rel)
        viol += rel > tol
    return SuiteResult("gradient_fd", cases, worst, tol, viol)
