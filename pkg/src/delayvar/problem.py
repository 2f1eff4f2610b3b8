"""Delay Lagrangians ``F(t, phi, v)`` with their partial differentials.

``d2`` returns the measure representing the differential in the segment
variable, ``d3`` the covector differential in the velocity. Nothing here
differentiates automatically: users supply both and can check them with
:func:`validate_d2` / :func:`validate_d3`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import CovectorMeasure, pair

__all__ = [
    "DelayLagrangian",
    "point_delay_lagrangian",
    "distributed_delay_lagrangian",
    "classical_quadratic",
    "point_delay_quadratic",
    "distributed_delay_quadratic",
    "BUILTIN_PROBLEMS",
    "make_problem",
    "validate_d2",
    "validate_d3",
]


@dataclass(frozen=True)
class DelayLagrangian:
    """Integrand ``F`` and its partials.

    ``integrand(t, phi, v) -> float``, ``d2(t, phi, v) -> CovectorMeasure``,
    ``d3(t, phi, v) -> (n,) array``; ``phi`` is a callable segment on
    ``[-r, 0]``. All three must be pure. ``atoms`` lists the locations
    where ``d2`` may carry point masses; they fix quadrature breakpoints.
    """

    n: int
    r: float
    T: float
    integrand: Callable
    d2: Callable
    d3: Callable
    atoms: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def scaled(self, alpha):
        """The Lagrangian ``alpha * F``."""
        return DelayLagrangian(
            self.n,
            self.r,
            self.T,
            lambda t, phi, v: alpha * self.integrand(t, phi, v),
            lambda t, phi, v: alpha * self.d2(t, phi, v),
            lambda t, phi, v: alpha * np.asarray(self.d3(t, phi, v)),
            self.atoms,
            self.name,
            dict(self.params, scale=alpha),
        )


def point_delay_lagrangian(n, r, T, core, d_a, d_b, d_v, name="point_delay", params=None):
    """``F(t, phi, v) = L(t, phi(0), phi(-r), v)``.

    ``core``, ``d_a``, ``d_b``, ``d_v`` take ``(t, a, b, v)``; the partials
    return covectors. ``D2F`` is ``dL/da`` at 0 plus ``dL/db`` at ``-r``.
    """

    def ends(phi):
        ab = np.asarray(phi(np.array([0.0, -r])), dtype=float).reshape(2, n)
        return ab[0], ab[1]

    def integrand(t, phi, v):
        a, b = ends(phi)
        return float(core(t, a, b, v))

    def d2(t, phi, v):
        a, b = ends(phi)
        w = np.vstack([np.asarray(d_b(t, a, b, v), float), np.asarray(d_a(t, a, b, v), float)])
        return CovectorMeasure(r, n, np.array([-r, 0.0]), w)

    def d3(t, phi, v):
        a, b = ends(phi)
        return np.asarray(d_v(t, a, b, v), dtype=float)

    return DelayLagrangian(n, r, T, integrand, d2, d3, (-r, 0.0), name, dict(params or {}))


def distributed_delay_lagrangian(
    n, r, T, kernel, core, d_a, d_w, d_v, M=32, name="distributed_delay", params=None
):
    """``F(t, phi, v) = L(t, phi(0), w, v)`` with ``w = int k(theta) phi(theta) dtheta``.

    The scalar kernel ``k`` is sampled on ``M`` intervals of ``[-r, 0]``
    and ``w`` is the pairing of ``phi`` with that sampled density, so the
    differential ``dL/da`` at 0 plus density ``dL/dw k`` is consistent with
    the integrand to rounding.
    """
    kernel_measure = CovectorMeasure.from_density(r, kernel, M, n=1)
    k_samples = kernel_measure.density[:, 0]

    def weights(phi):
        bps = getattr(phi, "breakpoints", ())
        theta, wk = kernel_measure.discretize(bps)
        vals = np.asarray(phi(theta), dtype=float).reshape(theta.size, n)
        return wk[:, 0] @ vals

    def parts(phi):
        return np.asarray(phi(0.0), dtype=float).reshape(n), weights(phi)

    def integrand(t, phi, v):
        a, w = parts(phi)
        return float(core(t, a, w, v))

    def d2(t, phi, v):
        a, w = parts(phi)
        gw = np.asarray(d_w(t, a, w, v), dtype=float)
        dens = k_samples[:, None] * gw[None, :]
        return CovectorMeasure(r, n, np.array([0.0]), np.asarray(d_a(t, a, w, v), float)[None, :], dens)

    def d3(t, phi, v):
        a, w = parts(phi)
        return np.asarray(d_v(t, a, w, v), dtype=float)

    return DelayLagrangian(n, r, T, integrand, d2, d3, (0.0,), name, dict(params or {}))


def _vec(x, n):
    return np.broadcast_to(np.asarray(x, dtype=float), (n,))


def classical_quadratic(n=1, r=0.5, T=1.0, cv=1.0, ca=0.0, target=0.0):
    """``F = cv/2 |v|^2 + ca/2 |phi(0) - target|^2`` (no delay dependence)."""
    tgt = _vec(target, n)
    return point_delay_lagrangian(
        n,
        r,
        T,
        lambda t, a, b, v: 0.5 * cv * v @ v + 0.5 * ca * (a - tgt) @ (a - tgt),
        lambda t, a, b, v: ca * (a - tgt),
        lambda t, a, b, v: np.zeros(n),
        lambda t, a, b, v: cv * v,
        name="classical_quadratic",
        params=dict(cv=cv, ca=ca, target=target),
    )


def point_delay_quadratic(n=1, r=0.5, T=1.0, cv=1.0, ca=0.0, cb=1.0, cab=0.0, cbv=0.0):
    """``F = cv/2 |v|^2 + ca/2 |a|^2 + cb/2 |b|^2 + cab a.b + cbv b.v``

    with ``a = phi(0)`` and ``b = phi(-r)``.
    """
    return point_delay_lagrangian(
        n,
        r,
        T,
        lambda t, a, b, v: 0.5 * cv * v @ v + 0.5 * ca * a @ a + 0.5 * cb * b @ b + cab * a @ b + cbv * b @ v,
        lambda t, a, b, v: ca * a + cab * b,
        lambda t, a, b, v: cb * b + cab * a + cbv * v,
        lambda t, a, b, v: cv * v + cbv * b,
        name="point_delay_quadratic",
        params=dict(cv=cv, ca=ca, cb=cb, cab=cab, cbv=cbv),
    )


def distributed_delay_quadratic(n=1, r=0.5, T=1.0, cv=1.0, ca=0.0, cw=1.0, k0=1.0, k1=0.0, M=32):
    """``F = cv/2 |v|^2 + ca/2 |phi(0)|^2 + cw/2 |w|^2`` with kernel ``k = k0 + k1 theta``."""
    return distributed_delay_lagrangian(
        n,
        r,
        T,
        lambda th: k0 + k1 * th,
        lambda t, a, w, v: 0.5 * cv * v @ v + 0.5 * ca * a @ a + 0.5 * cw * w @ w,
        lambda t, a, w, v: ca * a,
        lambda t, a, w, v: cw * w,
        lambda t, a, w, v: cv * v,
        M=M,
        name="distributed_delay_quadratic",
        params=dict(cv=cv, ca=ca, cw=cw, k0=k0, k1=k1, M=M),
    )


BUILTIN_PROBLEMS = {
    "classical_quadratic": classical_quadratic,
    "point_delay_quadratic": point_delay_quadratic,
    "distributed_delay_quadratic": distributed_delay_quadratic,
}


def make_problem(name, n, r, T, **coefficients) -> DelayLagrangian:
    try:
        factory = BUILTIN_PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(BUILTIN_PROBLEMS)}") from None
    return factory(n=n, r=r, T=T, **coefficients)


class _Shifted:
    """Segment ``phi + eps * dphi`` keeping both sets of breakpoints."""

    def __init__(self, phi, dphi, eps):
        self.phi, self.dphi, self.eps = phi, dphi, eps
        self.breakpoints = np.concatenate(
            [np.ravel(getattr(phi, "breakpoints", ())), np.ravel(getattr(dphi, "breakpoints", ()))]
        )

    def __call__(self, theta):
        return np.asarray(self.phi(theta)) + self.eps * np.asarray(self.dphi(theta))


def _rel_err(analytic, numeric, floor):
    scale = max(abs(analytic), abs(numeric), floor)
    return abs(analytic - numeric) / scale


def validate_d2(p: DelayLagrangian, t, phi, v, directions, eps=1e-5, floor=1e-8):
    """Worst relative error between ``pair(d2, dphi)`` and central differences.

    Errors are relative to ``max(|exact|, |fd|, floor)``.
    """
    v = np.asarray(v, dtype=float)
    m = p.d2(t, phi, v)
    worst = 0.0
    for dphi in directions:
        exact = pair(m, dphi, breakpoints=_Shifted(phi, dphi, 0.0).breakpoints)
        up = p.integrand(t, _Shifted(phi, dphi, eps), v)
        down = p.integrand(t, _Shifted(phi, dphi, -eps), v)
        worst = max(worst, _rel_err(exact, (up - down) / (2 * eps), floor))
    return worst


def validate_d3(p: DelayLagrangian, t, phi, v, eps=1e-5, floor=1e-8):
    """Worst relative error between ``d3`` and central differences along ``e_k``."""
    v = np.asarray(v, dtype=float)
    g = np.asarray(p.d3(t, phi, v), dtype=float)
    worst = 0.0
    for k in range(p.n):
        e = np.zeros(p.n)
        e[k] = eps
        fd = (p.integrand(t, phi, v + e) - p.integrand(t, phi, v - e)) / (2 * eps)
        worst = max(worst, _rel_err(g[k], fd, floor))
    return worst
