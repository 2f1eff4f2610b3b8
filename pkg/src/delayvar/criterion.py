"""The criterion ``J(x) = int_0^T F(t, x_t, x'(t)) dt`` and its derivative."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quad import merge_points, simpson_rule
from .measures import pair
from .problem import DelayLagrangian
from .trajectory import coefficient_dofs

__all__ = [
    "QuadratureRule",
    "LagrangianAlong",
    "time_breakpoints",
    "evaluate_J",
    "directional_derivative",
    "derivative_load",
    "gradient",
    "free_gradient",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Simpson on the node grid, ``subsamples`` per piece.

    Pieces are further split at ``breakpoints`` and at the breakpoints
    implied by the problem's atoms (see :func:`time_breakpoints`).
    """

    subsamples: int = 4
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.subsamples < 2 or self.subsamples % 2:
            raise ValueError(f"subsamples must be even and >= 2, got {self.subsamples}")

    def nodes_weights(self, p: DelayLagrangian, x):
        knots = merge_points(
            np.concatenate([x.nodes, time_breakpoints(p, x), np.asarray(self.breakpoints, float)]),
            0.0,
            x.T,
        )
        return simpson_rule(knots, self.subsamples)


def time_breakpoints(p: DelayLagrangian, x) -> np.ndarray:
    """Times in ``(0, T)`` where the criterion integrand may lose smoothness.

    For every atom location ``theta`` (plus the window ends ``0``, ``-r``)
    these are the node shifts ``t_j - theta`` and ``T + theta`` (which
    includes ``T - r``). With a delay-commensurate grid and atoms on the
    grid they are all nodes.
    """
    thetas = np.unique(np.concatenate([np.asarray(p.atoms, float), [0.0, -p.r]]))
    nodes = x.nodes
    pts = [nodes[:, None] - thetas[None, :], x.T + thetas]
    allp = np.concatenate([np.ravel(a) for a in pts])
    return allp[(allp > 0) & (allp < x.T)]


class LagrangianAlong:
    """Memoized segment, velocity, ``D2F`` and ``D3F`` of a problem along a trajectory."""

    def __init__(self, p: DelayLagrangian, x):
        self.p = p
        self.x = x
        self._sv = {}
        self._d2 = {}
        self._d3 = {}

    def sv(self, t):
        t = float(t)
        hit = self._sv.get(t)
        if hit is None:
            hit = self._sv[t] = (self.x.segment(t), self.x.derivative(t))
        return hit

    def d2(self, t):
        t = float(t)
        hit = self._d2.get(t)
        if hit is None:
            seg, v = self.sv(t)
            hit = self._d2[t] = self.p.d2(t, seg, v)
        return hit

    def d3(self, t):
        t = float(t)
        hit = self._d3.get(t)
        if hit is None:
            seg, v = self.sv(t)
            hit = self._d3[t] = np.asarray(self.p.d3(t, seg, v), dtype=float)
        return hit

    def at(self, t):
        seg, v = self.sv(t)
        return seg, v, self.d2(t), self.d3(t)


def evaluate_J(p: DelayLagrangian, x, q: QuadratureRule = QuadratureRule()) -> float:
    ts, ws = q.nodes_weights(p, x)
    vals = np.empty(ts.size)
    for i, t in enumerate(ts):
        seg = x.segment(t)
        vals[i] = p.integrand(t, seg, x.derivative(t))
    return float(ws @ vals)


def directional_derivative(p, x, h, q: QuadratureRule = QuadratureRule(), along=None) -> float:
    """``DJ(x) . h`` by direct quadrature of the pairing and velocity terms."""
    along = along or LagrangianAlong(p, x)
    ts, ws = q.nodes_weights(p, x)
    total = 0.0
    for t, w in zip(ts, ws):
        _, _, m, g = along.at(t)
        total += w * (pair(m, h.segment(t)) + g @ h.derivative(t))
    return float(total)


def derivative_load(p, x, q: QuadratureRule = QuadratureRule(), along=None):
    """``DJ(x)`` as a linear functional on Hermite node coefficients.

    Returns ``(L_val, L_der)`` of shape ``(N + 1, n)`` with
    ``DJ(x) . h = sum(L_val * h.values) + sum(L_der * h.derivs)`` for any
    perturbation on the same grid.
    """
    along = along or LagrangianAlong(p, x)
    curve = x.curve
    n = x.n
    ts, ws = q.nodes_weights(p, x)
    taus, coefs = [], []
    dtaus, dcoefs = [], []
    for t, w in zip(ts, ws):
        seg, _, m, g = along.at(t)
        theta, mw = m.discretize(seg.breakpoints)
        tau = t + theta
        keep = tau >= 0.0
        taus.append(np.minimum(tau[keep], x.T))
        coefs.append(w * mw[keep])
        dtaus.append(t)
        dcoefs.append(w * g)
    L = np.zeros((2, x.N + 1, n))
    _accumulate(L, curve, np.concatenate(taus), np.concatenate(coefs, axis=0), 0)
    _accumulate(L, curve, np.asarray(dtaus), np.asarray(dcoefs).reshape(-1, n), 1)
    return L[0], L[1]


def _accumulate(L, curve, tau, coef, order):
    j, W = curve.shape_functions(tau, order)
    # columns of W act on (y_j, y'_j, y_{j+1}, y'_{j+1})
    np.add.at(L[0], j, W[:, 0, None] * coef)
    np.add.at(L[1], j, W[:, 1, None] * coef)
    np.add.at(L[0], j + 1, W[:, 2, None] * coef)
    np.add.at(L[1], j + 1, W[:, 3, None] * coef)


def gradient(p, x, basis, q: QuadratureRule = QuadratureRule(), along=None) -> np.ndarray:
    """``[DJ(x) . h for h in basis]`` through the assembled load."""
    L_val, L_der = derivative_load(p, x, q, along)
    return np.array([np.sum(L_val * h.values) + np.sum(L_der * h.derivs) for h in basis])


def free_gradient(p, x, q: QuadratureRule = QuadratureRule(), along=None) -> np.ndarray:
    """Gradient over the standard free-dof basis (same layout as ``basis_perturbations``)."""
    L_val, L_der = derivative_load(p, x, q, along)
    return coefficient_dofs(L_val, L_der)
