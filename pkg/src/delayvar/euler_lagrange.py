"""Euler-Lagrange diagnostics for delay problems, in integral form.

Along a trajectory ``x`` write ``g(t, .)`` for the cumulative function of
``D2F[t]``. With

    p(t) = g(t, 0)
    A(t) = int_t^{min(t + r, T)} g(s, t - s) ds        (the advance integral)
    q(t) = D3F[t] - A(t)

a stationary trajectory has ``q(t) - int_0^t p = c`` for a constant
covector ``c``. The oscillation of ``q - int p`` around its mean is the
residual reported here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._quad import cumulative_simpson, merge_points
from .criterion import (
    LagrangianAlong,
    QuadratureRule,
    derivative_load,
    free_gradient,
    time_breakpoints,
)
from .measures import cumulative, cumulative_batch, pair
from .trajectory import basis_perturbations, norm_X

__all__ = [
    "ELReport",
    "advance_integral",
    "el_data",
    "weak_stationarity",
    "fubini_identity_check",
    "write_el_report_csv",
]


@dataclass
class ELReport:
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray
    P: np.ndarray
    advance: np.ndarray
    c_est: np.ndarray
    residual: np.ndarray
    residual_osc: float
    weak_residuals: list = field(default_factory=list)

    @property
    def n(self):
        return self.p.shape[1]


def _inner_knots(along, t, b, m0):
    x = along.x
    p = along.p
    thetas = np.concatenate([np.asarray(p.atoms, float), m0.atom_locations, m0.grid, [0.0, -p.r]])
    extra = np.concatenate([x.nodes, time_breakpoints(p, x), t - thetas])
    return merge_points(extra, t, b)


def advance_integral(prob, x, t, q: QuadratureRule = QuadratureRule(), along=None):
    """``int_t^{min(t+r, T)} g(s, t - s) ds`` as a covector.

    Simpson pieces are split wherever ``t - s`` crosses an atom or a
    density grid point and at the nodes. Piece ends use the one-sided
    limits of ``g`` seen from inside the piece, so jumps never leak.
    """
    along = along or LagrangianAlong(prob, x)
    t = float(t)
    b = min(t + prob.r, x.T)
    if not 0.0 <= t <= x.T:
        raise ValueError(f"advance integral requested at t={t} outside [0, {x.T}]")
    if b - t <= 0.0:
        return np.zeros(prob.n)
    knots = _inner_knots(along, t, b, along.d2(t))
    s_sub = q.subsamples
    base = np.ones(s_sub + 1)
    base[1:-1:2] = 4.0
    base[2:-1:2] = 2.0
    sa, sb = knots[:-1, None], knots[1:, None]
    pts = sa + (sb - sa) * (np.arange(s_sub + 1) / s_sub)[None, :]
    pts[:, -1] = knots[1:]
    wts = (sb - sa) / (3.0 * s_sub) * base[None, :]
    side = np.zeros(pts.shape, dtype=int)
    side[:, 0] = -1
    side[:, -1] = 1
    flat = pts.ravel()
    # keep the shifted argument inside the window
    theta = np.clip(t - flat, -prob.r, 0.0)
    vals = cumulative_batch([along.d2(s) for s in flat], theta, side.ravel())
    return wts.ravel() @ vals


def el_data(prob, x, grid=None, q: QuadratureRule = QuadratureRule(), along=None) -> ELReport:
    """Euler-Lagrange data on ``grid`` (default: the trajectory nodes)."""
    along = along or LagrangianAlong(prob, x)
    times = np.asarray(x.nodes if grid is None else grid, dtype=float)
    n = prob.n
    p_vals = np.array([cumulative(along.d2(t), 0.0) for t in times]).reshape(-1, n)
    adv = np.array([advance_integral(prob, x, t, q, along) for t in times]).reshape(-1, n)
    d3 = np.array([along.d3(t) for t in times]).reshape(-1, n)
    q_vals = d3 - adv

    knots = merge_points(np.concatenate([x.nodes, time_breakpoints(prob, x), times]), 0.0, x.T)
    running = cumulative_simpson(
        knots,
        lambda ts: np.array([cumulative(along.d2(s), 0.0) for s in ts]).reshape(-1, n),
        q.subsamples,
    )
    P = np.array([running[np.argmin(np.abs(knots - t))] for t in times]).reshape(-1, n)

    diff = q_vals - P
    c_est = diff.mean(axis=0)
    residual = diff - c_est
    osc = float(np.max(np.sum(np.abs(residual), axis=1))) if residual.size else 0.0

    g = free_gradient(prob, x, q, along)
    weak = [(i, float(v)) for i, v in enumerate(g)]
    return ELReport(times, p_vals, q_vals, P, adv, c_est, residual, osc, weak)


def weak_stationarity(prob, x, basis=None, q: QuadratureRule = QuadratureRule(), along=None) -> float:
    """``max_i |DJ(x) . h_i| / ||h_i||_X`` over a perturbation basis."""
    if basis is None:
        basis = basis_perturbations(x.N, x.n, x.r, x.T)
    L_val, L_der = derivative_load(prob, x, q, along)
    worst = 0.0
    for h in basis:
        nh = norm_X(h)
        if nh == 0:
            continue
        val = abs(np.sum(L_val * h.values) + np.sum(L_der * h.derivs))
        worst = max(worst, val / nh)
    return float(worst)


def fubini_identity_check(prob, x, h, q: QuadratureRule = QuadratureRule(), along=None):
    """Both sides of the exchange-of-integration identity for ``D2F`` along ``x``.

    ``lhs = int_0^T D2F[t] . h_t dt`` by direct pairing;
    ``rhs = int_0^T p(t) . h(t) dt - int_0^T A(t) . h'(t) dt``.
    """
    along = along or LagrangianAlong(prob, x)
    ts, ws = q.nodes_weights(prob, x)
    lhs = 0.0
    rhs = 0.0
    for t, w in zip(ts, ws):
        m = along.d2(t)
        lhs += w * pair(m, h.segment(t))
        ht = h(t)
        dht = h.derivative(t)
        rhs += w * (cumulative(m, 0.0) @ ht)
        if np.any(dht != 0):
            rhs -= w * (advance_integral(prob, x, t, q, along) @ dht)
    return float(lhs), float(rhs)


def _fmt(v):
    return format(float(v), ".17g")


def write_el_report_csv(report: ELReport, path):
    """Columns ``t, q_k, P_k, c_k, residual_k`` for ``k = 1..n``."""
    n = report.n
    header = ["t"]
    for name in ("q", "P", "c", "residual"):
        header += [f"{name}_{k + 1}" for k in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(report.times):
            row = [_fmt(t)]
            row += [_fmt(v) for v in report.q[i]]
            row += [_fmt(v) for v in report.P[i]]
            row += [_fmt(v) for v in report.c_est]
            row += [_fmt(v) for v in report.residual[i]]
            w.writerow(row)
