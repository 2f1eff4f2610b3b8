"""Covector-valued measures on the delay window ``[-r, 0]``.

A measure is stored as finitely many atoms plus an absolutely continuous
part whose density is sampled on a uniform grid and linearly interpolated.
Each measure is also viewed through its normalized bounded-variation
cumulative function ``g``: ``g(-r) = 0``, left-continuous on ``(-r, 0)``,
and ``g(0)`` equal to the total mass (an atom sitting at ``0`` counts).

Covectors are plain 1-d numpy arrays. Their norm is the sum of absolute
components; the norm on vectors is the max of absolute components.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from ._quad import SNAP, merge_points, simpson_rule

__all__ = [
    "CovectorMeasure",
    "covector_norm",
    "vector_norm",
    "total_variation",
    "pair",
    "cumulative",
    "cumulative_batch",
    "cumulative_limit",
    "integrate_by_parts_check",
]


DENSITY_SUBSAMPLES = 4


def covector_norm(p) -> float:
    """Dual norm on covectors: sum of absolute components."""
    return float(np.sum(np.abs(p)))


def vector_norm(u) -> float:
    """Primal norm on vectors: max of absolute components."""
    return float(np.max(np.abs(u))) if np.size(u) else 0.0


def _as_rows(values, n):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1 and n == 1:
        arr = arr[:, None]
    return arr


@dataclass(frozen=True, eq=False)
class CovectorMeasure:
    """Atoms plus a piecewise-linear density on ``[-r, 0]`` with covector weights.

    Parameters
    ----------
    r : float
        Delay length; the measure lives on ``[-r, 0]``.
    n : int
        Dimension of the state space (weights are length-``n`` covectors).
    atom_locations : array (K,)
        Strictly increasing locations in ``[-r, 0]``.
    atom_weights : array (K, n)
    density : array (M + 1, n) or None
        Samples of the density at ``-r + k r / M``, ``k = 0..M``.
    """

    r: float
    n: int
    atom_locations: np.ndarray
    atom_weights: np.ndarray
    density: np.ndarray | None = None

    def __post_init__(self):
        r, n = float(self.r), int(self.n)
        if not r > 0:
            raise ValueError(f"horizon r must be positive, got {r}")
        if n < 1:
            raise ValueError(f"dimension n must be >= 1, got {n}")
        locs = np.array(self.atom_locations, dtype=float).reshape(-1)
        wts = np.array(self.atom_weights, dtype=float).reshape(locs.size, n)
        tol = SNAP * r
        if locs.size:
            if locs.min() < -r - tol or locs.max() > tol:
                raise ValueError(f"atom locations must lie in [-{r}, 0]")
            locs = np.clip(locs, -r, 0.0)
            locs[np.abs(locs + r) <= tol] = -r
            locs[np.abs(locs) <= tol] = 0.0
            if np.any(np.diff(locs) <= 0):
                raise ValueError("atom locations must be strictly increasing")
        dens = None
        if self.density is not None:
            dens = _as_rows(self.density, n).astype(float, copy=True)
            if dens.ndim != 2 or dens.shape[1] != n or dens.shape[0] < 2:
                raise ValueError("density must have shape (M + 1, n) with M >= 1")
            if not np.all(np.isfinite(dens)):
                raise ValueError("density samples must be finite")
            dens.setflags(write=False)
        if not np.all(np.isfinite(wts)):
            raise ValueError("atom weights must be finite")
        locs.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "atom_locations", locs)
        object.__setattr__(self, "atom_weights", wts)
        object.__setattr__(self, "density", dens)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, r, n):
        return cls(r, n, np.empty(0), np.empty((0, n)))

    @classmethod
    def dirac(cls, r, location, weight):
        w = np.atleast_1d(np.asarray(weight, dtype=float))
        return cls(r, w.size, [location], w[None, :])

    @classmethod
    def atoms(cls, r, locations, weights):
        """Atoms at arbitrary (unsorted, possibly repeated) locations.

        Repeated locations (after snapping to the window ends) are merged
        by adding their weights.
        """
        locs = np.asarray(locations, dtype=float).reshape(-1).copy()
        tol = SNAP * float(r)
        locs[np.abs(locs + r) <= tol] = -r
        locs[np.abs(locs) <= tol] = 0.0
        wts = np.asarray(weights, dtype=float)
        wts = wts.reshape(locs.size, wts.size // max(locs.size, 1))
        uniq, inv = np.unique(locs, return_inverse=True)
        merged = np.zeros((uniq.size, wts.shape[1]))
        np.add.at(merged, inv, wts)
        return cls(r, wts.shape[1], uniq, merged)

    @classmethod
    def from_density(cls, r, fn: Callable, M: int, n: int = 1):
        """Sample the covector-valued density ``fn(theta)`` on ``M`` intervals."""
        theta = density_grid(r, M)
        vals = _as_rows(fn(theta), n)
        return cls(r, vals.shape[1], np.empty(0), np.empty((0, vals.shape[1])), vals)

    # -- structure ------------------------------------------------------

    @cached_property
    def grid(self):
        """Density grid on ``[-r, 0]`` (empty when there is no density)."""
        if self.density is None:
            return np.empty(0)
        return density_grid(self.r, self.density.shape[0] - 1)

    @cached_property
    def _running(self):
        """Exact density integral from ``-r`` up to each grid point."""
        d = self.density
        width = np.diff(self.grid)
        return np.concatenate(
            [np.zeros((1, self.n)), np.cumsum(0.5 * width[:, None] * (d[:-1] + d[1:]), axis=0)]
        )

    @cached_property
    def _layout(self):
        shape = None if self.density is None else self.density.shape
        return (self.r, self.n, self.atom_locations.tobytes(), shape)

    @cached_property
    def _grid_list(self):
        return self.grid.tolist()

    def density_at(self, theta):
        """Linearly interpolated density at ``theta``; shape ``(P, n)``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.density is None:
            return np.zeros((theta.size, self.n))
        g = self.grid
        return np.column_stack(
            [np.interp(theta, g, self.density[:, k]) for k in range(self.n)]
        )

    def __add__(self, other):
        if not isinstance(other, CovectorMeasure):
            return NotImplemented
        if other.n != self.n or other.r != self.r:
            raise ValueError("measures must share r and n")
        locs = np.concatenate([self.atom_locations, other.atom_locations])
        wts = np.concatenate([self.atom_weights, other.atom_weights])
        if locs.size:
            merged = CovectorMeasure.atoms(self.r, locs, wts)
            locs, wts = merged.atom_locations, merged.atom_weights
        return CovectorMeasure(self.r, self.n, locs, wts, _add_densities(self, other))

    def __mul__(self, a):
        a = float(a)
        dens = None if self.density is None else a * self.density
        return CovectorMeasure(self.r, self.n, self.atom_locations, a * self.atom_weights, dens)

    __rmul__ = __mul__

    # -- discretization -------------------------------------------------

    def discretize(self, breakpoints=()):
        """Points and covector weights reproducing the pairing.

        Returns ``(theta, weights)`` with ``pair(m, phi) == sum_p
        weights[p] . phi(theta[p])``. Atoms contribute themselves; the
        density contributes composite Simpson (``DENSITY_SUBSAMPLES`` per
        piece) on every grid interval, further split at ``breakpoints``
        (where the test function may have kinks). The rule is exact whenever
        ``phi`` is quadratic on a piece, because the density is linear on it.
        """
        pts = [self.atom_locations]
        wts = [self.atom_weights]
        if self.density is not None:
            knots = merge_points(
                np.concatenate([self.grid, np.asarray(breakpoints, dtype=float).ravel()]),
                -self.r,
                0.0,
            )
            nodes, w = simpson_rule(knots, DENSITY_SUBSAMPLES)
            pts.append(nodes)
            wts.append(w[:, None] * self.density_at(nodes))
        return np.concatenate(pts), np.concatenate(wts, axis=0)


def density_grid(r, M):
    grid = -r + r * np.arange(M + 1) / M
    grid[-1] = 0.0
    return grid


def _add_densities(a, b):
    if a.density is None:
        return b.density
    if b.density is None:
        return a.density
    if a.density.shape != b.density.shape:
        raise ValueError("densities must share the same grid to be added")
    return a.density + b.density


def _piece_abs_integral(lo, hi, width):
    """Exact integral of ``|linear|`` between samples ``lo`` and ``hi``."""
    same = lo * hi >= 0
    out = np.where(same, 0.5 * width * (np.abs(lo) + np.abs(hi)), 0.0)
    denom = np.abs(lo) + np.abs(hi)
    cross = ~same & (denom > 0)
    out[cross] = 0.5 * width[cross] * (lo[cross] ** 2 + hi[cross] ** 2) / denom[cross]
    return out


def total_variation(m: CovectorMeasure) -> float:
    """Total variation of the cumulative function of ``m``.

    Atom weights enter through the sum-of-absolute-components norm and the
    density through the exact integral of its piecewise-linear absolute
    value.
    """
    tv = float(np.sum(np.abs(m.atom_weights)))
    if m.density is not None:
        g = m.grid
        width = np.diff(g)[:, None] * np.ones((1, m.n))
        tv += float(np.sum(_piece_abs_integral(m.density[:-1], m.density[1:], width)))
    return tv


def coordinate_variations(m: CovectorMeasure) -> np.ndarray:
    """Total variation of each scalar coordinate measure; shape ``(n,)``."""
    tv = np.sum(np.abs(m.atom_weights), axis=0)
    if m.density is not None:
        width = np.diff(m.grid)[:, None] * np.ones((1, m.n))
        tv = tv + np.sum(_piece_abs_integral(m.density[:-1], m.density[1:], width), axis=0)
    return tv


def _eval_rows(phi, theta, n):
    vals = np.asarray(phi(theta), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None] if n == 1 else np.broadcast_to(vals, (theta.size, n))
    return vals


def pair(m: CovectorMeasure, phi, breakpoints=None) -> float:
    """Stieltjes pairing ``int d g(theta) . phi(theta)`` over ``[-r, 0]``.

    ``phi`` maps an array of locations to an ``(P, n)`` array. If
    ``breakpoints`` is not given, ``phi.breakpoints`` is used when present.
    """
    if breakpoints is None:
        breakpoints = getattr(phi, "breakpoints", ())
    theta, w = m.discretize(breakpoints)
    if theta.size == 0:
        return 0.0
    return float(np.sum(w * _eval_rows(phi, theta, m.n)))


def cumulative(m: CovectorMeasure, theta):
    """NBV cumulative function ``g(theta)`` of ``m``.

    Scalar ``theta`` returns a covector of shape ``(n,)``; array input
    returns ``(P, n)``. ``g(-r) = 0``; on ``(-r, 0)`` only atoms strictly
    left of ``theta`` count; ``g(0)`` is the total mass.
    """
    if np.ndim(theta) == 0:
        th = _window_scalar(m, theta)
        if th == -m.r:
            return np.zeros(m.n)
        return _cumulative_scalar(m, th, th == 0.0)
    th = _window(m, theta)
    out = _cumulative(m, th, inclusive=th == 0.0)
    out[th == -m.r] = 0.0
    return out


def cumulative_limit(m: CovectorMeasure, theta, side):
    """One-sided limit ``g(theta-)`` (``side="left"``) or ``g(theta+)`` (``"right"``).

    The left limit counts atoms strictly below ``theta``, the right limit
    atoms at or below it. These are what a quadrature piece sees at its
    ends when ``theta`` sits on an atom.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if np.ndim(theta) == 0:
        return _cumulative_scalar(m, _window_scalar(m, theta), side == "right")
    th = _window(m, theta)
    return _cumulative(m, th, inclusive=np.full(th.shape, side == "right"))


def _window(m, theta):
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    tol = SNAP * m.r
    if np.any(th < -m.r - tol) or np.any(th > tol):
        raise ValueError(f"cumulative evaluated outside [-{m.r}, 0]: {th.min()}, {th.max()}")
    th = np.clip(th, -m.r, 0.0)
    th[np.abs(th + m.r) <= tol] = -m.r
    th[np.abs(th) <= tol] = 0.0
    return th


def _window_scalar(m, theta):
    th = float(theta)
    tol = SNAP * m.r
    if th < -m.r - tol or th > tol:
        raise ValueError(f"cumulative evaluated outside [-{m.r}, 0]: {th}")
    if th <= -m.r + tol:
        return -m.r
    if th >= -tol:
        return 0.0
    return th


def _cumulative_scalar(m, th, inclusive):
    out = np.zeros(m.n)
    tol = SNAP * m.r
    for loc, w in zip(m.atom_locations.tolist(), m.atom_weights):
        if abs(loc - th) <= tol:
            if inclusive:
                out += w
        elif loc < th:
            out += w
        else:
            break
    if m.density is not None:
        g = m._grid_list
        k = min(max(bisect_right(g, th) - 1, 0), len(g) - 2)
        d = m.density
        dx = th - g[k]
        lam = dx / (g[k + 1] - g[k])
        d_here = d[k] + lam * (d[k + 1] - d[k])
        out += m._running[k] + 0.5 * dx * (d[k] + d_here)
    return out


def _cumulative(m, th, inclusive):
    out = np.zeros((th.size, m.n))
    if m.atom_locations.size:
        locs = m.atom_locations[None, :]
        # an atom within SNAP * r of theta sits at theta
        at = np.abs(locs - th[:, None]) <= SNAP * m.r
        below = ((locs < th[:, None]) & ~at) | (at & inclusive[:, None])
        out += below.astype(float) @ m.atom_weights
    if m.density is not None:
        out += _density_cumulative(m, th)
    return out


def _density_cumulative(m, th):
    g = m.grid
    d = m.density
    width = np.diff(g)
    full = m._running
    k = np.clip(np.searchsorted(g, th, side="right") - 1, 0, g.size - 2)
    dx = th - g[k]
    lam = dx / width[k]
    d_here = d[k] + lam[:, None] * (d[k + 1] - d[k])
    return full[k] + 0.5 * dx[:, None] * (d[k] + d_here)


def cumulative_batch(measures, theta, side):
    """Row ``i`` is a cumulative value of ``measures[i]`` at ``theta[i]``.

    ``side[i]`` selects ``cumulative_limit`` (``-1`` left, ``+1`` right) or
    ``cumulative`` (``0``). Families sharing atom locations and density
    grid are evaluated in one vectorized pass.
    """
    theta = np.asarray(theta, dtype=float)
    side = np.asarray(side)
    m0 = measures[0]
    key = m0._layout
    same = all(m._layout == key for m in measures)
    if not same:
        out = np.empty((theta.size, m0.n))
        for i, (m, th, sd) in enumerate(zip(measures, theta, side)):
            if sd == 0:
                out[i] = cumulative(m, th)
            else:
                out[i] = cumulative_limit(m, th, "left" if sd < 0 else "right")
        return out
    th = _window(m0, theta)
    normal = side == 0
    inclusive = np.where(normal, th == 0.0, side > 0)
    out = np.zeros((th.size, m0.n))
    if m0.atom_locations.size:
        locs = m0.atom_locations[None, :]
        at = np.abs(locs - th[:, None]) <= SNAP * m0.r
        below = ((locs < th[:, None]) & ~at) | (at & inclusive[:, None])
        W = np.stack([m.atom_weights for m in measures])
        out += np.einsum("pk,pkn->pn", below.astype(float), W)
    if m0.density is not None:
        g = m0.grid
        D = np.stack([m.density for m in measures])
        R = np.stack([m._running for m in measures])
        k = np.clip(np.searchsorted(g, th, side="right") - 1, 0, g.size - 2)
        dx = th - g[k]
        lam = dx / (g[k + 1] - g[k])
        rows = np.arange(th.size)
        dk, dk1 = D[rows, k], D[rows, k + 1]
        out += R[rows, k] + 0.5 * dx[:, None] * (2 * dk + lam[:, None] * (dk1 - dk))
    out[normal & (th == -m0.r)] = 0.0
    return out


def integrate_by_parts_check(m: CovectorMeasure, h, dh, t: float, breakpoints=()):
    """Both sides of the Stieltjes integration-by-parts identity.

    ``lhs = pair(m, theta -> h(t + theta))`` and
    ``rhs = g(0) . h(t) - int_{t-r}^{t} g(xi - t) . h'(xi) dxi``.

    ``h`` and ``dh`` map arrays of times to ``(P, n)`` arrays;
    ``breakpoints`` are times in ``[t - r, t]`` where ``h'`` may kink.
    The atom part of the tail integral is computed piecewise exactly (``g``
    is constant between atoms); the density part uses Simpson with knots
    at the shifted density grid, atoms and breakpoints.
    """
    r, n = m.r, m.n
    bp_theta = np.asarray(breakpoints, dtype=float).ravel() - t

    def shifted(theta):
        return _eval_rows(h, t + np.asarray(theta), n)

    lhs = pair(m, shifted, breakpoints=bp_theta)

    knots = merge_points(np.concatenate([m.atom_locations, m.grid, bp_theta]), -r, 0.0)
    h_knots = shifted(knots)
    g_end = cumulative(m, 0.0)
    rhs = float(g_end @ h_knots[-1])
    if m.atom_locations.size:
        atoms_only = CovectorMeasure(r, n, m.atom_locations, m.atom_weights)
        # g is constant on each open piece; evaluate at midpoints
        mids = 0.5 * (knots[:-1] + knots[1:])
        g_mid = cumulative(atoms_only, mids)
        rhs -= float(np.sum(g_mid * (h_knots[1:] - h_knots[:-1])))
    if m.density is not None:
        dens_only = CovectorMeasure(r, n, np.empty(0), np.empty((0, n)), m.density)
        nodes, w = simpson_rule(knots, 4)
        vals = cumulative(dens_only, nodes) * _eval_rows(dh, t + nodes, n)
        rhs -= float(np.sum(w[:, None] * vals))
    return lhs, rhs
