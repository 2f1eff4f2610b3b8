"""Trajectories: a history on ``[-r, 0]`` glued to a C1 cubic Hermite spline.

The spline lives on a uniform grid ``t_j = j T / N`` whose step divides
the delay exactly (``r = m h`` in floating point), so shifting a node by
``-r`` lands on another node.
"""

from __future__ import annotations

import csv
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "GridError",
    "HistoryFunction",
    "HermiteCurve",
    "Trajectory",
    "Perturbation",
    "Segment",
    "commensurate_steps",
    "segment",
    "derivative",
    "norm_X",
    "affine_initial_guess",
    "basis_perturbations",
    "dofs_to_perturbation",
    "perturbation_to_dofs",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

SUBSAMPLES_NORM = 8


class GridError(ValueError):
    """The node grid does not divide the delay exactly."""


def commensurate_steps(r, T, N) -> int:
    """Return ``m`` with ``r == m * (T / N)`` exactly, or raise GridError."""
    if N < 1:
        raise GridError(f"N must be >= 1 (got N={N})")
    h = T / N
    m = int(round(r / h))
    if m < 1 or m * h != r:
        raise GridError(
            f"grid is not delay-commensurate: r={r!r}, T={T!r}, N={N} gives "
            f"step h=T/N={h!r} and r/h={r / h!r}; r must equal m*h exactly in "
            "binary floating point for an integer m >= 1 (no snapping is applied "
            "to the grid; only atom locations within 1e-12*r of a node are "
            "snapped). Use dyadic r and T, e.g. r=0.25 with N a multiple of 4."
        )
    return m


def _rows(values, n):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    return arr


class HistoryFunction:
    """Continuous initial function ``psi`` on ``[-r, 0]``.

    Either a vectorized closed-form rule ``fn(theta) -> (P, n)`` or samples
    interpolated by a cubic spline.
    """

    def __init__(self, r, n, fn: Callable, label="custom", breakpoints=()):
        self.r = float(r)
        self.n = int(n)
        self._fn = fn
        self.label = label
        self.breakpoints = np.asarray(breakpoints, dtype=float)

    def __call__(self, theta):
        scalar = np.ndim(theta) == 0
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.asarray(self._fn(th), dtype=float).reshape(th.size, self.n)
        return out[0] if scalar else out

    @classmethod
    def constant(cls, r, value):
        c = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(r, c.size, lambda th: np.broadcast_to(c, (th.size, c.size)), "constant")

    @classmethod
    def linear(cls, r, value, slope):
        """``psi(theta) = value + slope * theta``."""
        a = np.atleast_1d(np.asarray(value, dtype=float))
        b = np.broadcast_to(np.asarray(slope, dtype=float), a.shape)
        return cls(r, a.size, lambda th: a[None, :] + th[:, None] * b[None, :], "linear")

    @classmethod
    def sinusoid(cls, r, amplitude, frequency=1.0, phase=0.0, offset=0.0):
        """``psi(theta) = offset + amplitude * sin(frequency * theta + phase)``."""
        amp = np.atleast_1d(np.asarray(amplitude, dtype=float))
        shape = amp.shape
        freq = np.broadcast_to(np.asarray(frequency, dtype=float), shape)
        ph = np.broadcast_to(np.asarray(phase, dtype=float), shape)
        off = np.broadcast_to(np.asarray(offset, dtype=float), shape)

        def fn(th):
            return off + amp * np.sin(th[:, None] * freq + ph)

        return cls(r, amp.size, fn, "sinusoid")

    @classmethod
    def from_samples(cls, theta, values):
        theta = np.asarray(theta, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if theta[-1] != 0.0:
            raise ValueError("history samples must end at theta = 0")
        spline = CubicSpline(theta, vals, axis=0)
        return cls(-theta[0], vals.shape[1], lambda th: spline(th), "samples", theta)


class HermiteCurve:
    """Piecewise cubic Hermite interpolant on a uniform grid of ``[0, T]``."""

    def __init__(self, T, values, derivs):
        self.T = float(T)
        self.values = np.array(values, dtype=float)
        self.derivs = np.array(derivs, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
            self.derivs = self.derivs.reshape(self.values.shape)
        if self.values.shape != self.derivs.shape or self.values.shape[0] < 2:
            raise ValueError("values and derivs must both have shape (N + 1, n), N >= 1")
        self.values.setflags(write=False)
        self.derivs.setflags(write=False)
        self.N = self.values.shape[0] - 1
        self.n = self.values.shape[1]
        self.h = self.T / self.N
        self.nodes = self.h * np.arange(self.N + 1)
        self.nodes[-1] = self.T
        self._node_list = self.nodes.tolist()

    def _locate(self, t):
        j = np.clip(np.floor(t / self.h).astype(int), 0, self.N - 1)
        # dividing by the local width makes u exactly 0 or 1 at nodes
        u = (t - self.nodes[j]) / (self.nodes[j + 1] - self.nodes[j])
        return j, u

    def shape_functions(self, t, order=0):
        """Element index and the four Hermite shape weights at ``t``.

        Returns ``(j, W)`` with ``W`` of shape ``(P, 4)`` acting on
        ``(y_j, y'_j, y_{j+1}, y'_{j+1})``; ``order=1`` gives derivative
        weights.
        """
        j, u = self._locate(np.asarray(t, dtype=float))
        h = self.h
        if order == 0:
            u2, u3 = u * u, u * u * u
            W = np.stack(
                [2 * u3 - 3 * u2 + 1, h * (u3 - 2 * u2 + u), -2 * u3 + 3 * u2, h * (u3 - u2)],
                axis=-1,
            )
        else:
            u2 = u * u
            W = np.stack(
                [(6 * u2 - 6 * u) / h, 3 * u2 - 4 * u + 1, (-6 * u2 + 6 * u) / h, 3 * u2 - 2 * u],
                axis=-1,
            )
        return j, W

    def _combine(self, t, order):
        j, W = self.shape_functions(t, order)
        y, d = self.values, self.derivs
        return (
            W[:, 0, None] * y[j]
            + W[:, 1, None] * d[j]
            + W[:, 2, None] * y[j + 1]
            + W[:, 3, None] * d[j + 1]
        )

    def _scalar(self, t, order):
        j = min(max(int(t // self.h), 0), self.N - 1)
        h = self.h
        a, b = self._node_list[j], self._node_list[j + 1]
        u = (t - a) / (b - a)
        u2 = u * u
        if order == 0:
            u3 = u2 * u
            w0, w1, w2, w3 = 2 * u3 - 3 * u2 + 1, h * (u3 - 2 * u2 + u), -2 * u3 + 3 * u2, h * (u3 - u2)
        else:
            w0, w1, w2, w3 = (6 * u2 - 6 * u) / h, 3 * u2 - 4 * u + 1, (6 * u - 6 * u2) / h, 3 * u2 - 2 * u
        y, d = self.values, self.derivs
        return w0 * y[j] + w1 * d[j] + w2 * y[j + 1] + w3 * d[j + 1]

    def eval(self, t):
        return self._combine(np.atleast_1d(np.asarray(t, dtype=float)), 0)

    def deriv(self, t):
        return self._combine(np.atleast_1d(np.asarray(t, dtype=float)), 1)


class Segment:
    """The delay segment ``theta -> x(t + theta)`` on ``[-r, 0]``.

    ``breakpoints`` lists the ``theta`` values where the segment may fail
    to be smooth (shifted spline nodes and the history junction).
    """

    def __init__(self, owner, t):
        self.owner = owner
        self.t = float(t)

    @cached_property
    def breakpoints(self):
        r = self.owner.r
        nodes = self.owner.curve.nodes - self.t
        bps = [nodes[(nodes > -r) & (nodes < 0)]]
        hist_bp = getattr(self.owner, "history_breakpoints", np.empty(0)) - self.t
        bps.append(hist_bp[(hist_bp > -r) & (hist_bp < 0)])
        return np.concatenate(bps)

    def __call__(self, theta):
        if np.ndim(theta) == 0:
            return self.owner(self.t + float(theta))
        return self.owner(self.t + np.asarray(theta, dtype=float))


class _Glued:
    """Shared evaluation for objects made of a history and a Hermite curve."""

    r: float
    curve: HermiteCurve

    @property
    def T(self):
        return self.curve.T

    @property
    def N(self):
        return self.curve.N

    @property
    def n(self):
        return self.curve.n

    @property
    def nodes(self):
        return self.curve.nodes

    @property
    def values(self):
        return self.curve.values

    @property
    def derivs(self):
        return self.curve.derivs

    def _history(self, s):
        raise NotImplementedError

    def __call__(self, t):
        """Value at times ``t`` in ``[-r, T]``; scalar in, ``(n,)`` out."""
        scalar = np.ndim(t) == 0
        if scalar and 0.0 <= t <= self.curve.T:
            return self.curve._scalar(float(t), 0)
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        tol = 1e-12 * max(self.T, 1.0)
        if np.any(tt < -self.r - tol) or np.any(tt > self.T + tol):
            raise ValueError(f"evaluation outside [-{self.r}, {self.T}]")
        out = np.empty((tt.size, self.n))
        past = tt < 0
        if np.any(past):
            out[past] = self._history(np.maximum(tt[past], -self.r))
        if np.any(~past):
            out[~past] = self.curve.eval(np.minimum(tt[~past], self.T))
        return out[0] if scalar else out

    def derivative(self, t):
        """Exact derivative of the Hermite interpolant on ``[0, T]``."""
        scalar = np.ndim(t) == 0
        if scalar and 0.0 <= t <= self.curve.T:
            return self.curve._scalar(float(t), 1)
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        tol = 1e-12 * max(self.T, 1.0)
        if np.any(tt < -tol) or np.any(tt > self.T + tol):
            raise ValueError(f"derivative requested outside [0, {self.T}]")
        out = self.curve.deriv(np.clip(tt, 0.0, self.T))
        return out[0] if scalar else out

    def segment(self, t):
        tol = 1e-12 * max(self.T, 1.0)
        if not (-tol <= t <= self.T + tol):
            raise ValueError(f"segment time {t} outside [0, {self.T}]")
        return Segment(self, min(max(t, 0.0), self.T))


class Trajectory(_Glued):
    """An element of the trajectory space: history ``psi`` plus spline on ``[0, T]``."""

    def __init__(self, history: HistoryFunction, T, values, derivs):
        self.history = history
        self.r = history.r
        self.curve = HermiteCurve(T, values, derivs)
        if self.curve.n != history.n:
            raise ValueError(f"dimension mismatch: history n={history.n}, values n={self.curve.n}")
        if self.r >= self.curve.T:
            raise ValueError(f"need r < T, got r={self.r}, T={self.curve.T}")
        self.m = commensurate_steps(self.r, self.curve.T, self.curve.N)
        if not np.array_equal(self.curve.values[0], history(0.0)):
            raise ValueError("junction continuity violated: x(0) must equal psi(0) exactly")
        self.history_breakpoints = history.breakpoints

    def _history(self, s):
        return self.history(s)

    def endpoint(self):
        return self.curve.values[-1].copy()

    def perturbed(self, h: "Perturbation", alpha=1.0):
        """The trajectory ``x + alpha h`` (admissibility is preserved)."""
        if h.N != self.N or h.n != self.n:
            raise ValueError("perturbation grid does not match the trajectory")
        return Trajectory(
            self.history,
            self.T,
            self.values + alpha * h.values,
            self.derivs + alpha * h.derivs,
        )

    def with_dofs(self, values, derivs):
        return Trajectory(self.history, self.T, values, derivs)

    def __mul__(self, a):
        return Trajectory(
            HistoryFunction(self.r, self.n, lambda th: a * self.history(th)),
            self.T,
            a * self.values,
            a * self.derivs,
        )

    __rmul__ = __mul__


class Perturbation(_Glued):
    """Direction in the tangent space: zero on ``[-r, 0]`` and at ``T``."""

    def __init__(self, r, T, values, derivs):
        self.r = float(r)
        self.curve = HermiteCurve(T, values, derivs)
        if np.any(self.curve.values[0] != 0) or np.any(self.curve.values[-1] != 0):
            raise ValueError("perturbations must vanish at t = 0 and t = T")
        self.history_breakpoints = np.empty(0)

    def _history(self, s):
        return np.zeros((np.size(s), self.n))

    def __add__(self, other):
        return Perturbation(self.r, self.T, self.values + other.values, self.derivs + other.derivs)

    def __mul__(self, a):
        return Perturbation(self.r, self.T, a * self.values, a * self.derivs)

    __rmul__ = __mul__


def segment(x, t):
    """Delay segment ``x_t`` of a trajectory or perturbation at ``t`` in ``[0, T]``."""
    return x.segment(t)


def derivative(x, t):
    return x.derivative(t)


def _dense_times(a, b, intervals):
    k = intervals * SUBSAMPLES_NORM
    return np.linspace(a, b, k + 1)


def norm_X(x) -> float:
    """``sup |x|`` over ``[-r, T]`` plus ``sup |x'|`` over ``[0, T]``.

    Suprema are taken over 8 samples per node interval (and the same density
    on the history), so this is a lower bound up to interpolation error.
    """
    m = max(int(round(x.r / (x.T / x.N))), 1)
    past = _dense_times(-x.r, 0.0, m)
    now = _dense_times(0.0, x.T, x.N)
    sup_x = max(np.abs(x(past)).max(), np.abs(x(now)).max())
    sup_dx = np.abs(x.derivative(now)).max()
    return float(sup_x + sup_dx)


def affine_initial_guess(psi: HistoryFunction, zeta, T, N) -> Trajectory:
    """History ``psi`` followed by the straight line from ``psi(0)`` to ``zeta``."""
    commensurate_steps(psi.r, T, N)
    a = psi(0.0)
    zeta = _rows(zeta, psi.n)
    t = T * np.arange(N + 1) / N
    values = a[None, :] + (t / T)[:, None] * (zeta - a)[None, :]
    values[0] = a
    values[-1] = zeta
    derivs = np.broadcast_to((zeta - a) / T, values.shape)
    return Trajectory(psi, T, values, derivs)


def _free_layout(N):
    return (N - 1) + (N + 1)


def dofs_to_perturbation(vec, r, T, N, n) -> Perturbation:
    """Perturbation from free dofs.

    Layout per coordinate ``k`` (coordinate-major): values at nodes
    ``1..N-1`` then derivatives at nodes ``0..N``.
    """
    vec = np.asarray(vec, dtype=float).reshape(n, _free_layout(N))
    values = np.zeros((N + 1, n))
    derivs = np.zeros((N + 1, n))
    values[1:N] = vec[:, : N - 1].T
    derivs[:] = vec[:, N - 1 :].T
    return Perturbation(r, T, values, derivs)


def perturbation_to_dofs(h) -> np.ndarray:
    return coefficient_dofs(h.values, h.derivs)


def coefficient_dofs(values, derivs):
    """Free-dof vector from node values/derivatives (end values dropped)."""
    N = values.shape[0] - 1
    return np.concatenate([np.concatenate([values[1:N, k], derivs[:, k]]) for k in range(values.shape[1])])


def basis_perturbations(N, n, r=None, T=1.0):
    """Hermite nodal basis of the free degrees of freedom.

    Returns ``2 n N`` perturbations: value dofs at interior nodes and
    derivative dofs at every node, for each coordinate.
    """
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    r = T / N if r is None else r
    size = n * _free_layout(N)
    eye = np.eye(size)
    return [dofs_to_perturbation(eye[i], r, T, N, n) for i in range(size)]


def _fmt(v):
    return format(float(v), ".17g")


def write_trajectory_csv(x: Trajectory, path):
    """CSV over ``[-r, T]``: ``t, x1..xn, dx1..dxn`` (history rows leave dx empty)."""
    n = x.n
    h = x.T / x.N
    header = ["t"] + [f"x{k + 1}" for k in range(n)] + [f"dx{k + 1}" for k in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(x.m):
            t = -x.r + i * h
            w.writerow([_fmt(t)] + [_fmt(v) for v in x(t)] + [""] * n)
        for j in range(x.N + 1):
            w.writerow(
                [_fmt(x.nodes[j])] + [_fmt(v) for v in x.values[j]] + [_fmt(v) for v in x.derivs[j]]
            )


def read_trajectory_csv(path, history: HistoryFunction, T):
    """Load a trajectory written by :func:`write_trajectory_csv`.

    The history comes from ``history``; file rows for ``t < 0`` are checked
    against it (to 1e-9) but not used.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header = rows[0]
    n = (len(header) - 1) // 2
    if n != history.n or header[0] != "t" or len(header) != 2 * n + 1:
        raise ValueError(f"{path}: header {header} does not match dimension n={history.n}")
    times, vals, ders = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
        t = float(row[0])
        xv = np.array([float(v) for v in row[1 : n + 1]])
        if t < 0:
            if np.max(np.abs(xv - history(t))) > 1e-9:
                raise ValueError(f"{path}:{lineno}: history row disagrees with configured psi")
            continue
        times.append(t)
        vals.append(xv)
        ders.append([float(v) for v in row[n + 1 :]])
    if len(times) < 2:
        raise ValueError(f"{path}: need at least two nodes on [0, T]")
    N = len(times) - 1
    expected = T * np.arange(N + 1) / N
    expected[-1] = T
    if not np.allclose(times, expected, rtol=0, atol=1e-12 * T):
        raise ValueError(f"{path}: node times are not the uniform grid on [0, {T}]")
    return Trajectory(history, T, np.array(vals), np.array(ders))
