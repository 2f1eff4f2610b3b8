"""Direct minimization of the discretized criterion over the admissible set.

Iterates stay admissible by construction: only the free Hermite dofs move
(interior node values and all node derivatives), so the history and both
end values are never touched.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .criterion import LagrangianAlong, QuadratureRule, evaluate_J, free_gradient
from .euler_lagrange import el_data, weak_stationarity
from .trajectory import Trajectory, affine_initial_guess, commensurate_steps, dofs_to_perturbation

__all__ = [
    "SolveConfig",
    "SolveResult",
    "minimize",
    "convergence_study",
    "hermite_stiffness",
    "LevelRow",
]

log = logging.getLogger("delayvar.solver")


@dataclass(frozen=True)
class SolveConfig:
    """Descent settings.

    ``metric`` chooses the inner product that turns the gradient dofs
    into a step: ``"h1"`` solves with the Hermite stiffness matrix of the
    free dofs, ``"l2"`` uses the raw dof vector.
    """

    N: int = 64
    max_iters: int = 200
    grad_tol: float = 1e-8
    armijo: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    seed: int = 0
    subsamples: int = 4
    metric: str = "h1"
    min_step: float = 1e-14

    def __post_init__(self):
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError(f"backtrack factor must lie in (0, 1), got {self.backtrack}")
        if not self.grad_tol > 0.0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if not 0.0 < self.armijo < 1.0:
            raise ValueError(f"armijo factor must lie in (0, 1), got {self.armijo}")
        if not self.initial_step > 0.0:
            raise ValueError(f"initial step must be positive, got {self.initial_step}")
        if self.N < 2 or self.max_iters < 0:
            raise ValueError("need N >= 2 and max_iters >= 0")
        if self.metric not in ("h1", "l2"):
            raise ValueError(f"metric must be 'h1' or 'l2', got {self.metric!r}")

    @property
    def quadrature(self):
        return QuadratureRule(self.subsamples)


@dataclass
class SolveResult:
    trajectory: Trajectory
    J_history: list
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""
    step_history: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def J(self):
        return self.J_history[-1]


def hermite_stiffness(N, T):
    """``int h' g'`` on one coordinate's free dofs (layout of ``dofs_to_perturbation``)."""
    h = T / N
    ke = np.array(
        [
            [36.0, 3 * h, -36.0, 3 * h],
            [3 * h, 4 * h * h, -3 * h, -h * h],
            [-36.0, -3 * h, 36.0, -3 * h],
            [3 * h, -h * h, -3 * h, 4 * h * h],
        ]
    ) / (30.0 * h)
    full = np.zeros((2 * (N + 1), 2 * (N + 1)))
    for j in range(N):
        sl = slice(2 * j, 2 * j + 4)
        full[sl, sl] += ke
    # full is interleaved (y_0, y'_0, y_1, ...); reorder to the free layout
    order = [2 * j for j in range(1, N)] + [2 * j + 1 for j in range(N + 1)]
    return full[np.ix_(order, order)]


class _Metric:
    def __init__(self, kind, N, T, n):
        self.kind = kind
        self.n = n
        if kind == "h1":
            self.factor = cho_factor(hermite_stiffness(N, T))

    def direction(self, g):
        if self.kind == "l2":
            return g
        blocks = g.reshape(self.n, -1)
        return np.concatenate([cho_solve(self.factor, b) for b in blocks])


def minimize(prob, psi, zeta, cfg: SolveConfig = SolveConfig()) -> SolveResult:
    """Gradient descent with Armijo backtracking from the affine guess."""
    if psi.n != prob.n:
        raise ValueError(f"history has n={psi.n}, problem has n={prob.n}")
    if abs(psi.r - prob.r) > 0:
        raise ValueError(f"history horizon r={psi.r} differs from problem r={prob.r}")
    zeta = np.broadcast_to(np.asarray(zeta, dtype=float), (prob.n,))
    commensurate_steps(prob.r, prob.T, cfg.N)

    start = time.perf_counter()
    q = cfg.quadrature
    metric = _Metric(cfg.metric, cfg.N, prob.T, prob.n)
    x = affine_initial_guess(psi, zeta, prob.T, cfg.N)
    J = evaluate_J(prob, x, q)
    history = [J]
    steps = []
    alpha0 = cfg.initial_step
    converged = False
    message = "iteration limit reached"
    gnorm = np.inf
    it = 0
    while True:
        g = free_gradient(prob, x, q, LagrangianAlong(prob, x))
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        log.info("iter %d J=%.17g grad=%.3e step=%s", it, J, gnorm, steps[-1] if steps else "-")
        if gnorm <= cfg.grad_tol:
            converged = True
            message = "gradient tolerance reached"
            break
        if it >= cfg.max_iters:
            break
        d = metric.direction(g)
        slope = float(g @ d)
        h = dofs_to_perturbation(-d, prob.r, prob.T, cfg.N, prob.n)
        alpha = alpha0
        accepted = None
        while alpha >= cfg.min_step:
            trial = x.perturbed(h, alpha)
            J_trial = evaluate_J(prob, trial, q)
            if J_trial <= J - cfg.armijo * alpha * slope:
                accepted = (trial, J_trial)
                break
            if J_trial <= J and _rounding_limited(J, alpha * slope):
                # decrease is below rounding in J; accept when the gradient shrinks
                g_trial = free_gradient(prob, trial, q)
                if np.max(np.abs(g_trial)) < gnorm:
                    accepted = (trial, J_trial)
                    break
            alpha *= cfg.backtrack
        if accepted is None:
            message = f"line search failed: no descent down to step {cfg.min_step:g}"
            log.warning("%s (grad=%.3e)", message, gnorm)
            break
        x, J = accepted
        history.append(J)
        steps.append(alpha)
        # start the next search a little beyond the last accepted step
        alpha0 = min(cfg.initial_step, alpha / cfg.backtrack)
        it += 1
    return SolveResult(x, history, gnorm, it, converged, message, steps, time.perf_counter() - start)


def _rounding_limited(J, predicted):
    return predicted <= 64 * np.finfo(float).eps * (1.0 + abs(J))


@dataclass
class LevelRow:
    N: int
    J: float
    grad_norm: float
    residual_osc: float
    weak_stationarity: float
    iterations: int
    converged: bool


def convergence_study(prob, psi, zeta, cfg: SolveConfig, levels):
    """Solve on each grid level; returns ``(rows, monotone)``.

    ``monotone`` is true when ``residual_osc`` strictly decreases from one
    level to the next. Non-converged levels are kept in the table.
    """
    levels = [int(N) for N in levels]
    if not levels:
        raise ValueError("need at least one grid level")
    for N in levels:
        commensurate_steps(prob.r, prob.T, N)
    rows = []
    for N in levels:
        c = SolveConfig(**{**cfg.__dict__, "N": N})
        res = minimize(prob, psi, zeta, c)
        along = LagrangianAlong(prob, res.trajectory)
        rep = el_data(prob, res.trajectory, q=c.quadrature, along=along)
        ws = weak_stationarity(prob, res.trajectory, q=c.quadrature, along=along)
        rows.append(LevelRow(N, res.J, res.grad_norm, rep.residual_osc, ws, res.iterations, res.converged))
    osc = [r.residual_osc for r in rows]
    monotone = all(b < a for a, b in zip(osc[:-1], osc[1:]))
    return rows, monotone
