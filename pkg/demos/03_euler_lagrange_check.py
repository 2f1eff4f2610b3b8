# Checking a solution through the integral form of the delay Euler-Lagrange equation
#
# Along a trajectory we compute
#   p(t) = D2F[t]([-r, 0]),     A(t) = int_t^{min(t+r,T)} D2F[s]([-r, t-s]) ds,
#   q(t) = D3F(t) - A(t),
# and the residual q(t) - int_0^t p - c, where c is the best constant.
# A minimizer makes it vanish, up to discretization error.

import numpy as np

from delayvar import (
    HistoryFunction,
    SolveConfig,
    affine_initial_guess,
    convergence_study,
    distributed_delay_quadratic,
    el_data,
    minimize,
    weak_stationarity,
)
from delayvar.report import write_plot_svg

problem = distributed_delay_quadratic(n=1, r=0.5, T=1.0, cv=1.0, ca=0.5, cw=2.0, k0=1.0, k1=-1.0, M=16)
psi = HistoryFunction.sinusoid(0.5, 1.0, frequency=2.0)
zeta = 1.5

# The straight-line starting guess is far from stationary
guess = affine_initial_guess(psi, zeta, 1.0, 32)
print("guess:   residual_osc =", el_data(problem, guess).residual_osc,
      " weak =", weak_stationarity(problem, guess))

# Solve on a sequence of grids: the residual shrinks with the step
rows, monotone = convergence_study(problem, psi, zeta, SolveConfig(), (8, 16, 32, 64))
for row in rows:
    print(f"N={row.N:3d}  J={row.J:.12f}  residual_osc={row.residual_osc:.3e}  weak={row.weak_stationarity:.1e}")
print("residual decreases monotonically:", monotone)

# Save a picture of the last solve
res = minimize(problem, psi, zeta, SolveConfig(N=64))
rep = el_data(problem, res.trajectory)
t = np.linspace(-0.5, 1.0, 301)
write_plot_svg("delayed_residual.svg", t, res.trajectory(t), rep.times, rep.residual)
print("wrote delayed_residual.svg")
