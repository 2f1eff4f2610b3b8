# Minimizing a criterion with a point delay
#
#     J(x) = int_0^1  x'(t)^2 / 2 + x(t - 1/2)^2 / 2  dt
#
# with history x = 1 on [-1/2, 0] and x(1) = 2. The first variation says
# x'' = x while the delayed copy of x is still inside the unknown part of
# the trajectory (t in [0, 1/2]) and x'' = 0 afterwards, so the minimizer
# is a cosh/sinh arc glued C^1 to a straight line.

import numpy as np

from delayvar import HistoryFunction, SolveConfig, minimize, point_delay_quadratic

problem = point_delay_quadratic(n=1, r=0.5, T=1.0, cv=1.0, ca=0.0, cb=1.0)
psi = HistoryFunction.constant(0.5, 1.0)

result = minimize(problem, psi, 2.0, SolveConfig(N=64))
print(result.message, "after", result.iterations, "iterations")
print("J =", result.J)

# Closed form for comparison
c, s = np.cosh(0.5), np.sinh(0.5)
B = (2 - c - 0.5 * s) / (s + 0.5 * c)
t = np.linspace(0, 1, 11)
exact = np.where(t <= 0.5, np.cosh(t) + B * np.sinh(t), c + B * s + (s + B * c) * (t - 0.5))
numeric = result.trajectory(t)[:, 0]
for ti, a, b in zip(t, numeric, exact):
    print(f"t={ti:.1f}  x={a:.10f}  exact={b:.10f}")
print("max error:", np.abs(numeric - exact).max())

# The descent history is monotone
print("J history:", np.round(result.J_history, 10))
