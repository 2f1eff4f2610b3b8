"""Independent reference solutions for the unit delayed problem.

``F = v^2/2 + phi(-r)^2/2`` with ``r = 1/2``, ``T = 1``, history ``1``
and end value ``2``. The first variation gives ``x'' = x`` on
``[0, 1/2]`` and ``x'' = 0`` on ``[1/2, 1]`` with ``C^1`` matching.
"""

import numpy as np
from scipy.linalg import solve_banded

R, T, PSI, ZETA = 0.5, 1.0, 1.0, 2.0


def closed_form(t):
    t = np.asarray(t, dtype=float)
    c, s = np.cosh(R), np.sinh(R)
    B = (ZETA - c - R * s) / (s + R * c)
    left = np.cosh(t) + B * np.sinh(t)
    xr = c + B * s
    dxr = s + B * c
    return np.where(t <= R, left, xr + dxr * (t - R))


def closed_form_J():
    # J = int v^2/2 + x(t - 1/2)^2/2 over [0, 1]
    from scipy.integrate import quad

    h = 1e-7
    dx = lambda t: (closed_form(t + h) - closed_form(t - h)) / (2 * h)
    kin = quad(lambda t: 0.5 * dx(t) ** 2, 0, T, points=[R], epsabs=1e-13)[0]
    lag = 0.5 * PSI**2 * R + quad(lambda t: 0.5 * closed_form(t - R) ** 2, R, T, epsabs=1e-13)[0]
    return kin + lag


def fd_bvp(M=4096):
    """Second-order finite differences for ``x'' = c(t) x`` on a uniform grid."""
    t = np.linspace(0.0, T, M + 1)
    h = T / M
    c = np.where(t < R, 1.0, 0.0)
    c[np.isclose(t, R)] = 0.5
    inner = slice(1, M)
    ab = np.zeros((3, M - 1))
    ab[0, 1:] = 1.0
    ab[1, :] = -2.0 - h * h * c[inner]
    ab[2, :-1] = 1.0
    rhs = np.zeros(M - 1)
    rhs[0] -= PSI
    rhs[-1] -= ZETA
    x = np.empty(M + 1)
    x[0], x[-1] = PSI, ZETA
    x[inner] = solve_banded((1, 1), ab, rhs)
    return t, x
