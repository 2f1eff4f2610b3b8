# Covector measures on the delay window [-r, 0]
#
# A derivative of a delay Lagrangian with respect to the past segment is a
# measure: point masses where the Lagrangian samples the segment, plus a
# density where it averages over it. This script builds one and pokes at it.

import numpy as np

from delayvar import CovectorMeasure, cumulative, integrate_by_parts_check, pair, total_variation

r = 0.5

# Two atoms, one at each end of the window, with weights in R^2
atoms = CovectorMeasure.atoms(r, [-r, 0.0], [[1.0, -2.0], [0.5, 0.0]])
print("atom locations:", atoms.atom_locations)

# A linear density k(theta) = 1 + theta, sampled on a grid of 8 cells
dens = CovectorMeasure.from_density(r, lambda th: np.column_stack([1 + th, 0 * th]), 8, n=2)
m = atoms + dens

# Pairing with a test function: sum of atom terms plus the density integral
phi = lambda th: np.column_stack([np.cos(np.atleast_1d(th)), np.atleast_1d(th)])
print("pair(m, phi)      =", pair(m, phi))

# The pairing is bounded by n * TV(m) * sup|phi|
sup_phi = max(np.abs(phi(np.linspace(-r, 0, 201))).max(), 1.0)
print("bound n*TV*sup    =", 2 * total_variation(m) * sup_phi)

# Cumulative function: normalized so g(-r) = 0, left-continuous inside the
# window, and g(0) is the total mass. The atom at -r shows up just right of -r.
for th in (-r, -0.25, 0.0):
    print(f"cumulative({th:+.2f}) =", cumulative(m, th))

# Integration by parts along a shifted window, h(s) = s^2 on both coordinates
h = lambda s: np.column_stack([np.atleast_1d(s) ** 2] * 2)
dh = lambda s: np.column_stack([2 * np.atleast_1d(s)] * 2)
lhs, rhs = integrate_by_parts_check(m, h, dh, 0.8)
print("integration by parts:", lhs, rhs, "gap", abs(lhs - rhs))
