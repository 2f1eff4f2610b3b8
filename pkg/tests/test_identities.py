import numpy as np

from delayvar.identities import (
    fubini_suite,
    gradient_fd_suite,
    ibp_suite,
    pairing_bound_suite,
    random_builtin_problem,
    random_measure,
    random_smooth_perturbation,
    random_smooth_trajectory,
    run_all,
    zero_measure_suite,
)
from delayvar.problem import BUILTIN_PROBLEMS


def test_random_measure_shapes(rng):
    m = random_measure(rng, 0.5, 3)
    assert m.n == 3 and m.r == 0.5
    assert np.all((m.atom_locations >= -0.5) & (m.atom_locations <= 0.0))


def test_smooth_trajectory_is_admissible(rng):
    x = random_smooth_trajectory(rng, 2, 0.5, 1.0, 8)
    assert np.allclose(x(0.0), x(-1e-14), atol=1e-12)
    h = random_smooth_perturbation(rng, 2, 0.5, 1.0, 8)
    assert np.all(h(0.0) == 0.0) and np.all(h(1.0) == 0.0)
    assert np.all(h(np.array([-0.5, -0.2])) == 0.0)


def test_builtin_draws(rng):
    for name in BUILTIN_PROBLEMS:
        p = random_builtin_problem(rng, name, 2, 0.5, 1.0)
        assert p.n == 2 and p.name == name


def test_pairing_bound(rng):
    res = pairing_bound_suite(rng, 200)
    assert res.passed and res.max_discrepancy <= 0.0


def test_ibp(rng):
    atoms, dens = ibp_suite(rng, 60)
    assert atoms.passed and dens.passed
    assert atoms.cases + dens.cases == 60


def test_zero_measure(rng):
    res = zero_measure_suite(rng, 10)
    assert res.passed and res.max_discrepancy == 0.0


def test_fubini_small(rng):
    res = fubini_suite(rng, 5)
    assert res.passed, res
    assert fubini_suite(rng, 0).cases == 0


def test_gradient_fd(rng):
    res = gradient_fd_suite(rng, 15)
    assert res.passed, res


def test_run_all_is_reproducible():
    a = run_all(3, fubini_cases=2, pairing_cases=20, ibp_cases=10, zero_cases=2)
    b = run_all(3, fubini_cases=2, pairing_cases=20, ibp_cases=10, zero_cases=2)
    assert a == b
    assert [r.name for r in a] == ["fubini", "pairing_bound", "ibp_atoms", "ibp_density", "zero_measure"]
