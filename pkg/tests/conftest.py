import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def poly_fn(coef):
    """Vector polynomial ``sum_k coef[k] s**k`` and its derivative, row-shaped."""
    coef = np.atleast_2d(np.asarray(coef, dtype=float))

    def f(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))[:, None]
        return sum(c * s**k for k, c in enumerate(coef))

    def df(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))[:, None]
        return sum(k * c * s ** (k - 1) for k, c in enumerate(coef) if k > 0) + 0.0 * s

    return f, df
