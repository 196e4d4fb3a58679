import numpy as np
import pytest

from pathlaw import pathkit as pk


@pytest.fixture
def phi_star():
    return pk.make_path([0.0, 1 / 3, 2 / 3, 1.0], [0.0, 2.0, 1.0, 3.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def assert_knots(path, expected, tol=1e-12):
    got = np.array(path.knots())
    exp = np.array(expected, dtype=float)
    assert got.shape == exp.shape, f"knots {path.knots()} vs {expected}"
    np.testing.assert_allclose(got, exp, atol=tol, rtol=0)
