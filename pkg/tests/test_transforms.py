import numpy as np
import pytest

from pathlaw import pathkit as pk
from pathlaw import transforms as tr
from pathlaw.errors import EmptyInput, OutOfDomain

from conftest import assert_knots

PITMAN_STAR = [(0, 0), (1 / 3, 2), (2 / 3, 3), (5 / 6, 2), (1, 3)]


def random_paths(rng, count=100, **kw):
    return [pk.random_path(rng, **kw) for _ in range(count)]


# Pitman transforms

def test_pitman_max_constant():
    assert_knots(tr.pitman_max(pk.constant(1.7, 2.0)), [(0, 1.7), (2, 1.7)])


def test_pitman_max_phi_star(phi_star):
    assert_knots(tr.pitman_max(phi_star), PITMAN_STAR)


def test_pitman_max_decreasing_line():
    assert_knots(tr.pitman_max(pk.make_path([0, 1], [3, 0])), [(0, 3), (1, 6)])


def test_pitman_min_examples(phi_star):
    # phi - 2 * min: a constant a maps to -a
    assert_knots(tr.pitman_min(pk.constant(-0.4, 1.0)), [(0, 0.4), (1, 0.4)])
    assert_knots(tr.pitman_min(phi_star), phi_star.knots())


def test_pitman_min_is_max_of_negated_path(rng):
    for p in random_paths(rng):
        assert pk.sup_distance(tr.pitman_min(p), tr.pitman_max(-p)) <= 1e-12


# M_x and Mbar_x

def test_m_x_phi_star(phi_star):
    m = tr.m_x(phi_star, 1.0)
    assert_knots(m, [(0, 0), (1 / 3, 2), (2 / 3, 1), (5 / 6, 2), (1, 1)])
    np.testing.assert_allclose(m(phi_star.times), [0, 2, 1, 1], atol=1e-12)


def test_m_x_identity_at_endpoint(rng):
    for p in random_paths(rng):
        assert pk.sup_distance(tr.m_x(p, p.end), p) <= 1e-9


def test_m_x_constant():
    assert_knots(tr.m_x(pk.constant(0.3, 1.0), 0.3), [(0, 0.3), (1, 0.3)])


@pytest.mark.parametrize("x", [-3.0, -1.0, 0.0, 1.0, 3.0])
def test_m_x_matches_direct_formula(rng, x):
    for p in random_paths(rng, 50):
        m = tr.m_x(p, x)
        assert np.max(np.abs(m.values - tr.m_x_direct(p, x, m.times))) <= 1e-9


def test_mbar_examples(rng, phi_star):
    for p in random_paths(rng, 30):
        assert pk.sup_distance(tr.mbar_x(p, p.end), p) <= 1e-9
    assert pk.sup_distance(tr.mbar_x(-phi_star, -1.0), -tr.m_x(phi_star, 1.0)) <= 1e-12
    assert_knots(tr.mbar_x(pk.constant(2.0, 1.0), 2.0), [(0, 2), (1, 2)])


@pytest.mark.parametrize("x", [-1.0, 2.0])
def test_mbar_matches_direct_formula(rng, x):
    for p in random_paths(rng, 50):
        m = tr.mbar_x(p, x)
        assert np.max(np.abs(m.values - tr.mbar_x_direct(p, x, m.times))) <= 1e-9


# N, Q and S

def test_n_phi_star(phi_star):
    assert_knots(tr.n_transform(phi_star), [(0, 3), (1 / 6, 2), (1 / 3, 3), (2 / 3, 2), (1, 0)])


def test_n_constant():
    assert_knots(tr.n_transform(pk.constant(-1.0, 3.0)), [(0, -1), (3, -1)])


def test_n_swaps_endpoints_and_is_involution(rng):
    for p in random_paths(rng):
        n = tr.n_transform(p)
        assert abs(n.start - p.end) <= 1e-12 and abs(n.end - p.start) <= 1e-12
        assert pk.sup_distance(tr.n_transform(n), p) <= 1e-9
        assert pk.sup_distance(n, tr.n_transform_via_mbar(p)) <= 1e-9


def test_q_examples(phi_star):
    assert_knots(tr.q_transform(phi_star), phi_star.knots())
    assert_knots(tr.q_transform(pk.reverse(phi_star)), PITMAN_STAR)
    # a constant a gives (a - 2a) + a = 0
    assert_knots(tr.q_transform(pk.constant(5.0, 1.0)), [(0, 0), (1, 0)])


def test_s_constant_zero():
    assert_knots(tr.s_transform(pk.constant(0.0, 4.0)), [(0, 0), (4, 0)])


def test_s_fixes_nonnegative_paths_ending_at_their_minimum():
    phi = pk.make_path([0, 1, 2, 3], [0, 2, 0.5, 0])
    assert pk.sup_distance(tr.s_transform(phi), phi) <= 1e-12


def _s_dense(phi, grid, tail_inf=None):
    vals = phi(grid)
    pre = np.minimum.accumulate(vals)
    suf = np.minimum.accumulate(vals[::-1])[::-1]
    if tail_inf is not None:
        suf = np.minimum(suf, tail_inf)
    g = pre - suf
    return vals - vals[0] + np.abs(-vals[0] + g) - np.abs(g)


@pytest.mark.parametrize("tail_inf", [None, -0.5])
def test_s_against_dense_oracle(phi_star, rng, tail_inf):
    for p in [phi_star] + random_paths(rng, 20):
        grid = np.union1d(np.linspace(0.0, p.horizon, 10_001), p.times)
        s = tr.s_transform(p, tail_inf)
        on = np.isin(grid, p.times)
        # exact at the knots of phi; elsewhere within the grid spacing of crossings
        assert np.max(np.abs(s(grid[on]) - _s_dense(p, grid, tail_inf)[on])) <= 1e-9


def test_iota_examples():
    assert_knots(tr.iota(pk.constant(0.0, 5.0)), [(0, 0), (1, 0)])
    assert_knots(tr.iota(pk.make_path([0, 1], [0, 1])), [(0, 0), (0.5, 0.5), (1, 0)])


def test_iota_at_mapped_knots(rng):
    for p in random_paths(rng, 30, horizon=4.0):
        u = p.times
        np.testing.assert_allclose(tr.iota(p)(u / (1 + u)), p.values / (1 + u), atol=1e-12)


# exponential functionals

def test_log_sum_exp():
    assert tr.log_sum_exp([0.0]) == 0.0
    assert tr.log_sum_exp([2.5, 2.5]) == pytest.approx(2.5 + np.log(2.0))
    assert tr.log_sum_exp([1000.0, 0.0]) == pytest.approx(1000.0)
    assert tr.log_sum_exp([1e6, -1e6]) == 1e6
    with pytest.raises(EmptyInput):
        tr.log_sum_exp([])


def test_log_a_closed_forms():
    assert tr.log_a_functional(pk.constant(0.0, 2.0), 3.0, 0.7) == pytest.approx(np.log(0.7), abs=1e-14)
    line = pk.make_path([0, 1], [0, 1])
    assert tr.log_a_functional(line, 1.0, 1.0) == pytest.approx(np.log((np.e**2 - 1) / 2), abs=1e-14)


@pytest.mark.parametrize("c", [0.5, 1.0, 4.0])
def test_log_a_against_trapezoid(rng, c):
    grid = np.linspace(0.0, 1.0, 1_000_001)
    for _ in range(5):
        # regular knots keep slopes moderate so the trapezoid rule is accurate
        p = pk.make_path(np.linspace(0, 1, 9), rng.uniform(-1, 1, 9))
        f = np.exp(2 * c * p(grid))
        trap = np.log(np.sum(0.5 * (f[1:] + f[:-1])) * (grid[1] - grid[0]))
        assert abs(tr.log_a_functional(p, c, 1.0) - trap) <= 1e-8 * abs(trap) + 1e-8


def test_log_a_domain(phi_star):
    with pytest.raises(OutOfDomain):
        tr.log_a_functional(phi_star, 1.0, 0.0)
    with pytest.raises(ValueError):
        tr.log_a_functional(phi_star, -1.0, 0.5)


def test_log_z_constant():
    assert tr.log_z_functional(pk.constant(0.0, 1.0), 2.0, 0.25) == pytest.approx(np.log(0.25))


def test_log_z_scaled_limit_is_pitman(phi_star):
    s = np.linspace(0.05, 1.0, 40)
    approx = tr.log_z_functional(phi_star, 256.0, s) / 256.0
    assert np.max(np.abs(approx - tr.pitman_max(phi_star)(s))) <= 0.05


def test_t_cx_endpoints(rng):
    for p in random_paths(rng, 20):
        for c in (0.5, 4.0, 16.0):
            v = tr.t_cx(p, c, 0.7, [0.0, p.horizon])
            assert abs(v[0] - p.start) <= 1e-9 and abs(v[1] - 0.7) <= 1e-9


def test_t_cx_identity_at_endpoint(rng):
    p = pk.random_path(rng)
    s = np.linspace(0, 1, 101)
    np.testing.assert_allclose(tr.t_cx(p, 3.0, p.end, s), p(s), atol=1e-12)


def test_t_cx_close_to_m_x(phi_star):
    s = np.linspace(0, 1, 512)
    assert np.max(np.abs(tr.t_cx(phi_star, 256.0, 1.0, s) - tr.m_x(phi_star, 1.0)(s))) <= 0.05


def test_t_cx_domain(phi_star):
    with pytest.raises(OutOfDomain):
        tr.t_cx(phi_star, 1.0, 0.0, [1.2])
    with pytest.raises(ValueError):
        tr.t_cx(phi_star, 0.0, 0.0, [0.5])
