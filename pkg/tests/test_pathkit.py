import io

import numpy as np
import pytest

from pathlaw import pathkit as pk
from pathlaw.errors import EmptyPath, HorizonMismatch, LengthMismatch, NonMonotoneTimes, OutOfDomain

from conftest import assert_knots

DENSE = np.linspace(0.0, 1.0, 10_001)


def random_paths(rng, count=50):
    return [pk.random_path(rng) for _ in range(count)]


def dense_tol(*paths):
    # a crossing time is only known to an ulp, which a steep segment turns
    # into a value error of about slope * ulp
    slope = max(np.max(np.abs(np.diff(p.values) / np.diff(p.times))) for p in paths)
    return 1e-12 + 4.0 * pk.EPS * slope


# construction and evaluation

def test_make_path_line():
    p = pk.make_path([0, 1], [0, 3])
    assert p.horizon == 1.0 and p(0.5) == 1.5


def test_make_path_rejects_duplicate_time():
    with pytest.raises(NonMonotoneTimes):
        pk.make_path([0, 0.5, 0.5, 1], [0, 1, 2, 3])


def test_make_path_rejects_bad_shapes():
    with pytest.raises(LengthMismatch):
        pk.make_path([0, 1], [0, 1, 2])
    with pytest.raises(EmptyPath):
        pk.make_path([0], [1])
    with pytest.raises(NonMonotoneTimes):
        pk.make_path([0.1, 1], [0, 1])


def test_paths_are_read_only(phi_star):
    with pytest.raises(ValueError):
        phi_star.values[0] = 1.0


@pytest.mark.parametrize("s, value", [(1 / 3, 2.0), (1 / 6, 1.0), (5 / 6, 2.0)])
def test_eval_phi_star(phi_star, s, value):
    assert phi_star(s) == pytest.approx(value, abs=1e-15)


def test_eval_exact_at_knots(rng):
    p = pk.random_path(rng)
    assert np.array_equal(p(p.times), p.values)


def test_eval_out_of_domain(phi_star):
    with pytest.raises(OutOfDomain):
        phi_star(1.5)
    with pytest.raises(OutOfDomain):
        phi_star(-0.1)


# reversal

def test_reverse_phi_star(phi_star):
    assert_knots(pk.reverse(phi_star), [(0, 3), (1 / 3, 1), (2 / 3, 2), (1, 0)])


def test_reverse_line():
    assert_knots(pk.reverse(pk.make_path([0, 1], [0, 3])), [(0, 3), (1, 0)])


def test_reverse_involution(rng):
    for p in random_paths(rng):
        r = pk.reverse(pk.reverse(p))
        assert np.array_equal(r.values, p.values)
        np.testing.assert_allclose(r.times, p.times, atol=1e-15)


# envelopes

def test_prefix_max_phi_star(phi_star):
    assert_knots(pk.envelope(phi_star, "prefix_max"), [(0, 0), (1 / 3, 2), (5 / 6, 2), (1, 3)])


def test_prefix_min_phi_star(phi_star):
    env = pk.envelope(phi_star, "prefix_min")
    assert np.all(env(DENSE) == 0.0)


def test_suffix_min_of_reverse_at_zero(phi_star):
    assert pk.envelope(pk.reverse(phi_star), "suffix_min")(0.0) == 0.0


@pytest.mark.parametrize("kind", pk.ENVELOPE_KINDS)
def test_envelope_against_dense_oracle(rng, kind):
    for p in random_paths(rng, 30):
        grid = np.union1d(DENSE, p.times)
        vals = p(grid)
        if kind.startswith("suffix"):
            vals = vals[::-1]
        acc = np.maximum.accumulate(vals) if kind.endswith("max") else np.minimum.accumulate(vals)
        if kind.startswith("suffix"):
            acc = acc[::-1]
        env = pk.envelope(p, kind)
        # the oracle sees knots and a fine grid; crossings make it exact up to grid spacing
        at = np.isin(grid, env.times) | np.isin(grid, p.times)
        assert np.max(np.abs(env(grid[at]) - acc[at])) <= 1e-9


def test_suffix_envelope_matches_reversal(rng):
    for p in random_paths(rng):
        direct = pk.envelope(p, "suffix_max")
        via = pk.reverse(pk.envelope(pk.reverse(p), "prefix_max"))
        assert pk.sup_distance(direct, via) <= 1e-12


def test_envelope_rejects_unknown_kind(phi_star):
    with pytest.raises(ValueError):
        pk.envelope(phi_star, "running_max")


# combinations

def test_combine_negation(phi_star):
    assert_knots(pk.combine([phi_star], [-1.0]), [(0, 0), (1 / 3, -2), (2 / 3, -1), (1, -3)])


def test_combine_cancellation(phi_star):
    assert_knots(pk.combine([phi_star, phi_star], [1.0, -1.0], 5.0), [(0, 5), (1, 5)])


def test_combine_pitman(phi_star):
    p = pk.combine([phi_star, pk.envelope(phi_star, "prefix_max")], [-1.0, 2.0])
    assert_knots(p, [(0, 0), (1 / 3, 2), (2 / 3, 3), (5 / 6, 2), (1, 3)])


def test_combine_horizon_mismatch(phi_star):
    with pytest.raises(HorizonMismatch):
        pk.combine([phi_star, pk.make_path([0, 2], [0, 0])], [1.0, 1.0])


def test_abs_line():
    assert_knots(pk.abs_path(pk.make_path([0, 1], [-1, 1])), [(0, 1), (0.5, 0), (1, 1)])


def test_abs_nonnegative_identity(phi_star):
    assert_knots(pk.abs_path(phi_star), phi_star.knots())


def test_abs_crossings(phi_star):
    a = pk.abs_path(pk.combine([phi_star], [1.0], -1.5))
    zeros = a.times[np.abs(a.values) < 1e-12]
    # phi* equals 1.5 on the rising first segment, the falling middle one and the last one
    np.testing.assert_allclose(zeros, [0.25, 0.5, 2 / 3 + 1 / 12], atol=1e-12)


def test_abs_dense(rng):
    for p in random_paths(rng):
        a = pk.abs_path(p)
        assert np.all(a(DENSE) >= 0.0)
        assert np.max(np.abs(a(DENSE) - np.abs(p(DENSE)))) <= dense_tol(p)


def test_min_of_line_and_constant():
    m = pk.pointwise_min(pk.make_path([0, 1], [0, 2]), pk.constant(1.0, 1.0))
    assert_knots(m, [(0, 0), (0.5, 1), (1, 1)])


def test_min_self(phi_star):
    assert_knots(pk.pointwise_min(phi_star, phi_star), phi_star.knots())


def test_min_worked_example(phi_star):
    from pathlaw import transforms as tr

    tail = pk.envelope(tr.pitman_max(phi_star), "suffix_min")
    m = pk.pointwise_min(2.0 * tail, pk.constant(4.0, 1.0))
    assert_knots(m, [(0, 0), (1 / 3, 4), (1, 4)])


def test_min_max_dense(rng):
    ps, qs = random_paths(rng, 30), random_paths(rng, 30)
    for p, q in zip(ps, qs):
        lo, hi = pk.pointwise_min(p, q), pk.pointwise_max(p, q)
        assert np.max(np.abs(lo(DENSE) - np.minimum(p(DENSE), q(DENSE)))) <= dense_tol(p, q)
        assert np.max(np.abs(hi(DENSE) - np.maximum(p(DENSE), q(DENSE)))) <= dense_tol(p, q)


def test_outputs_are_valid_paths(rng):
    for p in random_paths(rng):
        for out in (pk.abs_path(p), pk.envelope(p, "suffix_min"), p - pk.reverse(p)):
            assert out.times[0] == 0.0 and out.times[-1] == p.horizon
            assert np.all(np.diff(out.times) > 0)


def test_pruning_never_changes_function(rng):
    for p in random_paths(rng):
        r = pk.reverse(p)
        q = pk.combine([p, r], [1.0, 1.0])
        assert np.max(np.abs(q(DENSE) - (p(DENSE) + r(DENSE)))) <= dense_tol(p)


def test_two_knot_paths_round_trip():
    line = pk.make_path([0, 1], [1, -1])
    const = pk.constant(2.0, 1.0)
    for p in (line, const):
        for out in (pk.reverse(p), pk.abs_path(p), pk.envelope(p, "prefix_min"), pk.combine([p], [1.0])):
            assert out.horizon == 1.0 and len(out) >= 2


# window functionals and I/O

def test_window_functionals(phi_star):
    assert pk.max_over(phi_star, 0, 1) == 3.0
    assert pk.min_over(phi_star, 0.5, 1.0) == pytest.approx(1.0)
    assert pk.integral_over(phi_star, 0, 1) == pytest.approx(1.5, abs=1e-15)


def test_csv_round_trip(rng):
    p = pk.random_path(rng)
    text = pk.to_csv_string(p)
    assert text.splitlines()[0] == "s,value"
    q = pk.read_csv(io.StringIO(text))
    assert np.array_equal(q.times, p.times) and np.array_equal(q.values, p.values)
