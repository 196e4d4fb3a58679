import math

import numpy as np
import pytest
from scipy import stats

from pathlaw import samplers as sm
from pathlaw import statlab as st
from pathlaw.errors import InvalidParams, RejectionBudgetExceeded
from pathlaw.samplers import ProcessSpec, Seed

N_MOMENT = 100_000


def within_se(sample, target, se_count=4.0):
    se = sample.std(ddof=1) / math.sqrt(sample.size)
    return abs(sample.mean() - target) <= se_count * se


def var_within_se(sample, target, se_count=4.0):
    # standard error of the sample variance from the fourth central moment
    c = sample - sample.mean()
    se = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / sample.size)
    return abs(np.var(sample, ddof=1) - target) <= se_count * se


# seeds

def test_seed_determinism_and_children():
    a = Seed(7).generator().standard_normal(5)
    b = Seed(7).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert Seed(7).child(1, 2) == Seed(7).child(1, 2)
    assert Seed(7).child(1) != Seed(7).child(2)
    with pytest.raises(ValueError):
        Seed(-1)


def test_streams_are_uncorrelated():
    x = sm.bridge_rows(Seed(1, 0).generator(), 0, 0, 1, 8, 10_000)[:, 4]
    y = sm.bridge_rows(Seed(1, 1).generator(), 0, 0, 1, 8, 10_000)[:, 4]
    r = np.corrcoef(x, y)[0, 1]
    assert abs(r) <= 4.0 / math.sqrt(x.size)


# Brownian motion and bridge

def test_brownian_motion_is_deterministic_and_starts_at_a():
    p = sm.sample_brownian_motion(0.3, 2.0, 64, Seed(5))
    q = sm.sample_brownian_motion(0.3, 2.0, 64, Seed(5))
    assert np.array_equal(p.values, q.values)
    assert p.start == 0.3 and p.horizon == 2.0 and len(p) == 65


def test_brownian_motion_moments():
    end = sm.brownian_rows(Seed(11).generator(), 0.5, 2.0, 16, N_MOMENT)[:, -1]
    assert within_se(end, 0.5) and var_within_se(end, 2.0)


def test_bridge_endpoints_and_moments():
    p = sm.sample_brownian_bridge(-0.5, 1.25, 1.0, 32, Seed(2))
    assert p.start == -0.5 and p.end == 1.25
    mid = sm.bridge_rows(Seed(12).generator(), -0.5, 1.25, 2.0, 16, N_MOMENT)[:, 8]
    assert within_se(mid, 0.375) and var_within_se(mid, 0.5)


def test_bridge_drift_relation():
    # bridge 0 -> x equals bridge 0 -> y plus the line (x - y) s / t
    x, y, n = 1.2, 0.5, 20_000
    left = sm.bridge_rows(Seed(13).generator(), 0, x, 1.0, 16, n)[:, 8]
    right = sm.bridge_rows(Seed(14).generator(), 0, y, 1.0, 16, n)[:, 8] + (x - y) * 0.5
    assert st.ks_statistic(left, right) <= 0.02


# Bessel kinds

def test_bessel_process_basics():
    p = sm.sample_bessel3_process(0.4, 1.0, 128, Seed(3))
    assert p.start == 0.4 and np.all(p.values >= 0)


def test_bessel_process_mean_from_zero():
    t = 1.5
    end = sm.bessel3_rows(Seed(15).generator(), 0.0, t, 4, N_MOMENT)[:, -1]
    assert within_se(end, 2.0 * math.sqrt(2.0 * t / math.pi))
    # independent oracle: norm of a Gaussian vector with variance t per coordinate
    oracle = np.linalg.norm(Seed(16).generator().standard_normal((20_000, 3)) * math.sqrt(t), axis=1)
    assert st.ks_statistic(end[:20_000], oracle) <= 0.02


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (0.0, 0.7), (0.7, 1.3)])
def test_bessel_bridge_endpoints(a, b):
    p = sm.sample_bessel3_bridge(a, b, 1.0, 256, Seed(3))
    assert p.start == a and p.end == b and np.all(p.values >= 0)


def test_bessel_bridge_reversal_symmetry():
    rows, _ = sm.bessel3_bridge_rows(Seed(17).generator(), 0.9, 0.9, 1.0, 32, 20_000)
    back, _ = sm.bessel3_bridge_rows(Seed(18).generator(), 0.9, 0.9, 1.0, 32, 20_000)
    assert st.ks_statistic(rows.max(axis=1), back[:, ::-1].max(axis=1)) <= 0.02
    assert st.ks_statistic(rows[:, 8], back[:, ::-1][:, 8]) <= 0.02


def test_bessel_bridge_rejection_vs_reversed_route():
    fwd, _ = sm.bessel3_bridge_rows(Seed(19).generator(), 0.8, 0.6, 1.0, 32, 20_000)
    rev, _ = sm.bessel3_bridge_rows(Seed(20).generator(), 0.6, 0.8, 1.0, 32, 20_000)
    assert st.ks_statistic(fwd[:, 16], rev[:, ::-1][:, 16]) <= 0.02


def test_bessel_bridge_budget():
    with pytest.raises(RejectionBudgetExceeded):
        sm.bessel3_bridge_rows(Seed(1).generator(), 0.01, 0.01, 1.0, 64, 100, max_rejections=200)


def test_process_spec_validation():
    with pytest.raises(InvalidParams):
        ProcessSpec("bessel3_bridge", a=-1.0, b=0.0)
    with pytest.raises(InvalidParams):
        ProcessSpec("bessel3_bridge", a=1.0, b=-0.1)
    with pytest.raises(InvalidParams):
        ProcessSpec("levy_flight")
    with pytest.raises(InvalidParams):
        ProcessSpec("brownian_motion", t=0.0)
    with pytest.raises(InvalidParams):
        ProcessSpec("brownian_motion", steps=0)


# rejection conditioning

def test_conditioned_trivial_predicate():
    res = sm.sample_conditioned(ProcessSpec("brownian_bridge", b=1.0, steps=16), lambda p: True, Seed(4))
    assert res.attempts == 1 and res.path.end == 1.0


def test_conditioned_predicate_holds():
    a, b, c = 0.7, 1.3, 1.0
    spec = ProcessSpec("bessel3_bridge", a=c, b=a + b - c, steps=64)
    for k in range(20):
        res = sm.sample_conditioned(spec, lambda p: p.values.min() <= min(a, b), Seed(6).child(k))
        assert res.path.values.min() <= min(a, b)


def test_conditioned_rate_matches_closed_form():
    # P(beta^y)(t) >= |x| decided on the exact maximum of every grid segment
    x, y, t = 1.2, 0.5, 1.0
    rng = Seed(21).generator()
    times = sm.grid(t, 32)

    def keep(rows):
        _, top = sm.segment_extrema(times, rows, rng, "max")
        return 2.0 * top.max(axis=1) - rows[:, -1] >= abs(x)

    spec = ProcessSpec("brownian_bridge", a=0.0, b=y, t=t, steps=32)
    rows, attempts = sm.conditioned_rows(spec, keep, 20_000, rng)
    ref = st.bridge_max_tail(y, x, t)
    assert st.rate_vs_reference(rows.shape[0], attempts, ref).pass_


# exact segment extrema

def test_segment_max_law_and_location():
    # one segment of a bridge 0 -> 0 on [0, 1]: P(M >= m) = exp(-2 m^2), argmax uniform
    rows = np.zeros((20_000, 2))
    when, top = sm.segment_extrema(np.array([0.0, 1.0]), rows, Seed(22).generator(), "max")
    assert stats.kstest(top[:, 0], lambda m: -np.expm1(-2.0 * m * m)).pvalue > 1e-3
    assert stats.kstest(when[:, 0], "uniform").pvalue > 1e-3


def test_segment_min_location_against_reflection():
    # bridge 0 -> 1: min location law is symmetric to the max location of bridge 0 -> -1
    n = 20_000
    w1, _ = sm.segment_extrema(np.array([0.0, 1.0]), np.tile([0.0, 1.0], (n, 1)), Seed(23).generator(), "min")
    w2, _ = sm.segment_extrema(np.array([0.0, 1.0]), np.tile([0.0, -1.0], (n, 1)), Seed(24).generator(), "max")
    assert st.ks_statistic(w1[:, 0], w2[:, 0]) <= 0.02


def test_segment_min_location_against_fine_simulation():
    # bridge 0.3 -> -0.2 on [0, 1] simulated on a fine grid
    n, fine = 10_000, 2000
    rows = sm.bridge_rows(Seed(25).generator(), 0.3, -0.2, 1.0, fine, n)
    argmin = rows.argmin(axis=1) / fine
    when, low = sm.segment_extrema(np.array([0.0, 1.0]), np.tile([0.3, -0.2], (n, 1)),
                                   Seed(26).generator(), "min")
    assert st.ks_statistic(argmin, when[:, 0]) <= 0.03
    assert np.all(low <= -0.2)


def test_positive_segment_min_law():
    a, b, t = 0.5, 0.8, 1.0
    _, low = sm.segment_extrema(np.array([0.0, t]), np.tile([a, b], (20_000, 1)),
                                Seed(27).generator(), "min", positive=True)
    assert np.all(low > 0)
    cdf = np.vectorize(lambda m: st.bridge_min_below(a, b, m, t, positive=True) if m > 0 else 0.0)
    assert stats.kstest(low[:, 0], cdf).pvalue > 1e-3


def test_refine_extrema_shapes():
    rows = sm.bridge_rows(Seed(8).generator(), 0, 1, 1.0, 16, 5)
    t, v = sm.refine_extrema(sm.grid(1.0, 16), rows, Seed(9).generator(), "min")
    assert t.shape == v.shape == (5, 33)
    assert np.all(np.diff(t, axis=1) > 0)
    assert np.array_equal(v[:, 0::2], rows)
    assert np.all(v[:, 1::2] <= np.minimum(rows[:, :-1], rows[:, 1:]))


def test_refine_rejects_positive_max():
    with pytest.raises(ValueError):
        sm.segment_extrema(np.array([0.0, 1.0]), np.ones((2, 2)), Seed(1).generator(), "max", positive=True)
