"""Deterministic identity suite on seeded random piecewise-linear paths.

Every identity is checked as a sup-norm deviation on the union of knots of
the paths involved (exact for piecewise-linear paths), or against an
independent dense-grid oracle where one side is not a transform output.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import pathkit as pk
from . import transforms as tr
from .pathkit import PLPath
from .samplers import Seed

__all__ = [
    "IdentityResult",
    "run_selftest",
    "IDENTITIES",
    "EXACT_TOL",
    "GRID_TOL",
    "log_a_quadrature",
    "z_invariance",
    "tcx_convergence",
]

EXACT_TOL = 1e-9
GRID_TOL = 1e-6
X_VALUES = (-3.0, -1.0, 0.0, 1.0, 3.0)
Y_VALUES = (-2.0, 0.0, 2.0)
ORACLE_POINTS = 10_000
Z_TOL = 1e-8
TCX_TOL = 0.05
TCX_SLACK = 1e-3
C_VALUES = (1.0, 4.0, 16.0)
C_LADDER = (4.0, 16.0, 64.0, 256.0)
TCX_GRID = 512


@dataclass
class IdentityResult:
    name: str
    max_dev: float
    tol: float
    checks: int = 0

    @property
    def passed(self) -> bool:
        return bool(self.max_dev <= self.tol)

    def line(self) -> str:
        flag = "ok" if self.passed else "FAIL"
        return f"{self.name}: max_dev={self.max_dev:.3e} tol={self.tol:g} checks={self.checks} {flag}"


def _dist(p: PLPath, q: PLPath) -> float:
    return pk.sup_distance(p, q)


def _grid(*paths: PLPath) -> np.ndarray:
    return np.unique(np.concatenate([p.times for p in paths]))


def _minp(phi, memo):
    p = tr.pitman_max(phi)
    left = pk.envelope(p, "suffix_min")
    pre = pk.envelope(phi, "prefix_max")
    suf = pk.envelope(phi, "suffix_max")
    s = _grid(left, pre, suf)
    right = pre(s) + np.maximum(pre(s) - suf(s), 0.0)
    return [np.max(np.abs(left(s) - right))]


def _mxp(phi, memo):
    out = []
    for x in X_VALUES + (phi.end,):
        m = tr.m_x(phi, x)
        out.append(np.max(np.abs(m.values - tr.m_x_direct(phi, x, m.times))))
    for x in (-1.0, 1.0):
        m = tr.mbar_x(phi, x)
        out.append(np.max(np.abs(m.values - tr.mbar_x_direct(phi, x, m.times))))
    return out


def _iden(phi, memo):
    return [_dist(tr.m_x(phi, phi.end), phi)]


def _idenp(phi, memo):
    # written out with pathkit primitives rather than through m_x
    p = pk.combine([pk.envelope(phi, "prefix_max"), phi], [2.0, -1.0])
    tail = pk.envelope(p, "suffix_min")
    cap = pk.constant(p.end + phi.end, phi.horizon)
    rebuilt = pk.combine([p, pk.pointwise_min(2.0 * tail, cap)], [-1.0, 1.0])
    return [_dist(rebuilt, phi)]


def _admissible_x(phi):
    # x with |x - phi(0)| <= P(phi)(t) - phi(0)
    room = tr.pitman_max(phi).end - phi.start
    return [phi.start + f * room for f in (-1.0, -0.5, 0.0, 0.3, 1.0)]


def _cached_mx(phi, x, memo):
    # mxbv and mxpl share these transforms on each path
    key = ("m_x", x)
    if key not in memo:
        memo[key] = tr.m_x(phi, x)
    return memo[key]


def _mxbv(phi, memo):
    out = []
    for x in _admissible_x(phi):
        m = _cached_mx(phi, x, memo)
        out += [abs(m.start - phi.start), abs(m.end - x)]
    return out


def _mxpl(phi, memo):
    p = tr.pitman_max(phi)
    out = []
    for x in _admissible_x(phi):
        m = _cached_mx(phi, x, memo)
        out.append(_dist(tr.pitman_max(m), p))
        for y in Y_VALUES:
            out.append(_dist(tr.m_x(m, y), _cached_mx(phi, y, memo)))
    return out


def _pnq_i(phi, memo):
    n = tr.n_transform(phi)
    return [abs(n.start - phi.end), abs(n.end - phi.start)]


def _pnq_ii(phi, memo):
    n = tr.n_transform(phi)
    return [_dist(tr.n_transform(n), phi), _dist(tr.q_transform(n), tr.q_transform(phi))]


def _pnq_iii(phi, memo):
    return [_dist(pk.reverse(tr.n_transform(phi)), tr.n_transform(pk.reverse(phi)))]


def _n_routes(phi, memo):
    return [_dist(tr.n_transform(phi), tr.n_transform_via_mbar(phi))]


def _nonneg(phi, start_zero=True, end_zero=False):
    v = np.abs(phi.values)
    if start_zero:
        v[0] = 0.0
    if end_zero:
        v[-1] = 0.0
    return pk.make_path(phi.times.copy(), v)


def _fnq(phi, memo):
    f = _nonneg(phi, start_zero=True)
    g = _nonneg(phi, start_zero=False, end_zero=True)
    return [
        _dist(pk.reverse(tr.n_transform(f)), tr.q_transform(pk.reverse(f))),
        _dist(tr.q_transform(f), f),
        _dist(tr.n_transform(g), tr.q_transform(g)),
    ]


def _bound(phi, memo):
    f = _nonneg(phi, start_zero=True)
    rn = pk.reverse(tr.n_transform(f))
    s = _grid(rn, f)
    floor = np.abs(f(f.horizon - s) - f.end)
    return [np.max(np.maximum(floor - rn(s), 0.0)), np.max(np.maximum(-floor, 0.0))]


def _linv(phi, memo):
    # compactly varying: zero at the horizon, hence zero afterwards
    v = phi.values.copy()
    v[-1] = 0.0
    f = pk.make_path(phi.times.copy(), v)
    psi = tr.iota(f)
    q = tr.q_transform(psi)
    # dense-grid oracle for the running minimum of f(u) / (1 + u)
    dense = np.union1d(np.linspace(0.0, f.horizon, ORACLE_POINTS), f.times)
    ratio = f(dense) / (1.0 + dense)
    run_min = np.minimum.accumulate(ratio)
    u = f.times
    at = np.searchsorted(dense, u)
    s = u / (1.0 + u)
    out = [
        np.max(np.abs(psi(s) - ratio[at])),
        np.max(np.abs(q(s) - (ratio[at] - 2.0 * run_min[at] + f.start))),
    ]
    # reversed statements at s = 1/u; time 1/(1+u) on [0, 1]
    pos = u > 0
    s2 = 1.0 / (1.0 + u[pos])
    fu = f.values[pos]
    out.append(np.max(np.abs(pk.reverse(psi)(s2) - s2 * fu)))
    out.append(np.max(np.abs(pk.reverse(q)(s2) - (s2 * fu - 2.0 * run_min[at][pos] + f.start))))
    return out


IDENTITIES: list[tuple[str, Callable, float]] = [
    ("minp", _minp, EXACT_TOL),
    ("mxp", _mxp, EXACT_TOL),
    ("iden", _iden, EXACT_TOL),
    ("idenp", _idenp, EXACT_TOL),
    ("mxbv", _mxbv, EXACT_TOL),
    ("mxpl", _mxpl, EXACT_TOL),
    ("pnq_i", _pnq_i, EXACT_TOL),
    ("pnq_ii", _pnq_ii, EXACT_TOL),
    ("pnq_iii", _pnq_iii, EXACT_TOL),
    ("n_routes", _n_routes, EXACT_TOL),
    ("fnq", _fnq, EXACT_TOL),
    ("nonneg_bound", _bound, EXACT_TOL),
    ("linv", _linv, GRID_TOL),
]


def run_selftest(paths: int = 1000, seed: Seed = Seed(42)) -> tuple[list[IdentityResult], float]:
    """Run every identity over ``paths`` random paths.

    Returns the per-identity results and the elapsed seconds.
    """
    if int(paths) < 1:
        raise ValueError("paths must be at least 1")
    t0 = time.perf_counter()
    rng = seed.generator()
    results = {name: IdentityResult(name, 0.0, tol) for name, _, tol in IDENTITIES}
    for _ in range(int(paths)):
        phi = pk.random_path(rng)
        memo: dict = {}
        for name, fn, _ in IDENTITIES:
            devs = fn(phi, memo)
            r = results[name]
            r.max_dev = max(r.max_dev, float(max(devs)))
            r.checks += len(devs)
    return list(results.values()), time.perf_counter() - t0


# ---------------------------------------------------------------------------
# smooth approximation T^c_x: quadrature oracle and convergence checks

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


def _panel_logs(log_f, a, b, rule):
    nodes, weights = rule
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    u = mid[:, None] + half[:, None] * nodes[None, :]
    vals = log_f(u.ravel()).reshape(u.shape) + np.log(weights)[None, :]
    top = vals.max(axis=1)
    return np.log(half) + top + np.log(np.exp(vals - top[:, None]).sum(axis=1))


def log_a_quadrature(log_f: Callable, breaks: np.ndarray, rtol: float = 1e-13,
                     max_rounds: int = 40) -> np.ndarray:
    """Log of the cumulative integral of ``exp(log_f)`` up to each break point.

    Adaptive Gauss-Legendre in log space: a panel is split in halves until
    its 10- and 20-node estimates agree to ``rtol``. ``log_f`` must accept a
    flat array of times. Returns one value per break after the first.
    """
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1], breaks[1:]
    owner = np.arange(a.size)
    done_owner, done_val = [], []
    for _ in range(max_rounds):
        lo = _panel_logs(log_f, a, b, _GL_LO)
        hi = _panel_logs(log_f, a, b, _GL_HI)
        ok = np.abs(np.expm1(lo - hi)) <= rtol
        done_owner.append(owner[ok])
        done_val.append(hi[ok])
        if ok.all():
            break
        a, b, owner = a[~ok], b[~ok], owner[~ok]
        mid = (a + b) / 2.0
        a, b, owner = np.concatenate([a, mid]), np.concatenate([mid, b]), np.concatenate([owner, owner])
    else:
        raise RuntimeError("quadrature did not converge")
    owner = np.concatenate(done_owner)
    val = np.concatenate(done_val)
    per = np.full(breaks.size - 1, -np.inf)
    np.logaddexp.at(per, owner, val)
    return np.logaddexp.accumulate(per)


def _random_x(phi: PLPath, rng) -> float:
    # admissible endpoint: |x - phi(0)| <= P(phi)(t) - phi(0)
    room = tr.pitman_max(phi).end - phi.start
    return phi.start + rng.uniform(-1.0, 1.0) * room


def z_invariance(paths: int = 100, seed: Seed = Seed(42)) -> IdentityResult:
    """``log Z_s(c T^c_x(phi)) = log Z_s(c phi)`` at every positive knot.

    The left side needs the A-functional of a smooth path, computed by
    :func:`log_a_quadrature`. The deviation is ``|difference of logs|``
    divided by ``max(1, |log Z_s(c phi)|)``, a relative error on ``Z``.
    """
    rng = seed.child(7).generator()
    res = IdentityResult("z_invariance", 0.0, Z_TOL)
    for _ in range(int(paths)):
        phi = pk.random_path(rng)
        x = _random_x(phi, rng)
        s = phi.times[1:]
        for c in C_VALUES:
            log_f = lambda u, c=c: 2.0 * c * tr.t_cx(phi, c, x, u)
            left = log_a_quadrature(log_f, phi.times) - c * tr.t_cx(phi, c, x, s)
            right = tr.log_z_functional(phi, c, s)
            dev = np.abs(left - right) / np.maximum(1.0, np.abs(right))
            res.max_dev = max(res.max_dev, float(dev.max()))
            res.checks += s.size
    return res


def tcx_convergence(paths: int = 50, seed: Seed = Seed(42)) -> tuple[IdentityResult, IdentityResult]:
    """Sup-distance between ``T^c_x(phi)`` and ``m_x(phi)`` along ``c = 4, 16, 64, 256``.

    Paths take values in ``[-2, 2]`` and ``x`` satisfies the admissibility
    condition. Returns the worst distance at the largest ``c`` and the worst
    increase between consecutive ``c`` (which must stay below the slack).
    """
    rng = seed.child(8).generator()
    far = IdentityResult("tcx_convergence", 0.0, TCX_TOL)
    mono = IdentityResult("tcx_monotone", 0.0, TCX_SLACK)
    grid = np.linspace(0.0, 1.0, TCX_GRID)
    for _ in range(int(paths)):
        phi = pk.random_path(rng, low=-2.0, high=2.0)
        x = _random_x(phi, rng)
        target = tr.m_x(phi, x)(grid)
        dist = [float(np.max(np.abs(tr.t_cx(phi, c, x, grid) - target))) for c in C_LADDER]
        far.max_dev = max(far.max_dev, dist[-1])
        far.checks += 1
        mono.max_dev = max(mono.max_dev, max(0.0, *np.diff(dist)))
        mono.checks += len(dist) - 1
    return far, mono
