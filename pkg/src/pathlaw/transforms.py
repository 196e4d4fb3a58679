"""Path transformations built from running extrema, as exact PL-to-PL maps.

Notation: for a path ``phi`` on ``[0, t]``,

* ``pitman_max(phi) = 2 * max_{[0,s]} phi - phi`` and
  ``pitman_min(phi) = phi - 2 * min_{[0,s]} phi``;
* ``m_x`` retargets a path so that it ends at ``x`` while keeping its Pitman
  transform (whenever ``|x - phi(0)| <= pitman_max(phi)(t) - phi(0)``);
* ``n_transform`` swaps the two endpoints of a path and is an involution;
* ``q_transform(phi) = pitman_min(phi) + phi(0)``.

``t_cx`` is the smooth (soft-max) approximation of ``m_x`` with scale ``c``;
it is not piecewise linear, so it is evaluated pointwise in log space.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import pathkit as pk
from .errors import EmptyInput, NumericalRange, OutOfDomain
from .pathkit import PLPath

__all__ = [
    "pitman_max",
    "pitman_min",
    "m_x",
    "m_x_direct",
    "mbar_x",
    "mbar_x_direct",
    "n_transform",
    "n_transform_via_mbar",
    "q_transform",
    "s_transform",
    "iota",
    "log_sum_exp",
    "log_a_functional",
    "log_z_functional",
    "t_cx",
]


# The hot transforms first collect every knot the result can need (the
# input knots, envelope crossings, then sign changes of the terms inside
# absolute values), evaluate on that set by interpolation and prune once.
# Between consecutive collected knots every piece is linear, so this is exact.


def pitman_max(phi: PLPath) -> PLPath:
    t, m = pk._envelope_arrays(phi.times, phi.values, "prefix_max")
    return pk._normalize(t, 2.0 * m - np.interp(t, phi.times, phi.values))


def pitman_min(phi: PLPath) -> PLPath:
    t, m = pk._envelope_arrays(phi.times, phi.values, "prefix_min")
    return pk._normalize(t, np.interp(t, phi.times, phi.values) - 2.0 * m)


def m_x(phi: PLPath, x: float) -> PLPath:
    """Endpoint-retargeting transform, computed through the Pitman path.

    Uses ``-P(phi) + min(2 * min_{[s,t]} P(phi), P(phi)(t) + x)`` with
    ``P = pitman_max``, which composes exactly in the PL algebra.
    """
    p = pitman_max(phi)
    t1, tail = pk._envelope_arrays(p.times, p.values, "suffix_min")
    cap = p.end + float(x)
    t2, w = pk._insert_zeros(t1, 2.0 * tail - cap)
    return pk._normalize(t2, cap + np.minimum(w, 0.0) - np.interp(t2, p.times, p.values))


def _running_extremum_bruteforce(phi: PLPath, s: np.ndarray, which: str) -> np.ndarray:
    # extremum over [0, s] or [s, t] from knot values plus the value at s
    t, v = phi.times, phi.values
    at_s = np.interp(s, t, v)
    mask = t[None, :] <= s[:, None] if which.startswith("prefix") else t[None, :] >= s[:, None]
    if which.endswith("max"):
        pool = np.where(mask, v[None, :], -np.inf).max(axis=1)
        return np.maximum(pool, at_s)
    pool = np.where(mask, v[None, :], np.inf).min(axis=1)
    return np.minimum(pool, at_s)


def m_x_direct(phi: PLPath, x: float, s) -> np.ndarray:
    """Evaluate the defining formula of ``m_x`` pointwise at times ``s``.

    Extrema are taken by brute force over knots, independent of the envelope
    code; this is the cross-check oracle for :func:`m_x`.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    phi_s = pk.evaluate(phi, s)
    half = (phi.end - float(x)) / 2.0
    pre = _running_extremum_bruteforce(phi, s, "prefix_max")
    suf = _running_extremum_bruteforce(phi, s, "suffix_max")
    return phi_s - half - np.abs(half + pre - suf) + np.abs(pre - suf)


def mbar_x(phi: PLPath, x: float) -> PLPath:
    return -m_x(-phi, -float(x))


def mbar_x_direct(phi: PLPath, x: float, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    phi_s = pk.evaluate(phi, s)
    half = (phi.end - float(x)) / 2.0
    pre = _running_extremum_bruteforce(phi, s, "prefix_min")
    suf = _running_extremum_bruteforce(phi, s, "suffix_min")
    return phi_s - half + np.abs(half + pre - suf) - np.abs(pre - suf)


def _gap_transform(phi: PLPath, shift: float, tail_inf: float | None = None) -> PLPath:
    # phi + |shift + g| - |g| with g = prefix min - suffix min (capped by tail_inf)
    t, v = phi.times, phi.values
    ta, lo = pk._envelope_arrays(t, v, "prefix_min")
    tb, hi = pk._envelope_arrays(t, v, "suffix_min")
    if tail_inf is not None:
        tb, w = pk._insert_zeros(tb, hi - float(tail_inf))
        hi = float(tail_inf) + np.minimum(w, 0.0)
    grid = ta if ta.size == t.size and tb.size == t.size else np.union1d(ta, tb)
    g = np.interp(grid, ta, lo) - np.interp(grid, tb, hi)
    k1, _ = pk._insert_zeros(grid, g + shift)
    k2, _ = pk._insert_zeros(k1, np.interp(k1, grid, g))
    gk = np.interp(k2, grid, g)
    return pk._normalize(k2, np.interp(k2, t, v) + np.abs(gk + shift) - np.abs(gk))


def n_transform(phi: PLPath) -> PLPath:
    """Endpoint-swapping involution.

    ``N(phi)(s) = phi(s) + |phi(t) - phi(0) + g(s)| - |g(s)|`` where
    ``g(s) = min_{[0,s]} phi - min_{[s,t]} phi``.
    """
    return _gap_transform(phi, phi.end - phi.start)


def n_transform_via_mbar(phi: PLPath) -> PLPath:
    """Same map as :func:`n_transform`, written as ``Mbar_{phi0-phit}(phi - phi0) + phi(t)``."""
    return mbar_x(phi - phi.start, phi.start - phi.end) + phi.end


def q_transform(phi: PLPath) -> PLPath:
    return pitman_min(phi) + phi.start


def s_transform(phi: PLPath, tail_inf: float | None = None) -> PLPath:
    """``S(phi)(s) = phi(s) - phi(0) + |-phi(0) + g(s)| - |g(s)|``.

    Here ``g(s) = min_{[0,s]} phi - inf_{u >= s} phi``. The infimum over the
    unbounded tail is replaced by the minimum over ``[s, T]``; when the
    infimum of the path beyond ``T`` is known it can be passed as
    ``tail_inf`` and is folded into the suffix minimum.
    """
    return _gap_transform(phi, -phi.start, tail_inf) - phi.start


def iota(phi: PLPath) -> PLPath:
    """Time inversion onto ``[0, 1]``: knot ``(u, v)`` goes to ``(u/(1+u), v/(1+u))``.

    The image of each segment is again a segment, so the result is exact on
    ``[0, T/(1+T)]``; a final segment to ``(1, 0)`` closes the path.
    """
    u, v = phi.times, phi.values
    s = u / (1.0 + u)
    w = v / (1.0 + u)
    if s[-1] < 1.0:
        s = np.append(s, 1.0)
        w = np.append(w, 0.0)
    return pk._normalize(s, w)


def log_sum_exp(terms: Sequence[float]) -> float:
    """``log(sum(exp(terms)))`` with a max shift."""
    a = np.asarray(terms, dtype=float).ravel()
    if a.size == 0:
        raise EmptyInput("log_sum_exp of an empty sequence")
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))


def _check_scale(phi: PLPath, c: float) -> None:
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    # every exponential stays inside a log, so only overflow of c*phi itself matters
    if not np.isfinite(2.0 * c * float(np.max(np.abs(phi.values)))):
        raise NumericalRange("c * phi overflows")


def _log_a_split(phi: PLPath, c: float, s: np.ndarray):
    """Log of the A-integral of ``c * phi`` over ``[0, s]`` and over ``[s, t]``."""
    t, w = phi.times, c * phi.values
    seg = _segment_log_integrals_pairs(t[:-1], t[1:], w[:-1], w[1:])
    head = np.concatenate(([-np.inf], np.logaddexp.accumulate(seg)))
    tail = np.concatenate((np.logaddexp.accumulate(seg[::-1])[::-1], [-np.inf]))
    k = np.clip(np.searchsorted(t, s, side="right") - 1, 0, t.size - 2)
    ws = np.interp(s, t, w)
    with np.errstate(divide="ignore"):
        left_piece = _segment_log_integrals_pairs(t[k], s, w[k], ws)
        right_piece = _segment_log_integrals_pairs(s, t[k + 1], ws, w[k + 1])
    log_head = np.logaddexp(head[k], left_piece)
    log_tail = np.logaddexp(tail[k + 1], right_piece)
    return log_head, log_tail


def _segment_log_integrals_pairs(t0, t1, w0, w1):
    # log of int exp(2 w(u)) du over [t0, t1] with w linear from w0 to w1
    h = np.asarray(t1 - t0, dtype=float)
    hi = np.maximum(w0, w1)
    x = 2.0 * np.abs(w1 - w0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = np.where(x > 0, np.log(-np.expm1(-x) / np.where(x > 0, x, 1.0)), 0.0)
        return np.where(h > 0, np.log(np.where(h > 0, h, 1.0)) + 2.0 * hi + shape, -np.inf)


def _times(phi: PLPath, s, allow_zero: bool):
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    lo_ok = arr >= 0 if allow_zero else arr > 0
    if not (np.all(lo_ok) and np.all(arr <= phi.times[-1])):
        raise OutOfDomain(f"time outside {'[' if allow_zero else '('}0, {phi.horizon}]")
    return arr


def log_a_functional(phi: PLPath, c: float, s):
    """``log A_s(c * phi)`` with ``A_s(psi) = int_0^s exp(2 psi_u) du``.

    Each linear piece integrates in closed form; pieces are accumulated with
    ``logaddexp`` so nothing overflows.
    """
    _check_scale(phi, c)
    arr = _times(phi, s, allow_zero=False)
    out, _ = _log_a_split(phi, float(c), arr)
    return float(out[0]) if np.ndim(s) == 0 else out


def log_z_functional(phi: PLPath, c: float, s):
    """``log Z_s(c * phi) = log A_s(c * phi) - c * phi(s)``."""
    arr = _times(phi, s, allow_zero=False)
    out = np.atleast_1d(log_a_functional(phi, c, arr)) - float(c) * np.interp(arr, phi.times, phi.values)
    return float(out[0]) if np.ndim(s) == 0 else out


def t_cx(phi: PLPath, c: float, x: float, eval_times) -> np.ndarray:
    """Soft version of ``m_x`` evaluated at ``eval_times``.

    ``T(s) = phi(s) - (1/c) log(1 + (A_s/A_t)(exp(c phi(t) - c x) - 1))``
    with ``A`` the exponential functional of ``c * phi``. The bracket is
    rewritten as ``(exp(c phi_t - c x) A_s + int_s^t exp(2 c phi)) / A_t`` and
    evaluated as a log-sum-exp of the two pieces.
    """
    _check_scale(phi, c)
    c = float(c)
    s = _times(phi, eval_times, allow_zero=True)
    log_head, log_tail = _log_a_split(phi, c, s)
    log_total = _log_a_split(phi, c, np.array([phi.times[-1]]))[0][0]
    shift = c * (phi.end - float(x))
    log_bracket = np.logaddexp(log_head + shift, log_tail) - log_total
    out = np.interp(s, phi.times, phi.values) - log_bracket / c
    if not np.all(np.isfinite(out)):
        raise NumericalRange("t_cx produced a non-finite value")
    return out
