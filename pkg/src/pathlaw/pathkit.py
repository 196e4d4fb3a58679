"""Exact algebra of continuous piecewise-linear paths on ``[0, t]``.

Every operation returns a new :class:`PLPath` whose knots include all the
corners of the result (running-extremum crossings, zero crossings of absolute
values, intersections of minima), so compositions stay exact up to float
roundoff instead of accumulating grid error.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyPath,
    HorizonMismatch,
    LengthMismatch,
    NonMonotoneTimes,
    OutOfDomain,
)

__all__ = [
    "PLPath",
    "make_path",
    "constant",
    "evaluate",
    "reverse",
    "envelope",
    "combine",
    "abs_path",
    "pointwise_min",
    "pointwise_max",
    "max_over",
    "min_over",
    "integral_over",
    "sup_distance",
    "write_csv",
    "read_csv",
    "ENVELOPE_KINDS",
]

PRUNE_TOL = 1e-12
EPS = float(np.finfo(float).eps)
MERGE_RTOL = 1e-14
HORIZON_RTOL = 1e-12
ENVELOPE_KINDS = ("prefix_max", "prefix_min", "suffix_max", "suffix_min")


@dataclass(frozen=True, eq=False)
class PLPath:
    """Continuous piecewise-linear path given by its knots.

    ``times`` is strictly increasing from 0 to the horizon; ``values`` holds
    the path value at each knot. Both arrays are read-only.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> float:
        return float(self.values[0])

    @property
    def end(self) -> float:
        return float(self.values[-1])

    def __len__(self):
        return self.times.size

    def __call__(self, s):
        return evaluate(self, s)

    def __repr__(self):
        return f"PLPath(knots={self.times.size}, horizon={self.horizon:g})"

    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))

    # arithmetic with scalars and other paths, all exact on the union knot set
    def __neg__(self):
        return _raw(self.times.copy(), -self.values)

    def __add__(self, other):
        if isinstance(other, PLPath):
            return combine([self, other], [1.0, 1.0])
        return _raw(self.times.copy(), self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PLPath):
            return combine([self, other], [1.0, -1.0])
        return _raw(self.times.copy(), self.values - float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        if isinstance(k, PLPath):
            return NotImplemented
        return _raw(self.times.copy(), self.values * float(k))

    __rmul__ = __mul__


def _raw(times, values) -> PLPath:
    return PLPath(np.asarray(times, dtype=float), np.asarray(values, dtype=float))


def make_path(times: Sequence[float], values: Sequence[float]) -> PLPath:
    """Validate knots and store them as a path without any pruning.

    Raises
    ------
    EmptyPath
        Fewer than two knots.
    LengthMismatch
        ``times`` and ``values`` differ in length.
    NonMonotoneTimes
        Times not strictly increasing or not starting at 0.
    """
    t = np.array(times, dtype=float).ravel()
    v = np.array(values, dtype=float).ravel()
    if t.size != v.size:
        raise LengthMismatch(f"{t.size} times but {v.size} values")
    if t.size < 2:
        raise EmptyPath("a path needs at least two knots")
    if t[0] != 0.0:
        raise NonMonotoneTimes(f"first knot time must be 0, got {t[0]!r}")
    if not np.all(np.diff(t) > 0):
        raise NonMonotoneTimes("knot times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise ValueError("knots must be finite")
    return PLPath(t, v)


def constant(value: float, horizon: float) -> PLPath:
    return make_path([0.0, horizon], [value, value])


def evaluate(path: PLPath, s):
    """Linear interpolation of ``path`` at ``s`` (scalar or array)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > path.times[-1]) or np.any(np.isnan(s_arr)):
        raise OutOfDomain(f"time outside [0, {path.horizon}]")
    out = np.interp(s_arr, path.times, path.values)
    return float(out) if out.ndim == 0 else out


def _normalize(t: np.ndarray, v: np.ndarray) -> PLPath:
    """Merge (near-)duplicate times and drop collinear interior knots.

    Removal never changes the function by more than ``PRUNE_TOL / 2`` (or a
    few ulps of the value scale for huge values): every dropped knot is
    re-checked against the pruned path and restored if the chord drifted
    away from it.
    """
    tol = max(0.5 * PRUNE_TOL, 4.0 * EPS * float(np.abs(v).max()))
    dt = t[1:] - t[:-1]
    close = dt <= MERGE_RTOL * t[-1]
    if close.any():
        # knots a few ulps apart with equal values are roundoff twins of one corner
        drop = close & ((dt <= 0) | (np.abs(v[1:] - v[:-1]) <= tol))
        if drop.any():
            # the horizon knot must survive a duplicate at the end
            last = t[-1]
            keep = np.concatenate(([True], ~drop))
            t, v = t[keep], v[keep]
            t[-1] = last
            dt = t[1:] - t[:-1]
    if t.size <= 2:
        return _raw(t, v)
    pred = v[:-2] + (v[2:] - v[:-2]) * (dt[:-1] / (t[2:] - t[:-2]))
    inner = np.abs(v[1:-1] - pred) > tol
    if inner.all():
        return _raw(t, v)
    mask = np.concatenate(([True], inner, [True]))
    while True:
        dropped = np.flatnonzero(~mask)
        drift = np.abs(np.interp(t[dropped], t[mask], v[mask]) - v[dropped])
        bad = drift > tol
        if not bad.any():
            break
        mask[dropped[bad]] = True
    return _raw(t[mask], v[mask])


def reverse(path: PLPath) -> PLPath:
    """Time reversal ``s -> path(t - s)``."""
    h = path.times[-1]
    t = h - path.times[::-1]
    t[0] = 0.0
    t[-1] = h
    return _raw(t, path.values[::-1].copy())


def _splice(t, v, idx, tau, val):
    # insert (tau[k], val[k]) right after knot idx[k]; idx is sorted
    pos = idx + np.arange(1, idx.size + 1)
    n = t.size + idx.size
    old = np.ones(n, dtype=bool)
    old[pos] = False
    t2, v2 = np.empty(n), np.empty(n)
    t2[old], v2[old] = t, v
    t2[pos], v2[pos] = tau, val
    return t2, v2


def _running_max_arrays(t: np.ndarray, v: np.ndarray, suffix: bool):
    # computed on the original time array: reversing times would perturb
    # crossing knots by roundoff, which steep segments turn into value errors
    if suffix:
        m = np.maximum.accumulate(v[::-1])[::-1]
        level = m[1:]
        idx = np.flatnonzero((v[:-1] > level) & (v[1:] < level))
        frac = (v[idx] - level[idx]) / (v[idx] - v[idx + 1])
    else:
        m = np.maximum.accumulate(v)
        level = m[:-1]
        idx = np.flatnonzero((v[:-1] < level) & (v[1:] > level))
        frac = (level[idx] - v[idx]) / (v[idx + 1] - v[idx])
    if idx.size:
        tau = t[idx] + frac * (t[idx + 1] - t[idx])
        tau = np.clip(tau, t[idx], t[idx + 1])
        t, m = _splice(t, m, idx, tau, level[idx])
    return t, m


def _envelope_arrays(t: np.ndarray, v: np.ndarray, kind: str):
    """Unpruned knots and values of a running extremum; knots include ``t``."""
    suffix = kind.startswith("suffix")
    if kind.endswith("max"):
        return _running_max_arrays(t, v, suffix)
    s, m = _running_max_arrays(t, -v, suffix)
    return s, -m


def _insert_zeros(t: np.ndarray, w: np.ndarray):
    """Add a knot at every sign change of the PL function ``(t, w)``."""
    idx = np.flatnonzero(w[:-1] * w[1:] < 0)
    if not idx.size:
        return t, w
    frac = w[idx] / (w[idx] - w[idx + 1])
    tau = np.clip(t[idx] + frac * (t[idx + 1] - t[idx]), t[idx], t[idx + 1])
    return _splice(t, w, idx, tau, 0.0)


def _running_max(t: np.ndarray, v: np.ndarray, suffix: bool) -> PLPath:
    return _normalize(*_running_max_arrays(t, v, suffix))


def envelope(path: PLPath, kind: str) -> PLPath:
    """Running extremum of ``path`` as an exact path.

    ``kind`` is one of ``prefix_max``, ``prefix_min`` (extremum over
    ``[0, s]``) or ``suffix_max``, ``suffix_min`` (over ``[s, t]``). A knot is
    inserted wherever a segment crosses the current extremum level.
    """
    if kind not in ENVELOPE_KINDS:
        raise ValueError(f"unknown envelope kind {kind!r}")
    suffix = kind.startswith("suffix")
    if kind.endswith("max"):
        return _running_max(path.times, path.values, suffix)
    out = _running_max(path.times, -path.values, suffix)
    return _raw(out.times, -out.values)


def _common_horizon(paths: Sequence[PLPath]) -> float:
    h = paths[0].times[-1]
    for p in paths[1:]:
        if abs(p.times[-1] - h) > HORIZON_RTOL * max(1.0, abs(h)):
            raise HorizonMismatch(f"horizons {h!r} and {p.times[-1]!r} differ")
    return float(h)


def combine(paths: Sequence[PLPath], coefficients: Sequence[float], constant: float = 0.0) -> PLPath:
    """Pointwise ``constant + sum(c_k * path_k)`` on the union knot set."""
    paths = list(paths)
    coefficients = [float(c) for c in coefficients]
    if len(paths) != len(coefficients):
        raise ValueError("one coefficient per path is required")
    if not paths:
        raise ValueError("combine needs at least one path")
    h = _common_horizon(paths)
    t = paths[0].times
    if any(p.times is not t and not np.array_equal(p.times, t) for p in paths[1:]):
        t = np.unique(np.concatenate([p.times for p in paths]))
        t = t[t < h]
        t = np.append(t, h)
    v = np.full(t.size, float(constant))
    for p, c in zip(paths, coefficients):
        if c != 0.0:
            v += c * np.interp(t, p.times, p.values)
    return _normalize(t, v)


def abs_path(path: PLPath) -> PLPath:
    """Pointwise absolute value with a knot at every zero crossing."""
    t, v = _insert_zeros(path.times, path.values)
    return _normalize(t.copy(), np.abs(v))


def pointwise_min(p: PLPath, q: PLPath) -> PLPath:
    """Exact ``min(p, q)`` through ``(p + q - |p - q|) / 2``."""
    gap = abs_path(combine([p, q], [1.0, -1.0]))
    return combine([p, q, gap], [0.5, 0.5, -0.5])


def pointwise_max(p: PLPath, q: PLPath) -> PLPath:
    gap = abs_path(combine([p, q], [1.0, -1.0]))
    return combine([p, q, gap], [0.5, 0.5, 0.5])


def _window(path: PLPath, u: float, v: float):
    if not (0.0 <= u <= v <= path.times[-1]):
        raise OutOfDomain(f"window [{u}, {v}] not inside [0, {path.horizon}]")
    inside = (path.times > u) & (path.times < v)
    t = np.concatenate(([u], path.times[inside], [v]))
    return t, np.interp(t, path.times, path.values)


def max_over(path: PLPath, u: float, v: float) -> float:
    """Exact maximum over ``[u, v]`` (attained at a knot or window end)."""
    return float(_window(path, u, v)[1].max())


def min_over(path: PLPath, u: float, v: float) -> float:
    return float(_window(path, u, v)[1].min())


def integral_over(path: PLPath, u: float, v: float) -> float:
    """Exact integral over ``[u, v]``; trapezoid is exact for linear pieces."""
    t, x = _window(path, u, v)
    return float(np.sum(0.5 * (x[1:] + x[:-1]) * np.diff(t)))


def sup_distance(p: PLPath, q: PLPath) -> float:
    """Sup-norm distance; exact because both paths are linear between union knots."""
    h = _common_horizon([p, q])
    t = np.unique(np.concatenate([p.times, q.times]))
    t = t[t <= h]
    return float(np.max(np.abs(np.interp(t, p.times, p.values) - np.interp(t, q.times, q.values))))


def write_csv(path: PLPath, target) -> None:
    """Dump knots as ``s,value`` rows with 17 significant digits.

    ``target`` is a filename or a text stream.
    """
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="") as fh:
            write_csv(path, fh)
        return
    target.write("s,value\n")
    for s, x in zip(path.times, path.values):
        target.write(f"{s:.17g},{x:.17g}\n")


def read_csv(source) -> PLPath:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_csv(fh)
    rows = list(csv.reader(source))
    if not rows or [c.strip() for c in rows[0]] != ["s", "value"]:
        raise ValueError("expected header 's,value'")
    body = [r for r in rows[1:] if r]
    return make_path([float(r[0]) for r in body], [float(r[1]) for r in body])


def to_csv_string(path: PLPath) -> str:
    buf = io.StringIO()
    write_csv(path, buf)
    return buf.getvalue()


def random_path(rng: np.random.Generator, n_knots: int | Iterable[int] = (2, 64),
                low: float = -5.0, high: float = 5.0, horizon: float = 1.0) -> PLPath:
    """Random path with uniform knot times and uniform values.

    ``n_knots`` is either a fixed count or an inclusive ``(min, max)`` range.
    """
    if isinstance(n_knots, int):
        k = n_knots
    else:
        lo, hi = n_knots
        k = int(rng.integers(lo, hi + 1))
    inner = np.sort(rng.uniform(0.0, horizon, size=max(k - 2, 0)))
    t = np.concatenate(([0.0], inner, [horizon]))
    # uniform draws can collide in principle; keep times strictly increasing
    t = np.maximum.accumulate(t)
    ok = np.concatenate(([True], np.diff(t) > 0))
    t = t[ok]
    v = rng.uniform(low, high, size=t.size)
    if t[-1] != horizon:
        t[-1] = horizon
    return make_path(t, v)
