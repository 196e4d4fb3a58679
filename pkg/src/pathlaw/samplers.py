"""Seeded samplers for Brownian and three-dimensional Bessel paths.

All samplers draw on a uniform grid of ``steps`` intervals and return the
grid skeleton, either as one :class:`~pathlaw.pathkit.PLPath` or, for the
``*_rows`` variants, as a ``(count, steps + 1)`` array sharing one grid.

Randomness comes from a :class:`Seed`: a ``(master, stream)`` pair fed to a
Philox counter-based generator, so any batch can be regenerated on its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import pathkit as pk
from .errors import InvalidParams, RejectionBudgetExceeded
from .pathkit import PLPath

__all__ = [
    "Seed",
    "ProcessSpec",
    "PROCESS_KINDS",
    "sample_path",
    "grid",
    "brownian_rows",
    "bridge_rows",
    "bessel3_rows",
    "bessel3_bridge_rows",
    "sample_rows",
    "rows_to_paths",
    "sample_brownian_motion",
    "sample_brownian_bridge",
    "sample_bessel3_process",
    "sample_bessel3_bridge",
    "sample_conditioned",
    "conditioned_rows",
    "ConditionedSample",
    "DEFAULT_MAX_REJECTIONS",
    "segment_extrema",
    "refine_extrema",
    "refine_path",
]

PROCESS_KINDS = ("brownian_motion", "brownian_bridge", "bessel3_process", "bessel3_bridge")
DEFAULT_MAX_REJECTIONS = 1_000_000
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    """A ``(master, stream)`` pair; both are unsigned 64-bit integers."""

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            val = getattr(self, name)
            if not (0 <= int(val) <= _U64):
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *keys: int) -> "Seed":
        """Deterministic sub-stream addressed by ``keys`` under this seed."""
        ss = np.random.SeedSequence(int(self.master), spawn_key=(int(self.stream), *map(int, keys)))
        return Seed(self.master, int(ss.generate_state(1, np.uint64)[0]))


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    a: float = 0.0
    b: float = 0.0
    t: float = 1.0
    steps: int = 256

    def __post_init__(self):
        if self.kind not in PROCESS_KINDS:
            raise InvalidParams(f"unknown process kind {self.kind!r}")
        if not (np.isfinite(self.t) and self.t > 0):
            raise InvalidParams("horizon t must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParams("steps must be a positive integer")
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise InvalidParams("a and b must be finite")
        if self.kind.startswith("bessel3"):
            if self.a < 0:
                raise InvalidParams("Bessel kinds require a >= 0")
            if self.kind == "bessel3_bridge" and self.b < 0:
                raise InvalidParams("Bessel bridges require b >= 0")


def grid(t: float, n: int) -> np.ndarray:
    g = np.linspace(0.0, t, n + 1)
    g[-1] = t
    return g


def _walks(rng: np.random.Generator, t: float, n: int, count: int, dims: int = 1) -> np.ndarray:
    # Brownian skeletons started at 0, shape (dims, count, n + 1)
    inc = rng.standard_normal((dims, count, n)) * np.sqrt(t / n)
    out = np.zeros((dims, count, n + 1))
    np.cumsum(inc, axis=2, out=out[:, :, 1:])
    return out


def _pinned(w: np.ndarray, t: float, n: int) -> np.ndarray:
    frac = grid(t, n) / t
    return w - frac * w[..., -1:]


def brownian_rows(rng, a: float, t: float, n: int, count: int) -> np.ndarray:
    rows = _walks(rng, t, n, count)[0] + a
    rows[:, 0] = a
    return rows


def bridge_rows(rng, a: float, b: float, t: float, n: int, count: int) -> np.ndarray:
    """Brownian bridges from ``a`` to ``b`` via ``W_s - (s/t) W_t`` plus the chord."""
    frac = grid(t, n) / t
    rows = _pinned(_walks(rng, t, n, count)[0], t, n) + a + (b - a) * frac
    rows[:, 0] = a
    rows[:, -1] = b
    return rows


def bessel3_rows(rng, a: float, t: float, n: int, count: int) -> np.ndarray:
    """Modulus of a 3-d Brownian motion started at ``(a, 0, 0)``."""
    w = _walks(rng, t, n, count, dims=3)
    w[0] += a
    rows = np.sqrt(np.sum(w * w, axis=0))
    rows[:, 0] = a
    return rows


def _bessel3_bridge_to_zero(rng, a: float, t: float, n: int, count: int) -> np.ndarray:
    g = _pinned(_walks(rng, t, n, count, dims=3), t, n)
    g[0] += a * (1.0 - grid(t, n) / t)
    rows = np.sqrt(np.sum(g * g, axis=0))
    rows[:, 0] = a
    rows[:, -1] = 0.0
    return rows


def _survival_weight(rows: np.ndarray, dt: float) -> np.ndarray:
    # probability that Brownian bridges between consecutive grid values stay
    # above 0, given the grid values (which must already be >= 0)
    with np.errstate(over="ignore"):
        cross = np.exp(-2.0 * rows[:, :-1] * rows[:, 1:] / dt)
    return np.prod(1.0 - cross, axis=1)


def bessel3_bridge_rows(rng, a: float, b: float, t: float, n: int, count: int,
                        max_rejections: int = DEFAULT_MAX_REJECTIONS) -> tuple[np.ndarray, int]:
    """Three-dimensional Bessel bridges from ``a`` to ``b``; returns ``(rows, attempts)``.

    ``b == 0`` uses the modulus of a 3-d bridge, ``a == 0`` reverses the
    ``(b, 0)`` construction, and ``a, b > 0`` conditions Brownian bridges to
    stay nonnegative by rejection. The rejection step keeps a bridge with the
    exact probability that it does not touch 0 between grid points, so the
    accepted skeletons have the Bessel-bridge finite-dimensional law.
    """
    if b == 0:
        return _bessel3_bridge_to_zero(rng, a, t, n, count), count
    if a == 0:
        rows, used = bessel3_bridge_rows(rng, b, 0.0, t, n, count, max_rejections)
        return rows[:, ::-1].copy(), used
    dt = t / n

    def keep(rows):
        ok = np.all(rows >= 0, axis=1)
        w = np.zeros(rows.shape[0])
        w[ok] = _survival_weight(rows[ok], dt)
        return rng.random(rows.shape[0]) < w

    return _rejection_rows(lambda m: bridge_rows(rng, a, b, t, n, m), keep, count, max_rejections,
                           expected_rate=-np.expm1(-2.0 * a * b / t))


def _rejection_rows(draw: Callable[[int], np.ndarray], keep: Callable[[np.ndarray], np.ndarray],
                    count: int, max_rejections: int, expected_rate: float | None = None):
    accepted = []
    have = 0
    attempts = 0
    rate = expected_rate if expected_rate else 0.5
    while have < count:
        if attempts >= max_rejections:
            raise RejectionBudgetExceeded(
                f"{have} of {count} paths accepted after {attempts} attempts")
        need = count - have
        chunk = int(min(max(need / max(rate, 1e-3) * 1.1 + 16, 64), 20_000, max_rejections - attempts))
        rows = draw(chunk)
        mask = keep(rows)
        take = np.flatnonzero(mask)[:need]
        # attempts count up to and including the last path we keep
        attempts += chunk if take.size < need else int(take[-1]) + 1
        accepted.append(rows[take])
        have += take.size
        if attempts > 0:
            rate = max((have + 1) / (attempts + 2), 1e-4)
    return np.concatenate(accepted, axis=0), attempts


def _extremum_location(alpha, beta, h, rng):
    # Given the extremum sits alpha and beta away from the segment's end
    # values, its position is h*w/(1+w) with w a mixture of an inverse
    # Gaussian and a reciprocal inverse Gaussian (weights beta : alpha).
    alpha = np.maximum(alpha, 0.0)
    beta = np.maximum(beta, 0.0)
    out = np.empty(np.shape(alpha))
    at_start = alpha <= 0.0
    at_end = (beta <= 0.0) & ~at_start
    inner = ~(at_start | at_end)
    out[at_start] = 0.0
    out[at_end] = np.broadcast_to(h, out.shape)[at_end]
    if inner.any():
        a, b = alpha[inner], beta[inner]
        hh = np.broadcast_to(h, out.shape)[inner]
        first = rng.random(a.size) < b / (a + b)
        w = np.empty(a.size)
        w[first] = rng.wald(a[first] / b[first], a[first] ** 2 / hh[first])
        w[~first] = 1.0 / rng.wald(b[~first] / a[~first], b[~first] ** 2 / hh[~first])
        out[inner] = hh * (w / (1.0 + w))
    return out


def segment_extrema(times: np.ndarray, rows: np.ndarray, rng: np.random.Generator, kind: str = "min",
                    positive: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Exact extremum of the path inside every grid segment, given the skeleton.

    Between consecutive grid values a Brownian path is a Brownian bridge, whose
    maximum ``m`` satisfies ``P(M >= m) = exp(-2 (m - v0)(m - v1) / h)``; the
    minimum is symmetric. With ``positive=True`` the bridge is also
    conditioned to stay above 0, which is the law between grid points of a
    three-dimensional Bessel process or bridge (``kind="min"`` only).

    Parameters
    ----------
    times : (n + 1,) or (count, n + 1) array
        Grid times, shared or per row.
    rows : (count, n + 1) array
        Skeleton values.
    kind : {"min", "max"}

    Returns
    -------
    when, value : (count, n) arrays
        Absolute time and value of each segment's extremum.
    """
    if kind not in ("min", "max"):
        raise ValueError(f"kind must be 'min' or 'max', got {kind!r}")
    if positive and kind == "max":
        raise ValueError("the positive-conditioned refinement supports kind='min' only")
    rows = np.asarray(rows, dtype=float)
    times = np.broadcast_to(np.asarray(times, dtype=float), rows.shape)
    t0, h = times[:, :-1], np.diff(times, axis=1)
    v0, v1 = rows[:, :-1], rows[:, 1:]
    if kind == "min":
        v0, v1 = -v0, -v1
    if positive:
        # inversion of the law of the minimum given that it stays above 0
        gap = -np.expm1(-2.0 * np.maximum(v0 * v1, 0.0) / h)
        k = -0.5 * h * np.log1p(-rng.random(v0.shape) * gap)
    else:
        k = 0.5 * h * rng.standard_exponential(v0.shape)
    peak = 0.5 * (v0 + v1 + np.sqrt((v0 - v1) ** 2 + 4.0 * k))
    theta = _extremum_location(peak - v0, peak - v1, h, rng)
    value = -peak if kind == "min" else peak
    if positive:
        value = np.maximum(value, 0.0)
    return t0 + theta, value


def refine_extrema(times: np.ndarray, rows: np.ndarray, rng: np.random.Generator, kind: str = "min",
                   positive: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Interleave each segment's exact extremum into the skeleton.

    The refined piecewise-linear paths carry the true running extremum of the
    continuous process at every grid time, so transforms built from running
    minima (or maxima) are exact there instead of biased by ``O(sqrt(dt))``.

    Returns
    -------
    times, rows : (count, 2 n + 1) arrays
        Per-row knot times (strictly increasing) and values.
    """
    rows = np.asarray(rows, dtype=float)
    grid_t = np.broadcast_to(np.asarray(times, dtype=float), rows.shape)
    when, value = segment_extrema(grid_t, rows, rng, kind, positive)
    # keep the inserted knot strictly inside its segment
    h = np.diff(grid_t, axis=1)
    pad = 1e-9 * h
    when = np.clip(when, grid_t[:, :-1] + pad, grid_t[:, 1:] - pad)
    count, m = rows.shape
    out_t = np.empty((count, 2 * m - 1))
    out_v = np.empty((count, 2 * m - 1))
    out_t[:, 0::2], out_v[:, 0::2] = grid_t, rows
    out_t[:, 1::2], out_v[:, 1::2] = when, value
    return out_t, out_v


def refine_path(path: PLPath, seed: Seed, kind: str = "min", positive: bool = False) -> PLPath:
    """Single-path form of :func:`refine_extrema` for a sampled skeleton."""
    t, v = refine_extrema(path.times, path.values[None, :], seed.generator(), kind, positive)
    return pk.make_path(t[0], v[0])


def sample_rows(spec: ProcessSpec, rng: np.random.Generator, count: int,
                max_rejections: int = DEFAULT_MAX_REJECTIONS) -> np.ndarray:
    """``count`` skeletons of ``spec`` on its uniform grid."""
    k, a, b, t, n = spec.kind, spec.a, spec.b, spec.t, int(spec.steps)
    if k == "brownian_motion":
        return brownian_rows(rng, a, t, n, count)
    if k == "brownian_bridge":
        return bridge_rows(rng, a, b, t, n, count)
    if k == "bessel3_process":
        return bessel3_rows(rng, a, t, n, count)
    return bessel3_bridge_rows(rng, a, b, t, n, count, max_rejections)[0]


def rows_to_paths(times: np.ndarray, rows: np.ndarray) -> list[PLPath]:
    return [PLPath(times.copy(), np.array(r, dtype=float)) for r in rows]


def sample_path(spec: ProcessSpec, seed: Seed, max_rejections: int = DEFAULT_MAX_REJECTIONS) -> PLPath:
    """One path of the process described by ``spec`` on its uniform grid."""
    rows = sample_rows(spec, seed.generator(), 1, max_rejections)
    return pk.make_path(grid(spec.t, int(spec.steps)), rows[0])


def sample_brownian_motion(a: float, t: float, n: int, seed: Seed) -> PLPath:
    """Brownian motion from ``a``; increments are N(0, t/n)."""
    return sample_path(ProcessSpec("brownian_motion", a=a, t=t, steps=n), seed)


def sample_brownian_bridge(a: float, b: float, t: float, n: int, seed: Seed) -> PLPath:
    return sample_path(ProcessSpec("brownian_bridge", a=a, b=b, t=t, steps=n), seed)


def sample_bessel3_process(a: float, t: float, n: int, seed: Seed) -> PLPath:
    return sample_path(ProcessSpec("bessel3_process", a=a, t=t, steps=n), seed)


def sample_bessel3_bridge(a: float, b: float, t: float, n: int, seed: Seed,
                          max_rejections: int = DEFAULT_MAX_REJECTIONS) -> PLPath:
    return sample_path(ProcessSpec("bessel3_bridge", a=a, b=b, t=t, steps=n), seed, max_rejections)


class ConditionedSample(NamedTuple):
    path: PLPath
    attempts: int


def sample_conditioned(base: ProcessSpec, predicate: Callable[[PLPath], bool], seed: Seed,
                       max_rejections: int = DEFAULT_MAX_REJECTIONS) -> ConditionedSample:
    """First path of ``base`` satisfying ``predicate``, with the attempts it took.

    Raises
    ------
    RejectionBudgetExceeded
        No path passed within ``max_rejections`` attempts.
    """
    rng = seed.generator()
    times = grid(base.t, int(base.steps))
    for attempt in range(1, max_rejections + 1):
        row = sample_rows(base, rng, 1, max_rejections)[0]
        path = PLPath(times.copy(), row)
        if predicate(path):
            return ConditionedSample(path, attempt)
    raise RejectionBudgetExceeded(f"no path accepted in {max_rejections} attempts")


def conditioned_rows(spec: ProcessSpec, keep: Callable[[np.ndarray], np.ndarray], count: int,
                     rng: np.random.Generator,
                     max_rejections: int = DEFAULT_MAX_REJECTIONS) -> tuple[np.ndarray, int]:
    """Batch form of :func:`sample_conditioned`.

    ``keep`` maps a ``(m, steps + 1)`` array of skeletons to a boolean mask.
    Returns the accepted rows and the number of attempts used.
    """
    def draw(m):
        return sample_rows(spec, rng, m, max_rejections)

    return _rejection_rows(draw, keep, count, max_rejections)
