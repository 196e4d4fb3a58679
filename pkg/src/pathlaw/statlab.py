"""Two-sample tests and closed-form reference probabilities."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.spatial.distance import pdist, squareform

from .errors import DomainError, ShapeMismatch, TooFewSamples

__all__ = [
    "SampleMatrix",
    "TestVerdict",
    "ks_statistic",
    "ks_two_sample",
    "energy_distance",
    "energy_perm_test",
    "bridge_max_tail",
    "bridge_min_below",
    "rate_vs_reference",
]


@dataclass
class SampleMatrix:
    """Panel evaluations: one row per replication, one column per functional."""

    data: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ShapeMismatch("sample matrix must be two-dimensional")
        if self.data.shape[0] < 2:
            raise TooFewSamples("a sample matrix needs at least two rows")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("sample matrix entries must be finite")
        if not self.labels:
            self.labels = [f"f{j}" for j in range(self.data.shape[1])]
        if len(self.labels) != self.data.shape[1]:
            raise ShapeMismatch("one label per column is required")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.data[:, self.labels.index(label)]


@dataclass
class TestVerdict:
    """Outcome of one check; ``pass_`` is serialized as ``pass``."""

    __test__ = False  # not a pytest class

    name: str
    statistic: float
    p_value: Optional[float]
    threshold: float
    pass_: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return d


def ks_statistic(xs, ys) -> float:
    """Sup-distance between the two empirical CDFs (ties handled exactly)."""
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ks_two_sample(xs, ys, threshold: float = 0.02, name: str = "ks") -> TestVerdict:
    """Two-sample Kolmogorov-Smirnov distance with asymptotic p-value.

    Passes when the distance is at most ``threshold``. The p-value uses the
    Kolmogorov limit law at effective size ``n m / (n + m)``.
    """
    n, m = np.size(xs), np.size(ys)
    if n < 2 or m < 2:
        raise TooFewSamples("each sample needs at least two values")
    d = ks_statistic(xs, ys)
    en = n * m / (n + m)
    p = float(stats.kstwobign.sf(math.sqrt(en) * d))
    return TestVerdict(name, d, min(max(p, 0.0), 1.0), float(threshold), d <= threshold)


def _standardize(x: np.ndarray, y: np.ndarray):
    pooled = np.vstack([x, y])
    sd = pooled.std(axis=0)
    live = sd > 1e-12 * np.maximum(1.0, np.abs(pooled.mean(axis=0)))
    mu = pooled.mean(axis=0)
    return (x[:, live] - mu[live]) / sd[live], (y[:, live] - mu[live]) / sd[live]


def _pairwise(z: np.ndarray) -> np.ndarray:
    # direct differences: the Gram-matrix shortcut loses all precision near 0
    return squareform(pdist(z))


def _energy_from_labels(d: np.ndarray, z: np.ndarray, n1: int) -> np.ndarray:
    # z: (n, k) 0/1 indicators of sample one, one column per labelling
    n2 = d.shape[0] - n1
    dz = d @ z
    row_tot = d.sum(axis=1)
    s11 = np.einsum("ik,ik->k", z, dz)
    s12 = np.einsum("ik,i->k", z, row_tot) - s11
    s22 = d.sum() - 2.0 * s12 - s11
    return 2.0 * s12 / (n1 * n2) - s11 / n1**2 - s22 / n2**2


def energy_distance(x, y, standardize: bool = True) -> float:
    """V-statistic energy distance ``2E|X-Y| - E|X-X'| - E|Y-Y'|``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    if x.shape[1] != y.shape[1]:
        raise ShapeMismatch("both clouds need the same number of columns")
    if standardize:
        x, y = _standardize(x, y)
    if x.shape[1] == 0:
        return 0.0
    d = _pairwise(np.vstack([x, y]))
    z = np.zeros((d.shape[0], 1))
    z[: x.shape[0]] = 1.0
    return float(max(_energy_from_labels(d, z, x.shape[0])[0], 0.0))


def energy_perm_test(X, Y, n_perm: int = 500, seed=None, alpha: float = 0.01,
                     max_rows: Optional[int] = None, name: str = "energy") -> TestVerdict:
    """Energy-distance permutation test on two point clouds.

    Columns are standardized by the pooled standard deviation and constant
    columns are dropped. ``max_rows`` keeps only the first rows of each side
    so the pairwise distance matrix fits in memory. The p-value is
    ``(1 + #{permuted >= observed}) / (n_perm + 1)`` and the test passes when
    it is at least ``alpha``.
    """
    x = X.data if isinstance(X, SampleMatrix) else np.asarray(X, dtype=float)
    y = Y.data if isinstance(Y, SampleMatrix) else np.asarray(Y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ShapeMismatch("energy test needs two matrices with equal column counts")
    if x.shape[0] < 10 or y.shape[0] < 10:
        raise TooFewSamples("energy test needs at least 10 rows per side")
    if n_perm < 100:
        raise ValueError("n_perm must be at least 100")
    if max_rows is not None:
        x, y = x[:max_rows], y[:max_rows]
    x, y = _standardize(x, y)
    if x.shape[1] == 0:
        return TestVerdict(name, 0.0, 1.0, alpha, True)
    n1 = x.shape[0]
    d = _pairwise(np.vstack([x, y]))
    z0 = np.zeros((d.shape[0], 1))
    z0[:n1] = 1.0
    observed = float(_energy_from_labels(d, z0, n1)[0])

    rng = seed.generator() if hasattr(seed, "generator") else np.random.default_rng(seed)
    exceed = 0
    done = 0
    tol = 1e-12 * max(1.0, abs(observed))
    while done < n_perm:
        k = min(100, n_perm - done)
        z = np.zeros((d.shape[0], k))
        for j in range(k):
            z[rng.permutation(d.shape[0])[:n1], j] = 1.0
        exceed += int(np.sum(_energy_from_labels(d, z, n1) >= observed - tol))
        done += k
    p = (1 + exceed) / (n_perm + 1)
    return TestVerdict(name, max(observed, 0.0), p, alpha, p >= alpha)


def bridge_max_tail(y: float, x: float, t: float) -> float:
    """Probability that a Brownian bridge from 0 to ``y`` on ``[0, t]`` reaches ``(|x| + y)/2``.

    Equals ``exp(-(2/t) * ((|x|+y)/2) * ((|x|-y)/2)) = exp(-(x^2 - y^2)/(2t))``,
    which is also the probability that its Pitman transform ends above ``|x|``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if abs(x) < abs(y):
        raise DomainError("need |x| >= |y|; otherwise the event is certain")
    level = (abs(x) + y) / 2.0
    excess = (abs(x) - y) / 2.0
    return math.exp(-(2.0 / t) * level * excess)


def bridge_min_below(a: float, b: float, level: float, t: float, positive: bool = False) -> float:
    """Probability that a Brownian bridge from ``a`` to ``b`` on ``[0, t]`` dips to ``level``.

    Equals ``exp(-2 (a - level)(b - level) / t)`` for ``level <= min(a, b)``.
    With ``positive=True`` the bridge is conditioned to stay above 0 (a
    three-dimensional Bessel bridge), which needs ``0 < level`` and
    ``a, b > 0``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if level > min(a, b):
        return 1.0
    hit = math.exp(-2.0 * (a - level) * (b - level) / t)
    if not positive:
        return hit
    if not (level > 0 and a > 0 and b > 0):
        raise DomainError("positive bridges need 0 < level and a, b > 0")
    floor = math.exp(-2.0 * a * b / t)
    return (hit - floor) / (1.0 - floor)


def rate_vs_reference(successes: int, trials: int, reference: float, n_se: float = 3.0,
                      name: str = "acceptance_rate") -> TestVerdict:
    """Binomial check that ``successes / trials`` is within ``n_se`` standard errors of ``reference``."""
    if trials < 100 or not (0 <= successes <= trials) or not (0.0 <= reference <= 1.0):
        raise DomainError("need trials >= 100, 0 <= successes <= trials, reference in [0, 1]")
    se = math.sqrt(reference * (1.0 - reference) / trials)
    dev = abs(successes / trials - reference)
    return TestVerdict(name, dev, None, n_se * se, dev <= n_se * se)
