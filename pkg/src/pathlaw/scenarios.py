"""Runnable verification plans for the identities in law.

A scenario samples two sides from disjoint random substreams, maps every
replication to a tuple of paths, reduces each tuple to a row of panel
functionals and compares the two resulting :class:`SampleMatrix` objects
with per-functional KS distances and one joint energy permutation test.

Sampled skeletons are refined with the exact extremum of every grid segment
(see :func:`pathlaw.samplers.refine_extrema`), which makes the running
minima or maxima that drive the transforms exact at grid times. Conditioning
events are decided on the refined paths, so they are the continuous-time
events. Both sides of every identity use the same refinement.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import pathkit as pk
from . import samplers as sm
from . import statlab as st
from . import transforms as tr
from .errors import InvalidParams, InvalidSelector, UnknownScenario
from .pathkit import PLPath
from .samplers import DEFAULT_MAX_REJECTIONS, Seed

__all__ = [
    "PanelItem",
    "FunctionalPanel",
    "TestConfig",
    "ScenarioSpec",
    "VerdictReport",
    "evaluate_panel",
    "ratio_tilt",
    "run_scenario",
    "scenario_ids",
    "describe",
    "default_params",
    "thm2_acceptance_check",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
PANEL_KINDS = ("eval_at", "max_over", "min_over", "endpoint", "integral_over")
BATCH_ROWS = 1000


# --------------------------------------------------------------------------
# functional panels


@dataclass(frozen=True)
class PanelItem:
    """One path functional applied to one component of a path tuple."""

    kind: str
    component: int = 0
    u: Optional[float] = None
    v: Optional[float] = None

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel item kind {self.kind!r}")
        if self.kind == "eval_at" and self.u is None:
            raise ValueError("eval_at needs a time u")
        if self.kind in ("max_over", "min_over", "integral_over"):
            if self.u is None or self.v is None or self.u > self.v:
                raise ValueError(f"{self.kind} needs a window u <= v")

    @property
    def label(self) -> str:
        c = f"c{self.component}"
        if self.kind == "eval_at":
            return f"{c}.eval({self.u:g})"
        if self.kind == "endpoint":
            return f"{c}.end"
        short = {"max_over": "max", "min_over": "min", "integral_over": "int"}[self.kind]
        return f"{c}.{short}({self.u:g},{self.v:g})"


@dataclass(frozen=True)
class FunctionalPanel:
    items: tuple[PanelItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("a panel needs at least one item")

    @property
    def labels(self) -> list[str]:
        return [it.label for it in self.items]

    def __len__(self):
        return len(self.items)

    @classmethod
    def default(cls, horizon: float, components: int = 1) -> "FunctionalPanel":
        """Seven functionals per component: three evaluations, max, min, endpoint, integral."""
        h = float(horizon)
        items = []
        for c in range(components):
            items += [PanelItem("eval_at", c, h / 4), PanelItem("eval_at", c, h / 2),
                      PanelItem("eval_at", c, 3 * h / 4), PanelItem("max_over", c, 0.0, h),
                      PanelItem("min_over", c, 0.0, h), PanelItem("endpoint", c),
                      PanelItem("integral_over", c, 0.0, h)]
        return cls(tuple(items))

    @classmethod
    def evaluations(cls, times: Sequence[float], components: int = 1) -> "FunctionalPanel":
        return cls(tuple(PanelItem("eval_at", c, float(s)) for c in range(components) for s in times))

    def check(self, horizon: float, arity: int) -> None:
        tol = 1e-12 * max(1.0, horizon)
        for it in self.items:
            if not 0 <= it.component < arity:
                raise InvalidSelector(f"component {it.component} outside a {arity}-tuple")
            for s in (it.u, it.v):
                if s is not None and not (-tol <= s <= horizon + tol):
                    raise InvalidParams(f"panel time {s} outside [0, {horizon}]")


def _item_value(p: PLPath, it: PanelItem) -> float:
    h = p.times[-1]
    if it.kind == "endpoint":
        return float(p.values[-1])
    if it.kind == "eval_at":
        return float(np.interp(min(it.u, h), p.times, p.values))
    u, v = it.u, min(it.v, h)
    if u == 0.0 and v == h:
        # full window: knots already cover it
        if it.kind == "max_over":
            return float(p.values.max())
        if it.kind == "min_over":
            return float(p.values.min())
        x = p.values
        return float(np.dot(0.5 * (x[1:] + x[:-1]), np.diff(p.times)))
    if it.kind == "max_over":
        return pk.max_over(p, u, v)
    if it.kind == "min_over":
        return pk.min_over(p, u, v)
    return pk.integral_over(p, u, v)


def evaluate_panel(paths: Sequence[PLPath], panel: FunctionalPanel) -> np.ndarray:
    """One value per panel item for a tuple of paths.

    Extrema are exact on the piecewise-linear paths and integrals use the
    trapezoid rule on knots, which is exact for linear pieces.

    Raises
    ------
    InvalidSelector
        An item refers to a component beyond the tuple.
    """
    if isinstance(paths, PLPath):
        paths = (paths,)
    out = np.empty(len(panel.items))
    for j, it in enumerate(panel.items):
        if not 0 <= it.component < len(paths):
            raise InvalidSelector(f"component {it.component} outside a {len(paths)}-tuple")
        out[j] = _item_value(paths[it.component], it)
    return out


def ratio_tilt(path: PLPath) -> PLPath:
    """Knot-wise ``u -> path(u) / (1 + u)``, re-interpolated linearly.

    Exact at the knots only: the true ratio is not piecewise linear.
    """
    return pk.make_path(path.times.copy(), path.values / (1.0 + path.times))


# --------------------------------------------------------------------------
# specs and reports


@dataclass(frozen=True)
class TestConfig:
    """Thresholds and test sizes for one scenario run."""

    __test__ = False  # not a pytest class

    ks_threshold: float = 0.02
    alpha: float = 0.01
    n_perm: int = 500
    energy_rows: int = 2000
    structural_tol: float = 1e-9
    rate_se: float = 3.0


@dataclass
class ScenarioSpec:
    """A named verification plan.

    ``params`` holds overrides among ``a, b, c, x, y, t``; missing keys take
    the scenario defaults. ``perturb`` overrides parameters on the right side
    only and exists for negative controls.
    """

    id: str
    params: Mapping[str, float] = field(default_factory=dict)
    n_samples: int = 20000
    steps: int = 256
    panel: Optional[FunctionalPanel] = None
    tests: TestConfig = field(default_factory=TestConfig)
    seed: Seed = field(default_factory=lambda: Seed(42))
    max_rejections: int = DEFAULT_MAX_REJECTIONS
    workers: int = 1
    perturb: Mapping[str, float] = field(default_factory=dict)


@dataclass
class VerdictReport:
    scenario: str
    params: dict
    n_samples: int
    steps: int
    seed: Seed
    verdicts: list[st.TestVerdict]
    acceptance_rate: Optional[float] = None
    runtime_ms: float = 0.0
    left: Optional[st.SampleMatrix] = None
    right: Optional[st.SampleMatrix] = None

    @property
    def passed(self) -> bool:
        return all(v.pass_ for v in self.verdicts)

    def failures(self) -> list[st.TestVerdict]:
        return [v for v in self.verdicts if not v.pass_]

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "params": dict(self.params),
            "n_samples": self.n_samples,
            "steps": self.steps,
            "seed": {"master": int(self.seed.master), "stream": int(self.seed.stream)},
            "verdicts": [_clean(v.to_dict()) for v in self.verdicts],
        }
        if self.acceptance_rate is not None:
            d["acceptance_rate"] = float(self.acceptance_rate)
        d["runtime_ms"] = round(float(self.runtime_ms), 3)
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def write_matrices(self, target) -> None:
        """CSV of both sample matrices: a ``side`` column, then the panel labels."""
        if self.left is None or self.right is None:
            raise ValueError("report carries no sample matrices")
        with open(target, "w", newline="") as fh:
            fh.write(",".join(["side"] + self.left.labels) + "\n")
            for side, m in (("left", self.left), ("right", self.right)):
                for row in m.data:
                    fh.write(side + "," + ",".join(f"{x:.17g}" for x in row) + "\n")


def _clean(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, np.bool_):
            v = bool(v)
        out[k] = v
    return out


# --------------------------------------------------------------------------
# sampling helpers shared by the scenarios


@dataclass
class _Side:
    """Output of one side on one batch."""

    tuples: list
    checks: dict = field(default_factory=dict)
    successes: int = 0
    attempts: int = 0


def _worst(checks: dict, name: str, dev) -> None:
    dev = float(np.max(np.abs(dev))) if np.size(dev) else 0.0
    checks[name] = max(checks.get(name, 0.0), dev)


def _paths(times: np.ndarray, values: np.ndarray) -> list[PLPath]:
    times = np.broadcast_to(times, values.shape)
    return [PLPath(np.array(t), np.array(v)) for t, v in zip(times, values)]


def _brownian_bridges(rng, a, b, t, n, count, kind):
    rows = sm.bridge_rows(rng, a, b, t, n, count)
    return sm.refine_extrema(sm.grid(t, n), rows, rng, kind)


def _bessel_bridges(rng, a, b, t, n, count, budget):
    rows, _ = sm.bessel3_bridge_rows(rng, a, b, t, n, count, budget)
    return sm.refine_extrema(sm.grid(t, n), rows, rng, "min", positive=True)


def _conditioned(draw: Callable[[int], tuple], keep: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 count: int, budget: int, rate: float):
    """Refined paths from ``draw`` filtered by ``keep``; returns times, values, attempts."""
    def stacked(m):
        t, v = draw(m)
        return np.stack([t, v], axis=1)

    rows, attempts = sm._rejection_rows(stacked, lambda r: keep(r[:, 0], r[:, 1]), count, budget,
                                        expected_rate=rate)
    return rows[:, 0], rows[:, 1], attempts


def _endpoint_check(checks, name, p: PLPath, start, end):
    _worst(checks, name, [p.values[0] - start, p.values[-1] - end])


# --------------------------------------------------------------------------
# scenario sides


def _side_thm1(side, p, rng, count, n, budget):
    a, b, t = p["a"], p["b"], p["t"]
    tt, vv = _bessel_bridges(rng, a, b, t, n, count, budget)
    out = _Side([])
    for rho in _paths(tt, vv):
        if side == "left":
            r = pk.reverse(rho)
            nr = tr.n_transform(r)
            _endpoint_check(out.checks, "N(reversed) endpoints", nr, a, b)
            out.tuples.append((nr, tr.q_transform(r), r))
        else:
            nr = tr.n_transform(rho)
            _endpoint_check(out.checks, "N endpoints", nr, b, a)
            out.tuples.append((rho, tr.q_transform(rho), nr))
    return out


def _side_thm2(side, p, rng, count, n, budget):
    x, y, t = p["x"], p["y"], p["t"]
    out = _Side([])
    if side == "left":
        tt, vv = _brownian_bridges(rng, 0.0, x, t, n, count, "max")
        for beta in _paths(tt, vv):
            my = tr.m_x(beta, y)
            _endpoint_check(out.checks, "M_y(bridge to x) endpoints", my, 0.0, y)
            out.tuples.append((beta, tr.pitman_max(beta), my))
        return out
    level = abs(x)

    def keep(times, values):
        return 2.0 * values.max(axis=1) - values[:, -1] >= level

    tt, vv, attempts = _conditioned(lambda m: _brownian_bridges(rng, 0.0, y, t, n, m, "max"), keep,
                                    count, budget, st.bridge_max_tail(y, x, t))
    out.successes, out.attempts = count, attempts
    for beta in _paths(tt, vv):
        mx = tr.m_x(beta, x)
        _endpoint_check(out.checks, "M_x(bridge to y) endpoints on event", mx, 0.0, x)
        out.tuples.append((mx, tr.pitman_max(beta), beta))
    return out


def _general_side(side, p, rng, count, n, budget, bessel: bool):
    a, b, c, t = p["a"], p["b"], p["c"], p["t"]
    out = _Side([])

    def draw(start, end, m):
        if bessel:
            return _bessel_bridges(rng, start, end, t, n, m, budget)
        return _brownian_bridges(rng, start, end, t, n, m, "min")

    if side == "left":
        tt, vv = draw(a, b, count)
        for w in _paths(tt, vv):
            mb = tr.mbar_x(w - a, a + b - 2 * c)
            _endpoint_check(out.checks, "Mbar(left) endpoints", mb, 0.0, a + b - 2 * c)
            out.tuples.append((w - a, tr.pitman_min(w) + a, mb))
        return out
    d = a + b - c
    low = min(a, b)
    ref = st.bridge_min_below(c, d, low, t, positive=bessel)
    tt, vv, attempts = _conditioned(lambda m: draw(c, d, m), lambda _t, v: v.min(axis=1) <= low,
                                    count, budget, ref)
    out.successes, out.attempts = count, attempts
    for w in _paths(tt, vv):
        mb = tr.mbar_x(w - c, b - a)
        _endpoint_check(out.checks, "Mbar(right) endpoints on event", mb, 0.0, b - a)
        out.tuples.append((mb, tr.pitman_min(w) + c, w - c))
    return out


def _side_thm2prime(side, p, rng, count, n, budget):
    return _general_side(side, p, rng, count, n, budget, bessel=False)


def _side_genr(side, p, rng, count, n, budget):
    return _general_side(side, p, rng, count, n, budget, bessel=True)


def _bessel_process(rng, a, t, n, count):
    rows = sm.bessel3_rows(rng, a, t, n, count)
    return sm.refine_extrema(sm.grid(t, n), rows, rng, "min", positive=True)


def _side_cor1(side, p, rng, count, n, budget):
    a, t = p["a"], p["t"]
    tt, vv = _bessel_process(rng, a, t, n, count)
    out = _Side([])
    for r in _paths(tt, vv):
        if side == "left":
            rr = pk.reverse(r)
            nr = tr.n_transform(rr)
            _endpoint_check(out.checks, "N(reversed) endpoints", nr, a, r.end)
            out.tuples.append((nr, tr.q_transform(rr), rr))
        else:
            nr = tr.n_transform(r)
            _endpoint_check(out.checks, "N endpoints", nr, r.end, a)
            out.tuples.append((r, tr.q_transform(r), nr))
    return out


def _side_cor1_zero(side, p, rng, count, n, budget):
    t = p["t"]
    tt, vv = _bessel_process(rng, 0.0, t, n, count)
    out = _Side([])
    for r in _paths(tt, vv):
        # R_s + R_t - 2 min_{[s,t]} R, written out directly
        lifted = pk.combine([r, pk.envelope(r, "suffix_min")], [1.0, -2.0], r.end)
        if side == "left":
            first = pk.reverse(lifted)
            rr = pk.reverse(r)
            knots = np.union1d(first.times, rr.times)
            floor = np.abs(np.interp(knots, rr.times, rr.values) - r.end)
            gap = np.interp(knots, first.times, first.values) - floor
            _worst(out.checks, "nonnegativity bound", np.minimum(gap, 0.0))
            out.tuples.append((first, rr))
        else:
            out.tuples.append((r, lifted))
    return out


def _side_cor2(side, p, rng, count, n, budget):
    a = p["a"]
    tt, vv = _bessel_bridges(rng, a, 0.0, 1.0, n, count, budget)
    out = _Side([])
    for rho in _paths(tt, vv):
        q = tr.q_transform(rho)
        if side == "left":
            rr = pk.reverse(rho)
            _worst(out.checks, "N(reversed) = reversed Q", pk.sup_distance(tr.n_transform(rr), pk.reverse(q)))
            out.tuples.append((pk.reverse(q), rr))
        else:
            _worst(out.checks, "N = Q for paths ending at 0", pk.sup_distance(tr.n_transform(rho), q))
            out.tuples.append((rho, q))
    return out


def _side_cor3(side, p, rng, count, n, budget):
    a, b, t = p["a"], p["b"], p["t"]
    tt, vv = _brownian_bridges(rng, a, b, t, n, count, "min")
    out = _Side([])
    for beta in _paths(tt, vv):
        if side == "left":
            r = pk.reverse(beta)
            nr = tr.n_transform(r)
            _endpoint_check(out.checks, "N(reversed) endpoints", nr, a, b)
            out.tuples.append((nr, tr.q_transform(r), r))
        else:
            nr = tr.n_transform(beta)
            _endpoint_check(out.checks, "N endpoints", nr, b, a)
            out.tuples.append((beta, tr.q_transform(beta), nr))
    return out


def _side_disint(side, p, rng, count, n, budget):
    t = p["t"]
    rows = sm.brownian_rows(rng, 0.0, t, n, count)
    tt, vv = sm.refine_extrema(sm.grid(t, n), rows, rng, "max")
    out = _Side([])
    if side == "left":
        out.tuples = [(w, tr.pitman_max(w)) for w in _paths(tt, vv)]
        return out
    u = rng.random(count)
    for w, ui in zip(_paths(tt, vv), u):
        pw = tr.pitman_max(w)
        x = (2.0 * ui - 1.0) * pw.end
        mx = tr.m_x(w, x)
        _endpoint_check(out.checks, "M endpoints", mx, 0.0, x)
        _worst(out.checks, "P preserved", pk.sup_distance(tr.pitman_max(mx), pw))
        out.tuples.append((mx, pw))
    return out


def _side_brownian_reversal(side, p, rng, count, n, budget):
    a, t = p["a"], p["t"]
    rows = sm.brownian_rows(rng, a, t, n, count)
    tt, vv = sm.refine_extrema(sm.grid(t, n), rows, rng, "min")
    out = _Side([])
    for w in _paths(tt, vv):
        shifted = tr.n_transform(w) + (a - w.end)
        _worst(out.checks, "shifted N starts at a", shifted.start - a)
        if side == "left":
            out.tuples.append((shifted, tr.pitman_min(w), w))
        else:
            out.tuples.append((w, tr.pitman_min(w), shifted))
    return out


def _inverted_brownian(rng, a, horizon, n, count, sign):
    """``sign * B_s / (1 + s)`` for Brownian motion from ``a``, refined with exact minima.

    ``Y_s = B_s/(1+s)`` is a Brownian bridge to 0 run in the clock
    ``r = s/(1+s)``, so the refinement and the infimum beyond the horizon are
    both exact bridge computations in that clock.
    """
    s = sm.grid(horizon, n)
    rows = sign * sm.brownian_rows(rng, a, horizon, n, count) / (1.0 + s)
    r = s / (1.0 + s)
    rt, vv = sm.refine_extrema(r, rows, rng, "min")
    tt = rt / (1.0 - rt)
    tt[:, -1] = horizon
    tail = 1.0 - r[-1]
    end = rows[:, -1]
    k = 0.5 * tail * rng.standard_exponential(count)
    tail_inf = 0.5 * (end - np.sqrt(end * end + 4.0 * k))
    return tt, vv, tail_inf


def _side_binv(side, p, rng, count, n, budget):
    a, horizon = p["a"], p["t"]
    sign = -1.0 if side == "left" else 1.0
    tt, vv, tail_inf = _inverted_brownian(rng, a, horizon, n, count, sign)
    out = _Side([])
    for phi, inf_ in zip(_paths(tt, vv), tail_inf):
        sp = tr.s_transform(phi, tail_inf=inf_)
        _worst(out.checks, "S starts at minus the start", sp.start + phi.start)
        if side == "left":
            out.tuples.append((sp, tr.q_transform(phi), phi))
        else:
            out.tuples.append((phi, tr.q_transform(phi), sp))
    return out


# --------------------------------------------------------------------------
# registry


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParams(msg)


def _check_bessel_ab(p):
    _need(p["a"] >= 0 and p["b"] >= 0, "Bessel bridges need a, b >= 0")


def _check_thm2(p):
    _need(abs(p["x"]) >= abs(p["y"]), "thm2 needs |x| >= |y|")


def _check_abc(p):
    _need(min(p["a"], p["b"]) <= p["c"] <= max(p["a"], p["b"]), "need min(a, b) <= c <= max(a, b)")


def _check_genr(p):
    _need(p["a"] > 0 and p["b"] > 0 and p["c"] > 0, "genr needs a, b, c > 0")
    _check_abc(p)


def _check_a_nonneg(p):
    _need(p["a"] >= 0, "a Bessel process needs a >= 0")


@dataclass(frozen=True)
class _Scenario:
    id: str
    summary: str
    defaults: dict
    arity: int
    side: Callable
    check: Callable = lambda p: None
    horizon_key: str = "t"


_REGISTRY: dict[str, _Scenario] = {}


def _register(*args, **kw):
    sc = _Scenario(*args, **kw)
    _REGISTRY[sc.id] = sc


_register("thm1", "(N(rev rho), Q(rev rho), rev rho) vs (rho, Q(rho), N(rho)), Bessel bridge a->b",
          {"a": 0.7, "b": 1.3, "t": 1.0}, 3, _side_thm1, _check_bessel_ab)
_register("thm2", "(beta^x, P, M_y) vs (M_x(beta^y), P, beta^y) given P(beta^y)(t) >= |x|",
          {"x": 1.2, "y": 0.5, "t": 1.0}, 3, _side_thm2, _check_thm2)
_register("thm2prime", "Brownian bridges a->b vs c->a+b-c given min <= min(a, b)",
          {"a": 0.4, "b": 1.2, "c": 0.9, "t": 1.0}, 3, _side_thm2prime, _check_abc)
_register("genr", "Bessel bridges a->b vs c->a+b-c given min <= min(a, b)",
          {"a": 0.7, "b": 1.3, "c": 1.0, "t": 1.0}, 3, _side_genr, _check_genr)
_register("cor1", "(N(rev R), Q(rev R), rev R) vs (R, Q(R), N(R)), Bessel process from a",
          {"a": 0.5, "t": 1.0}, 3, _side_cor1, _check_a_nonneg)
_register("cor1_zero", "(R_{t-s} + R_t - 2 min_{[t-s,t]} R, R_{t-s}) vs (R_s, R_s + R_t - 2 min_{[s,t]} R), a = 0",
          {"t": 1.0}, 2, _side_cor1_zero)
_register("cor2", "(rev Q(rho), rev rho) vs (rho, Q(rho)), Bessel bridge a->0 on [0,1]; plus inversion checks",
          {"a": 0.8}, 2, _side_cor2, _check_a_nonneg)
_register("cor3", "(N(rev beta), Q(rev beta), rev beta) vs (beta, Q(beta), N(beta)), Brownian bridge a->b",
          {"a": -0.5, "b": 1.0, "t": 1.0}, 3, _side_cor3)
_register("disint", "(B, P(B)) vs (M_{(2U-1)P(B)(t)}(B), P(B)), Brownian motion from 0",
          {"t": 1.0}, 2, _side_disint)
_register("brownian_reversal", "(N(B) - B_t + a, Pbar(B), B) vs (B, Pbar(B), N(B) - B_t + a), B from a",
          {"a": 0.3, "t": 1.0}, 3, _side_brownian_reversal)
_register("binv", "(S(-Y), Q(-Y), -Y) vs (Y, Q(Y), S(Y)) with Y = B/(1+s) on [0, t], t default 50",
          {"a": 0.3, "t": 50.0}, 3, _side_binv)


def scenario_ids() -> list[str]:
    return list(_REGISTRY)


def describe(scenario_id: str) -> str:
    return _lookup(scenario_id).summary


def default_params(scenario_id: str) -> dict:
    return dict(_lookup(scenario_id).defaults)


def _lookup(scenario_id: str) -> _Scenario:
    try:
        return _REGISTRY[scenario_id]
    except KeyError:
        raise UnknownScenario(f"unknown scenario {scenario_id!r}; known: {', '.join(_REGISTRY)}") from None


def _effective(sc: _Scenario, overrides: Mapping[str, float]) -> dict:
    p = dict(sc.defaults)
    for k, v in overrides.items():
        if k not in p:
            raise InvalidParams(f"scenario {sc.id} takes no parameter {k!r} (takes {', '.join(p)})")
        v = float(v)
        if not math.isfinite(v):
            raise InvalidParams(f"parameter {k} must be finite")
        p[k] = v
    if "t" in p:
        _need(p["t"] > 0, "t must be positive")
    sc.check(p)
    return p


# --------------------------------------------------------------------------
# runner


def _batch(args):
    sid, side, params, count, steps, master, stream, budget, panel = args
    sc = _REGISTRY[sid]
    rng = Seed(master, stream).generator()
    res = sc.side(side, params, rng, count, steps, budget)
    data = np.array([evaluate_panel(tup, panel) for tup in res.tuples])
    return data, res.checks, res.successes, res.attempts


def _run_side(sc, side, params, spec, panel, side_index):
    n = spec.n_samples
    counts = [min(BATCH_ROWS, n - i) for i in range(0, n, BATCH_ROWS)]
    jobs = []
    for k, cnt in enumerate(counts):
        sub = spec.seed.child(side_index, k)
        jobs.append((sc.id, side, params, cnt, int(spec.steps), sub.master, sub.stream,
                     int(spec.max_rejections), panel))
    workers = max(1, int(spec.workers))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch, jobs))
    else:
        results = [_batch(j) for j in jobs]
    data = np.vstack([r[0] for r in results])
    checks: dict = {}
    for r in results:
        for name, dev in r[1].items():
            _worst(checks, name, dev)
    succ = sum(r[2] for r in results)
    att = sum(r[3] for r in results)
    return data, checks, succ, att


def _snap(data: np.ndarray) -> np.ndarray:
    # values equal up to roundoff (e.g. pinned endpoints) must tie exactly
    return np.round(data, 10)


def run_scenario(spec: ScenarioSpec) -> VerdictReport:
    """Run one registered scenario and collect every verdict.

    Raises
    ------
    UnknownScenario
        ``spec.id`` is not registered.
    InvalidParams
        Parameters violate the hypotheses of the identity.
    RejectionBudgetExceeded
        A conditioned side could not be filled within the budget.
    """
    t0 = time.perf_counter()
    sc = _lookup(spec.id)
    params = _effective(sc, spec.params)
    right_params = _effective(sc, {**params, **dict(spec.perturb)}) if spec.perturb else params
    if int(spec.n_samples) < 10:
        raise InvalidParams("n_samples must be at least 10")
    if int(spec.steps) < 4 or int(spec.steps) % 4:
        raise InvalidParams("steps must be a positive multiple of 4")
    horizon = params.get(sc.horizon_key, 1.0)
    panel = spec.panel or FunctionalPanel.default(horizon, sc.arity)
    panel.check(horizon, sc.arity)
    cfg = spec.tests

    left, lchecks, _, _ = _run_side(sc, "left", params, spec, panel, 0)
    right, rchecks, succ, att = _run_side(sc, "right", right_params, spec, panel, 1)
    left, right = _snap(left), _snap(right)

    verdicts = []
    for side, checks in (("left", lchecks), ("right", rchecks)):
        for name, dev in checks.items():
            verdicts.append(st.TestVerdict(f"structural[{side}]: {name}", dev, None, cfg.structural_tol,
                                           dev <= cfg.structural_tol))
    labels = panel.labels
    for j, lab in enumerate(labels):
        verdicts.append(st.ks_two_sample(left[:, j], right[:, j], cfg.ks_threshold, name=f"ks:{lab}"))
    verdicts.append(st.energy_perm_test(left, right, cfg.n_perm, spec.seed.child(2), cfg.alpha,
                                        max_rows=cfg.energy_rows, name="energy:joint"))
    rate = None
    if att:
        rate = succ / att
        ref = _reference_rate(sc.id, right_params)
        verdicts.append(st.rate_vs_reference(succ, att, ref, cfg.rate_se))
    if sc.id == "cor2":
        verdicts += _cor2_inversion(params, spec, cfg)

    return VerdictReport(sc.id, params, int(spec.n_samples), int(spec.steps), spec.seed, verdicts, rate,
                         (time.perf_counter() - t0) * 1e3,
                         st.SampleMatrix(left, labels), st.SampleMatrix(right, labels))


def _reference_rate(sid: str, p: dict) -> float:
    if sid == "thm2":
        return st.bridge_max_tail(p["y"], p["x"], p["t"])
    d = p["a"] + p["b"] - p["c"]
    return st.bridge_min_below(p["c"], d, min(p["a"], p["b"]), p["t"], positive=(sid == "genr"))


# cor2: the inversion of a Bessel process against the Bessel bridge to 0.
INVERSION_HORIZON = 3.0
INVERSION_STEPS = 288


def linv_deviation(phi: PLPath) -> float:
    """Largest violation of the four time-inversion identities at mapped knots.

    Both sides are evaluated independently: the left through ``iota`` and the
    PL transforms, the right straight from the knots of ``phi``.
    """
    psi = tr.iota(phi)
    q = tr.q_transform(psi)
    u = phi.times
    ratio = phi.values / (1.0 + u)
    run_min = np.minimum.accumulate(ratio)
    s = u / (1.0 + u)
    dev = [psi(s) - ratio, q(s) - (ratio - 2.0 * run_min + phi.start)]
    pos = u > 0
    inv = 1.0 / u[pos]
    s2 = inv / (1.0 + inv)
    # reversal on [0, 1] evaluates at 1 - s2 = u / (1 + u)
    dev.append(pk.reverse(psi)(s2) - s2 * phi.values[pos])
    dev.append(pk.reverse(q)(s2) - (s2 * phi.values[pos] - 2.0 * run_min[pos] + phi.start))
    return float(max(np.max(np.abs(d)) for d in dev))


def _cor2_inversion(params, spec, cfg) -> list[st.TestVerdict]:
    a = params["a"]
    n = max(1, spec.n_samples)
    horizon = INVERSION_HORIZON
    edge = horizon / (1.0 + horizon)
    times = np.array([0.25, 0.5, 0.75]) * 1.0
    rng_l = spec.seed.child(3, 0).generator()
    rng_r = spec.seed.child(3, 1).generator()
    g = sm.grid(horizon, INVERSION_STEPS)
    worst = 0.0
    left = np.empty((n, times.size))
    for i in range(0, n, BATCH_ROWS):
        rows = sm.bessel3_rows(rng_l, a, horizon, INVERSION_STEPS, min(BATCH_ROWS, n - i))
        for j, row in enumerate(rows):
            phi = PLPath(g.copy(), row)
            psi = tr.iota(phi)
            left[i + j] = psi(times)
            if i == 0 and j < 50:
                worst = max(worst, linv_deviation(phi))
    bridges, _ = sm.bessel3_bridge_rows(rng_r, a, 0.0, 1.0, INVERSION_STEPS, n, spec.max_rejections)
    gb = sm.grid(1.0, INVERSION_STEPS)
    right = np.stack([np.interp(times, gb, row) for row in bridges])
    out = [st.TestVerdict("structural: inversion identities (50 paths)", worst, None, 1e-9, worst <= 1e-9)]
    left, right = _snap(left), _snap(right)
    for k, s in enumerate(times):
        if s <= edge:
            out.append(st.ks_two_sample(left[:, k], right[:, k], cfg.ks_threshold, name=f"ks:iota.eval({s:g})"))
    return out


def thm2_acceptance_check(x: float = 1.2, y: float = 0.5, t: float = 1.0, attempts: int = 100_000,
                          steps: int = 256, seed: Seed = Seed(42), n_se: float = 3.0) -> st.TestVerdict:
    """Acceptance rate of the thm2 conditioning over a fixed number of attempts.

    Each attempt draws a bridge from 0 to ``y``, adds the exact maximum of
    every grid segment and accepts when ``P(beta)(t) = 2 max - y >= |x|``.
    """
    if abs(x) < abs(y):
        raise InvalidParams("need |x| >= |y|")
    rng = seed.generator()
    hits = 0
    done = 0
    while done < attempts:
        m = min(10_000, attempts - done)
        _, vv = _brownian_bridges(rng, 0.0, y, t, steps, m, "max")
        hits += int(np.sum(2.0 * vv.max(axis=1) - y >= abs(x)))
        done += m
    return st.rate_vs_reference(hits, attempts, st.bridge_max_tail(y, x, t), n_se, name="thm2 acceptance rate")
