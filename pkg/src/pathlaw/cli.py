"""Command-line front end.

Commands
--------
list                      registered scenarios with their defaults
verify <scenario>         run a scenario, print or write the JSON report
sample <kind>             dump sampled paths (optionally transformed) as CSV
selftest                  deterministic identity suite

Exit codes are 0 (all checks passed), 1 (some check failed) and 2 (usage or
parameter error, with a one-line diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import pathkit as pk
from . import samplers as sm
from . import scenarios as sc
from . import transforms as tr
from .errors import PathlawError
from .samplers import Seed
from .selftest import run_selftest

__all__ = ["main", "build_parser", "TRANSFORMS"]

DEFAULT_SEED = 42
PARAM_FLAGS = ("a", "b", "c", "x", "y", "t")
TRANSFORMS = ("P", "Pbar", "Mx", "Mbarx", "N", "Q", "S")


def _decimal(text: str) -> float:
    # float() is locale-independent; it also takes scientific notation
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return val


def _count(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _default_seed() -> int:
    env = os.environ.get("PATHLAW_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise PathlawError(f"PATHLAW_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_count, default=None,
                        help=f"master seed (default: $PATHLAW_SEED or {DEFAULT_SEED})")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    params = argparse.ArgumentParser(add_help=False)
    for name in PARAM_FLAGS:
        params.add_argument(f"--{name}", type=_decimal, default=None)
    params.add_argument("--steps", type=_count, default=256, help="grid steps (default 256)")

    parser = argparse.ArgumentParser(prog="pathlaw", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list scenarios")

    v = sub.add_parser("verify", parents=[common, params], help="run a scenario")
    v.add_argument("scenario")
    v.add_argument("--n", type=_count, default=20000, help="samples per side (default 20000)")
    v.add_argument("--n-perm", type=_count, default=500, help="energy permutations (default 500)")
    v.add_argument("--workers", type=_count, default=os.cpu_count() or 1,
                   help="worker processes (default: available cores)")
    v.add_argument("--dump", default=None, help="CSV file for both sample matrices")

    s = sub.add_parser("sample", parents=[common, params], help="dump sampled paths as CSV")
    s.add_argument("kind", choices=sm.PROCESS_KINDS)
    s.add_argument("--n", type=_count, default=1,
                   help="number of paths; more than one needs --out and writes <stem>_<k>.csv")
    s.add_argument("--transform", choices=TRANSFORMS, default=None)

    t = sub.add_parser("selftest", parents=[common], help="deterministic identity suite")
    t.add_argument("--paths", type=_count, default=1000, help="random paths (default 1000)")
    return parser


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_list(args) -> int:
    for sid in sc.scenario_ids():
        defaults = ", ".join(f"{k}={v:g}" for k, v in sc.default_params(sid).items())
        print(f"{sid:<18} {defaults:<28} {sc.describe(sid)}")
    return 0


def cmd_verify(args) -> int:
    overrides = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}
    spec = sc.ScenarioSpec(
        id=args.scenario,
        params=overrides,
        n_samples=args.n,
        steps=args.steps,
        tests=sc.TestConfig(n_perm=args.n_perm),
        seed=Seed(args.seed),
        workers=args.workers,
    )
    report = sc.run_scenario(spec)
    _emit(report.to_json() + "\n", args.out)
    if args.dump:
        report.write_matrices(args.dump)
    for v in report.failures():
        print(f"FAIL {v.name}: statistic={v.statistic:.6g} threshold={v.threshold:g}", file=sys.stderr)
    return 0 if report.passed else 1


def _apply(name: str, path, args):
    if name in ("Mx", "Mbarx"):
        if args.x is None:
            raise PathlawError(f"--transform {name} needs --x")
        return (tr.m_x if name == "Mx" else tr.mbar_x)(path, args.x)
    return {
        "P": tr.pitman_max,
        "Pbar": tr.pitman_min,
        "N": tr.n_transform,
        "Q": tr.q_transform,
        "S": tr.s_transform,
    }[name](path)


def cmd_sample(args) -> int:
    if args.n < 1:
        raise PathlawError("--n must be at least 1")
    if args.n > 1 and args.out is None:
        raise PathlawError("--n above 1 needs --out")
    spec = sm.ProcessSpec(args.kind, a=args.a or 0.0, b=args.b or 0.0,
                          t=1.0 if args.t is None else args.t, steps=args.steps)
    seed = Seed(args.seed)
    for k in range(args.n):
        path = sm.sample_path(spec, seed.child(k))
        if args.transform:
            path = _apply(args.transform, path, args)
        text = pk.to_csv_string(path)
        if args.n == 1:
            _emit(text, args.out)
        else:
            out = Path(args.out)
            _emit(text, out.with_name(f"{out.stem}_{k:04d}{out.suffix or '.csv'}"))
    return 0


def cmd_selftest(args) -> int:
    if args.paths < 1:
        raise PathlawError("--paths must be at least 1")
    results, elapsed = run_selftest(args.paths, Seed(args.seed))
    text = "".join(r.line() + "\n" for r in results)
    _emit(text, args.out)
    # timing goes to stderr so that stdout is reproducible
    print(f"{args.paths} paths in {elapsed:.1f} s", file=sys.stderr)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"list": cmd_list, "verify": cmd_verify, "sample": cmd_sample, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if getattr(args, "seed", 0) < 0:
            raise PathlawError("--seed must be nonnegative")
        return COMMANDS[args.command](args)
    except (PathlawError, ValueError, KeyError) as exc:
        print(f"pathlaw: error: {exc}", file=sys.stderr)
        return 2
