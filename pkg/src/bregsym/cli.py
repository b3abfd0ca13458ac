"""Command line front end.

Usage::

    bregsym verify --functional ppower --p 1.5 --dim 1 --radius 100 --samples 100000 --seed 42
    bregsym verify --config run.json
    bregsym bounds --p 3 --json
    bregsym ratio-curve --p 1.5 --r-min 1e-3 --r-max 1e3 --points 500 --theta -1 --out curve.csv
    bregsym counterexample --kind huber --x 2 --eps 0.01

Exit codes: 0 success, 1 usage or I/O error, 2 a sampled ratio exceeded the
theoretical constant, 3 the verdict did not match the expectation (e.g. a
counterexample family without ``--expect-unbounded``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bd
from .functionals import from_dict
from .search import (
    BOUNDED,
    EXCEEDS,
    UNBOUNDED_DETECTED,
    DomainSpec,
    counterexample_abs,
    counterexample_huber,
    sample_sup_ratio,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_UNEXPECTED = 3

SCHEMA = 1
SEED_ENV = "BREGSYM_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for theory violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str = "verify"
    functional: dict = field(default_factory=lambda: {"family": "hilbert", "params": {}})
    domain: dict = field(default_factory=lambda: {"kind": "box", "dim": 1, "radius": 1.0})
    samples: int = 10000
    seed: int | None = None
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    threads: int = 1
    expect_unbounded: bool = False
    refine_rounds: int | None = None

    _TOLERANCES = {"slack", "unbounded_ratio"}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise UsageError("config must be a JSON object")
        known = {
            "command", "functional", "domain", "samples", "seed", "out",
            "tolerances", "threads", "expect_unbounded", "refine_rounds",
        }
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command != "verify":
            raise UsageError(f"config command must be 'verify', got {self.command!r}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise UsageError(f"samples must be a positive integer, got {self.samples!r}")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise UsageError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise UsageError(f"threads must be a positive integer, got {self.threads!r}")
        unknown = set(self.tolerances) - self._TOLERANCES
        if unknown:
            raise UsageError(f"unknown tolerance overrides: {sorted(unknown)}")
        try:
            from_dict(self.functional)
            DomainSpec.from_dict(self.domain)
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from None


def _functional_from_args(args) -> dict:
    name = args.functional
    if name == "ppower":
        if args.p is None:
            raise UsageError("--p is required for the ppower functional")
        weights = None
        if args.weights:
            weights = [float(v) for v in args.weights.split(",")]
        return {"family": "ppower", "params": {"p": args.p, "weights": weights}}
    if name == "sqrt":
        if args.eps is None:
            raise UsageError("--eps is required for the sqrt functional")
        return {"family": "sqrt", "params": {"eps": args.eps}}
    if name == "quartic":
        return {"family": "custom", "params": {"name": "quartic"}}
    return {"family": name, "params": {}}


def _resolve_seed(*candidates) -> int:
    for s in candidates:
        if s is not None:
            return int(s)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _build_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = RunConfig.from_dict(raw)
    else:
        cfg = RunConfig()
    # explicit flags override the config file
    if args.functional is not None:
        cfg.functional = _functional_from_args(args)
    elif not args.config:
        raise UsageError("either --functional or --config is required")
    dom = dict(cfg.domain) if args.config else {"kind": "box", "dim": 1, "radius": 1.0}
    for key, val in (("kind", args.domain), ("dim", args.dim), ("radius", args.radius), ("center", args.center)):
        if val is not None:
            dom[key] = val
    cfg.domain = dom
    if args.samples is not None:
        cfg.samples = args.samples
    cfg.seed = _resolve_seed(args.seed, cfg.seed)
    if args.out is not None:
        cfg.out = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.expect_unbounded:
        cfg.expect_unbounded = True
    if args.refine_rounds is not None:
        cfg.refine_rounds = args.refine_rounds
    if args.slack is not None:
        cfg.tolerances = {**cfg.tolerances, "slack": args.slack}
    cfg.validate()
    return cfg


def cmd_verify(args) -> int:
    cfg = _build_config(args)
    f = from_dict(cfg.functional)
    try:
        dom = DomainSpec.from_dict(cfg.domain)
        report = sample_sup_ratio(
            f,
            dom,
            cfg.samples,
            seed=cfg.seed,
            refine_rounds=cfg.refine_rounds,
            threads=cfg.threads,
            **cfg.tolerances,
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if cfg.out is not None:
        _write(text, cfg.out)
    if args.json or cfg.out is None:
        sys.stdout.write(text)
    else:
        w = report.witness
        print(f"{f.family}: sup ratio {w.ratio} (bound {report.bound}) -> {report.verdict}")

    if report.verdict == EXCEEDS:
        return EXIT_VIOLATION
    if cfg.expect_unbounded:
        return EXIT_OK if report.verdict == UNBOUNDED_DETECTED else EXIT_UNEXPECTED
    return EXIT_OK if report.verdict == BOUNDED else EXIT_UNEXPECTED


def cmd_bounds(args) -> int:
    try:
        b = bd.bound_bundle(args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    row = {
        "schema": SCHEMA,
        "p": args.p,
        "t": bd.reduced_exponent(args.p),
        "cp": b.cp,
        "refined_lower": b.refined_lower,
        "refined_upper": b.refined_upper,
        "eta": b.eta,
    }
    if args.json:
        _write(json.dumps(row, indent=2) + "\n", args.out)
        return EXIT_OK
    lines = [f"{k:<14}{row[k]:.12g}" for k in ("p", "t", "cp", "refined_lower", "refined_upper", "eta")]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _r_grid(args) -> np.ndarray:
    if args.points < 1:
        raise UsageError("--points must be positive")
    if args.r:
        r = np.array([float(v) for v in args.r.split(",")])
    elif args.points == 1:
        r = np.array([args.r_min])
    elif args.grid == "log":
        if not 0.0 < args.r_min < args.r_max:
            raise UsageError("log grid needs 0 < r-min < r-max")
        r = np.logspace(math.log10(args.r_min), math.log10(args.r_max), args.points)
    else:
        if not 0.0 <= args.r_min < args.r_max:
            raise UsageError("linear grid needs 0 <= r-min < r-max")
        r = np.linspace(args.r_min, args.r_max, args.points)
    if r.size == 0 or not np.all(np.isfinite(r)) or np.any(r < 0.0):
        raise UsageError("r values must be finite and nonnegative")
    return r


def cmd_ratio_curve(args) -> int:
    if not 1.0 < args.p < 2.0:
        raise UsageError(f"ratio curves need 1 < p < 2, got {args.p}")
    if not -1.0 <= args.theta <= 1.0:
        raise UsageError(f"theta must lie in [-1, 1], got {args.theta}")
    r = _r_grid(args)
    f, g = bd.fg_arrays(args.p, r, args.theta)
    q = bd.fg_ratio_grid(args.p, r, args.theta)

    fh = sys.stdout if args.out is None else open(args.out, "w", encoding="utf-8", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "theta", "f", "g", "ratio"])
        for row in zip(r, np.broadcast_to(args.theta, r.shape), f, g, q):
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_counterexample(args) -> int:
    try:
        if args.kind == "abs":
            d_switch, d_orig, ratio = counterexample_abs(args.x, args.eps)
        else:
            d_switch, d_orig, ratio = counterexample_huber(args.x, args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = {
        "schema": SCHEMA,
        "kind": args.kind,
        "x": args.x,
        "eps": args.eps,
        "d_switch": d_switch,
        "d_orig": d_orig,
        "ratio": ratio,
    }
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bregsym", description="Approximate symmetry of Bregman distances.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="sample the switched ratio and compare with theory")
    v.add_argument("--functional", choices=["ppower", "hilbert", "abs", "huber", "sqrt", "quartic"])
    v.add_argument("--p", type=float)
    v.add_argument("--eps", type=float)
    v.add_argument("--weights", help="comma separated quadrature weights (ppower)")
    v.add_argument("--domain", choices=["box", "ball"])
    v.add_argument("--dim", type=int)
    v.add_argument("--radius", type=float)
    v.add_argument("--center", type=float)
    v.add_argument("--samples", type=int)
    v.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}, then 0")
    v.add_argument("--threads", type=int)
    v.add_argument("--refine-rounds", type=int)
    v.add_argument("--slack", type=float, help="relative slack before declaring a violation")
    v.add_argument("--expect-unbounded", action="store_true")
    v.add_argument("--config", help="JSON run configuration")
    v.add_argument("--out")
    v.add_argument("--json", action="store_true")
    v.set_defaults(handler=cmd_verify)

    b = sub.add_parser("bounds", help="print the theoretical constants for p")
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--json", action="store_true")
    b.add_argument("--out")
    b.set_defaults(handler=cmd_bounds)

    c = sub.add_parser("ratio-curve", help="CSV of the ray ratio function f/g")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--theta", type=float, default=-1.0)
    c.add_argument("--r-min", type=float, default=1e-3)
    c.add_argument("--r-max", type=float, default=1e3)
    c.add_argument("--points", type=int, default=500)
    c.add_argument("--grid", choices=["log", "lin"], default="log")
    c.add_argument("--r", help="comma separated r values (overrides the grid)")
    c.add_argument("--out")
    c.set_defaults(handler=cmd_ratio_curve)

    x = sub.add_parser("counterexample", help="distances of the abs / Huber counterexamples")
    x.add_argument("--kind", choices=["abs", "huber"], required=True)
    x.add_argument("--x", type=float, required=True)
    x.add_argument("--eps", type=float, required=True)
    x.add_argument("--out")
    x.set_defaults(handler=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; parse errors exit with EXIT_USAGE
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"bregsym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bregsym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
