"""``depstat`` command line: ``test``, ``gen`` and ``power`` subcommands.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import sys

from .benchgen import RANDOM_DENSITY, MixConfig, SourceDensity, generate_instance
from .dataio import DatasetError, load_dataset, read_dataset, write_dataset
from .errors import (
    DegenerateNullError,
    DepstatError,
    InvalidInputError,
    UnsupportedDimensionError,
    UnsupportedStatisticError,
)
from .experiment import (
    FULL_DS,
    FULL_NS,
    ExperimentGrid,
    GridFailure,
    dumps_json,
    emit_report,
    run_grid,
)
from .null import NullModel, TestConfig, run_test
from .stats import StatKind

log = logging.getLogger("depstat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_angle(text: str) -> float:
    """A float or a small arithmetic expression in ``pi`` such as ``pi/4`` or ``3*pi/16``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            value = ev(node.operand)
            return -value if isinstance(node.op, ast.USub) else value
        raise ValueError(text)

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}")
    return value


def _list_of(convert):
    def parse(text):
        try:
            return [convert(part) for part in text.split(",") if part.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}: {exc}") from None

    return parse


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _bandwidth(text):
    if text == "median":
        return None
    if text.startswith("fixed:"):
        try:
            sx, sy = (float(v) for v in text[len("fixed:"):].split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected fixed:SX,SY, got {text!r}") from None
        if not (sx > 0 and sy > 0):
            raise argparse.ArgumentTypeError("fixed bandwidths must be positive")
        return (sx, sy)
    raise argparse.ArgumentTypeError(f"expected 'median' or 'fixed:SX,SY', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depstat", description="Distance covariance, HSIC and rank-statistic independence tests.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run an independence test on a dataset CSV")
    t.add_argument("file", help="dataset CSV (header x1..xp,y1..yq), or - for stdin")
    t.add_argument("--stat", choices=[k.value for k in StatKind], default=StatKind.HSIC_BIASED.value)
    t.add_argument("--null", choices=[m.value for m in NullModel], default=NullModel.PERMUTATION.value)
    t.add_argument("--perms", type=_positive_int, default=200)
    t.add_argument("--gamma-perms", type=_positive_int, default=50)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--bandwidth", type=_bandwidth, default=None, metavar="{median|fixed:SX,SY}")
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--workers", type=_positive_int, default=1)

    g = sub.add_parser("gen", help="generate a rotation-mixing benchmark dataset")
    densities = [d.value for d in SourceDensity] + [RANDOM_DENSITY]
    g.add_argument("--theta", type=parse_angle, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density-x", choices=densities, default=SourceDensity.TWO_GAUSSIAN_MIX.value)
    g.add_argument("--density-y", choices=densities, default=SourceDensity.TWO_GAUSSIAN_MIX.value)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--out", default="-")
    g.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("power", help="run the acceptance-rate grid experiment")
    p.add_argument("--config", help="JSON file with ExperimentGrid fields; flags override it")
    p.add_argument("--preset", choices=["desk", "full"], default="desk",
                   help="full: R=500, n up to 2048, d up to 4")
    p.add_argument("--thetas", type=_list_of(parse_angle))
    p.add_argument("--ns", type=_list_of(int))
    p.add_argument("--ds", type=_list_of(int))
    p.add_argument("--tests", type=_list_of(str))
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--perms", type=_positive_int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--density-x", choices=densities)
    p.add_argument("--density-y", choices=densities)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _write_bytes(path, data: bytes):
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def cmd_test(args) -> int:
    try:
        config = TestConfig(
            stat=args.stat,
            alpha=args.alpha,
            permutations=args.perms,
            null_model=args.null,
            bandwidth=args.bandwidth,
            seed=args.seed,
            gamma_permutations=args.gamma_perms,
        )
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    log.info("config %s", dumps_json({
        "command": "test", "file": args.file, "stat": config.stat.value, "null_model": config.null_model.value,
        "perms": config.permutations, "gamma_perms": config.gamma_permutations, "alpha": config.alpha,
        "bandwidth": config.bandwidth_policy, "fixed_bandwidth": list(config.bandwidth or []) or None,
        "seed": config.seed, "workers": args.workers,
    }))
    sample = read_dataset(sys.stdin.read()) if args.file == "-" else load_dataset(args.file)
    result = run_test(sample, config)
    bx, by = result.bandwidths if result.bandwidths is not None else (None, None)
    out = {
        "statistic": float(result.statistic.value),
        "stat_kind": result.statistic.kind.value,
        "threshold": float(result.threshold),
        "p_value": float(result.p_value),
        "reject": bool(result.reject),
        "n": sample.n,
        "p": sample.p,
        "q": sample.q,
        "seed": config.seed,
        "null_model": config.null_model.value,
        "bandwidth_x": bx,
        "bandwidth_y": by,
    }
    sys.stdout.write(dumps_json(out) + "\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        config = MixConfig(
            theta=args.theta, d=args.d, n=args.n, density_x=args.density_x, density_y=args.density_y, seed=args.seed
        )
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    resolved = {
        "command": "gen", "theta": config.theta, "d": config.d, "n": config.n,
        "density_x": str(getattr(config.density_x, "value", config.density_x)),
        "density_y": str(getattr(config.density_y, "value", config.density_y)),
        "seed": config.seed, "out": args.out,
    }
    sys.stderr.write(dumps_json(resolved) + "\n")
    sample = generate_instance(config)
    _write_bytes(args.out, write_dataset(sample).encode("utf-8"))
    return EXIT_OK


def _grid_from_args(args) -> ExperimentGrid:
    fields = {}
    if args.preset == "full":
        fields.update(ns=FULL_NS, ds=FULL_DS, repetitions=500)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                fields.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {
        "thetas": args.thetas, "ns": args.ns, "ds": args.ds, "tests": args.tests, "repetitions": args.reps,
        "permutations": args.perms, "alpha": args.alpha, "base_seed": args.seed,
        "density_x": args.density_x, "density_y": args.density_y,
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentGrid.from_dict(fields)
    except (InvalidInputError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid grid: {exc}") from exc


def cmd_power(args) -> int:
    grid = _grid_from_args(args)
    log.info("config %s", dumps_json({"command": "power", **grid.to_dict(), "workers": args.workers,
                                      "format": args.format, "out": args.out}))

    def progress(done, total):
        sys.stderr.write(f"cells {done}/{total}\n")
        sys.stderr.flush()

    try:
        report = run_grid(grid, workers=args.workers, progress=progress)
    except GridFailure as exc:
        partial = f"{args.out}.partial" if args.out != "-" else "depstat-power.partial"
        _write_bytes(partial, emit_report(exc.report, args.format))
        sys.stderr.write(f"depstat: {exc}\npartial results written to {partial}\n")
        return EXIT_RUNTIME
    log.info("completed %d cells in %.1f s", len(report.cells), report.runtime_seconds)
    _write_bytes(args.out, emit_report(report, args.format))
    return EXIT_OK


_COMMANDS = {"test": cmd_test, "gen": cmd_gen, "power": cmd_power}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("depstat: %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"depstat: usage error: {exc}\n")
        return EXIT_USAGE
    except UnsupportedStatisticError as exc:
        sys.stderr.write(f"depstat: usage error: {exc}\n")
        return EXIT_USAGE
    except (DatasetError, UnsupportedDimensionError, DegenerateNullError, InvalidInputError) as exc:
        sys.stderr.write(f"depstat: data error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"depstat: I/O error: {exc}\n")
        return EXIT_DATA if args.command == "test" else EXIT_RUNTIME
    except (DepstatError, ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"depstat: runtime failure: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
