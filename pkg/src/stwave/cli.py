"""Command-line front end.

    stwave ode  solve|dualnorm|infsup|isometry|equivalence|convergence [flags]
    stwave wave solve|infsup-decay|theorem1|stability-sweep|cfl-demo|example-sine [flags]
    stwave report merge SUMMARY.json... --out DIR

Exit codes: 0 success, 1 usage or config error, 2 failed numerical check,
3 solver failure. Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys

from .errors import ConfigError, InvalidArgumentError, RhsSyntaxError, SolverError
from .experiments import ExperimentConfig, run_experiment, write_outputs

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_SOLVER = 0, 1, 2, 3

ODE_COMMANDS = ("solve", "dualnorm", "infsup", "isometry", "equivalence", "convergence")
WAVE_COMMANDS = ("solve", "infsup-decay", "theorem1", "stability-sweep", "cfl-demo", "example-sine")

_PI_FORM = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?pi\s*(\^\s*2|\*\*\s*2)?\s*$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(text: str) -> float:
    """Float, or c*pi / c*pi^2 for convenience."""
    m = _PI_FORM.match(text)
    if m:
        c = float(m.group(1)) if m.group(1) else 1.0
        return c * (math.pi**2 if m.group(2) else math.pi)
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _num_list(text: str) -> list:
    return [_number(s) for s in text.split(",") if s.strip()]


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config; inline flags override its values")
    p.add_argument("--mu", type=_number)
    p.add_argument("--T", type=_number)
    p.add_argument("--L", type=_number)
    p.add_argument("--nt", type=_int_list, help="temporal element counts, e.g. 16,32,64")
    p.add_argument("--nx", type=_int_list, help="spatial element counts")
    p.add_argument("--rhs", action="append", help="right-hand side spec; repeatable")
    p.add_argument("--refine", type=int, help="test-mesh refinement factor for dual norms")
    p.add_argument("--k", type=_int_list, help="mode indices")
    p.add_argument("--q", type=_num_list, help="mesh ratios h_t/h_x")
    p.add_argument("--mus", type=_num_list, help="list of mu values")
    p.add_argument("--levels", type=int)
    p.add_argument("--cases", type=int, help="number of random cases")
    p.add_argument("--tol", type=float)
    p.add_argument("--slack", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--deterministic", action="store_true", default=None, help="omit timings for byte-identical output")
    p.add_argument("--seed", type=_u64)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stwave", description="Space-time Petrov-Galerkin experiments for the wave equation.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    for group, commands in (("ode", ODE_COMMANDS), ("wave", WAVE_COMMANDS)):
        g = groups.add_parser(group, help=f"{group} experiments")
        sub = g.add_subparsers(dest="command", required=True, parser_class=_Parser)
        for cmd in commands:
            _add_common(sub.add_parser(cmd))
    rep = groups.add_parser("report", help="combine summaries")
    rsub = rep.add_subparsers(dest="command", required=True, parser_class=_Parser)
    merge = rsub.add_parser("merge")
    merge.add_argument("inputs", nargs="+", help="summary.json files")
    merge.add_argument("--out", default="out")
    merge.add_argument("--deterministic", action="store_true", default=None)
    merge.add_argument("-v", "--verbose", action="store_true")
    return parser


_FLAG_KEYS = ("mu", "T", "L", "nt", "nx", "rhs", "refine", "k", "q", "mus", "levels", "cases", "tol", "slack", "out", "deterministic", "seed", "inputs")


def config_from_args(args) -> ExperimentConfig:
    kind = f"{args.group}-{args.command}"
    data = {}
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config)
        data = cfg.to_dict()
        if cfg.kind != kind:
            raise ConfigError(f"config kind {cfg.kind!r} does not match command {kind!r}", "kind")
    data["kind"] = kind
    for key in _FLAG_KEYS:
        v = getattr(args, key, None)
        if v is None:
            continue
        if key == "rhs" and len(v) == 1:
            v = v[0]
        data[key] = v
    return ExperimentConfig.from_dict(data)


def _error(kind: str, exc: BaseException, **extra) -> dict:
    obj = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    obj.update({k: v for k, v in extra.items() if v is not None})
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(json.dumps(_error("usage", exc)), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        result = run_experiment(cfg)
        write_outputs(result, cfg.out)
    except RhsSyntaxError as exc:
        print(json.dumps(_error("rhs-syntax", exc, offset=exc.offset, expected=list(exc.expected))), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(json.dumps(_error("config", exc, key=exc.key)), file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(json.dumps(_error("invalid-argument", exc)), file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(json.dumps(_error("solver", exc)), file=sys.stderr)
        return EXIT_SOLVER
    for c in result.checks:
        status = "PASS" if c.passed else ("FAIL" if c.fatal else "WARN")
        print(f"{status} {cfg.kind} {c.name} {c.detail}".rstrip())
    print(f"wrote {cfg.out}/summary.json")
    return EXIT_OK if result.passed else EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
