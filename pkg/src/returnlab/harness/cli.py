"""``returnlab`` command line.

Exit status: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 resource guard tripped.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..graphcore import GraphError
from ..montecarlo.experiments import DEFAULT_STEP_BUDGET, ResourceGuardError
from ..montecarlo.parallel import default_workers
from . import commands
from .config import ConfigError, config_tokens, dump_json
from .graphspec import GRAPH_SPEC_HELP

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3

# options that affect only where or how fast output is produced
_NOT_RECORDED = {"out", "format", "workers", "config", "command", "func"}
_NEEDS_GRAPH = {"dist", "resistance", "escape", "construct"}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--strict", action="store_true", help="treat truncation warnings as failures")
    g.add_argument("--workers", type=int, default=default_workers(),
                   help="worker processes; outputs do not depend on it")
    g.add_argument("--config", help="key=value file; command-line flags override it")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="returnlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("dist", commands.cmd_dist, "exact return-time table and the two tail/hazard bounds")
    p.add_argument("--graph", help=GRAPH_SPEC_HELP + " (required)")
    p.add_argument("--v", type=int, help="root vertex (default: the graph's center)")
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--rational", action="store_true", help="exact rational arithmetic (small graphs)")

    p = add("resistance", commands.cmd_resistance, "effective resistance, potential and unit current")
    p.add_argument("--graph", help=GRAPH_SPEC_HELP + " (required)")
    p.add_argument("--source", help="comma-separated vertices (default: the center)")
    p.add_argument("--sink", help="comma-separated vertices (default: a farthest vertex)")
    p.add_argument("--cut", type=float, help="also report the sublevel cut at this potential")
    p.add_argument("--flow", action="store_true", help="CSV output lists edge currents")

    p = add("expander", commands.cmd_expander, "spectral gap, mixing bound and hitting windows")
    p.add_argument("--graph", help="overrides --n/--d")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--mix-horizon", type=int, default=50)
    p.add_argument("--window", action="store_true", help="run the pendant-vertex window experiments")
    p.add_argument("--window-const", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=10000)

    p = add("escape", commands.cmd_escape, "Monte Carlo P_x(tau_y <= eps R^2)")
    p.add_argument("--graph", help=GRAPH_SPEC_HELP + " (required)")
    p.add_argument("--x", type=int)
    p.add_argument("--y", type=int, help="default: a vertex farthest from x")
    p.add_argument("--epsilon", default="0.1,0.25", help="comma-separated values")
    p.add_argument("--trials", type=int, default=100000)

    p = add("sharpness", commands.cmd_sharpness, "hazard on a construction against the plain half-line")
    p.add_argument("--graph", default="Gt:2000:0.1:3", help=GRAPH_SPEC_HELP)
    p.add_argument("--t", type=int, default=2000)
    p.add_argument("--min-ratio", type=float, default=5.0)

    p = add("collide", commands.cmd_collide, "two-walker collisions on Comb(Z, G) with a Comb(G, Z) control")
    p.add_argument("--params", default="medium", help="small | medium | H1,H2:N1,N2")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--step-cap", type=int, help="stop every walk after this many steps")
    p.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET,
                   help="refuse runs above trials x 2 x steps")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--no-control", action="store_true")

    p = add("verify", commands.cmd_verify, "identity and bound suite over the reference corpus")
    p.add_argument("--graph", action="append", help="extra graph (repeatable)")
    p.add_argument("--no-default", action="store_true", help="skip the built-in corpus")
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--expand-horizon", type=int, default=60)
    p.add_argument("--rational", action="store_true", help="exact checks on graphs of <= 12 vertices")

    p = add("construct", commands.cmd_construct, "write a graph as an edge list")
    p.add_argument("--graph", help=GRAPH_SPEC_HELP + " (required)")
    return parser, subs


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = subs[args.command]
        actions = {a.dest: a for a in sp._actions if a.option_strings and a.dest not in ("help", "config")}
        at = argv.index(args.command)
        args = parser.parse_args([args.command] + config_tokens(args.config, actions) + argv[at + 1:])
    if args.command in _NEEDS_GRAPH and args.graph is None:
        raise ConfigError(f"{args.command}: --graph is required (flag or config key)")
    if getattr(args, "workers", 1) < 1:
        raise ConfigError("--workers must be >= 1")
    return args


def _emit(text: str, out: str | None) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"returnlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        outcome = args.func(args)
    except ResourceGuardError as exc:
        print(f"returnlab: resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (GraphError, ConfigError) as exc:
        check = getattr(exc, "check", None)
        if check == "truncation":
            print(f"returnlab: check failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"returnlab: error: {exc}" + (f" [{check}]" if check else ""), file=sys.stderr)
        return EXIT_USAGE
    for w in outcome.warnings:
        print(f"returnlab: warning: {w}", file=sys.stderr)
    if args.format == "json":
        config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_RECORDED}
        text = dump_json({"command": args.command, "config": config, "passed": outcome.passed,
                          "report": outcome.report})
    else:
        text = outcome.csv
    _emit(text, args.out)
    return EXIT_OK if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
