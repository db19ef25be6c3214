"""Command-line front door: run scenarios, search rewrite spaces, analyze
boolean networks, and check the distributed-logic properties.

Exit codes: 0 success, 1 search miss or property failure, 2 configuration
or parse error, 3 exhausted budget / refused analysis.
"""

from __future__ import annotations

import argparse
import sys

from .boolnet import NetworkError, RefuseExhaustive, attractors, parse_network
from .netsim import consistency_check, run
from .properties import check_properties
from .rewriting import BudgetExceeded, rewrite_random, search_reachable, signal_predicate
from .scenario_io import (
    BoolnetScenario,
    NcpsScenario,
    RewriteScenario,
    ScenarioError,
    load_scenario,
)

EXIT_OK = 0
EXIT_MISS = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fail(message: str) -> int:
    print("error: %s" % message, file=sys.stderr)
    return EXIT_CONFIG


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(str(exc))
    if isinstance(scenario, BoolnetScenario):
        return _fail("boolnet scenarios are analyzed with the 'attractors' command")
    if isinstance(scenario, NcpsScenario):
        if args.seed is not None:
            scenario.world.seed = args.seed
        horizon = args.steps if args.steps is not None else scenario.horizon
        trace = run(scenario.world, horizon)
        _write(trace.serialize(), args.out)
        if args.plot:
            from .plots import plot_kb_sizes

            plot_kb_sizes(trace, args.plot)
        return EXIT_OK
    assert isinstance(scenario, RewriteScenario)
    seed = args.seed if args.seed is not None else scenario.seed
    steps = args.steps if args.steps is not None else scenario.steps
    history = rewrite_random(scenario.state, scenario.rules, steps, seed)
    lines = []
    for i, (label, state) in enumerate(history, start=1):
        lines.append("%d | rewrite | rule=%s state=%s" % (i, label, state.render()))
    _write("".join(ln + "\n" for ln in lines), args.out)
    if args.plot:
        from .plots import plot_cell_counts

        plot_cell_counts(history, args.plot)
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(str(exc))
    if not isinstance(scenario, RewriteScenario):
        return _fail("'search' wants a rewrite scenario")
    find = args.find or scenario.find
    if not find or ":" not in find:
        return _fail("no predicate: pass --find loc:symbol or a [search] section")
    loc, symbol = find.split(":", 1)
    depth = args.depth if args.depth is not None else scenario.depth
    try:
        result = search_reachable(
            scenario.state, scenario.rules, signal_predicate(loc, symbol), depth,
            max_states=args.max_states,
        )
    except BudgetExceeded as exc:
        print("BUDGET-EXCEEDED explored=%d frontier=%d" % (exc.explored, exc.frontier))
        return EXIT_BUDGET
    if result.path is None:
        print("NONE explored=%d exhausted=%s" % (result.explored, "yes" if result.exhausted else "no"))
        return EXIT_MISS
    body = "".join("%s\n" % label for label in result.path)
    _write("FOUND depth=%d explored=%d\n%s" % (len(result.path), result.explored, body), args.out)
    return EXIT_OK


def cmd_attractors(args: argparse.Namespace) -> int:
    network_path, fixed = args.network, {}
    try:
        with open(network_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return _fail("cannot read network %s: %s" % (network_path, exc.strerror))
    stripped = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    if any(ln == "engine boolnet" for ln in stripped if ln):
        try:
            scenario = load_scenario(network_path)
        except ScenarioError as exc:
            return _fail(str(exc))
        assert isinstance(scenario, BoolnetScenario)
        fixed = dict(scenario.inputs)
        network_path = scenario.network_path
        try:
            with open(network_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            return _fail("cannot read network %s: %s" % (network_path, exc.strerror))
    try:
        net = parse_network(text)
    except NetworkError as exc:
        return _fail("%s: %s" % (network_path, exc))
    if args.set:
        for chunk in args.set.split(","):
            if "=" not in chunk:
                return _fail("--set wants Var=0|1 pairs, got %r" % chunk)
            name, value = chunk.split("=", 1)
            if value.strip() not in ("0", "1"):
                return _fail("--set bits are 0 or 1, got %r" % chunk)
            fixed[name.strip()] = int(value)
    try:
        found = attractors(net, fixed=fixed)
    except NetworkError as exc:
        return _fail(str(exc))
    except RefuseExhaustive as exc:
        print("REFUSED %s" % exc)
        return EXIT_BUDGET
    total = sum(a.basin for a in found)
    lines = ["# variables: %s" % " ".join(net.variables)]
    if fixed:
        lines.append("# fixed: %s" % ",".join("%s=%d" % (k, v) for k, v in sorted(fixed.items())))
    lines.append("# %d attractors over %d states" % (len(found), total))
    for a in found:
        states = " -> ".join("".join(str(b) for b in s) for s in a.states)
        share = 100.0 * a.basin / total if total else 0.0
        lines.append("%s | len=%d | basin=%d (%.1f%%) | %s" % (a.kind, a.length, a.basin, share, states))
    _write("".join(ln + "\n" for ln in lines), args.out)
    if args.plot:
        from .plots import plot_basins

        plot_basins(found, args.plot)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(str(exc))
    if not isinstance(scenario, NcpsScenario):
        return _fail("'check' wants an ncps scenario")
    horizon = args.steps if args.steps is not None else scenario.horizon
    trace = run(scenario.world, horizon)
    report = check_properties(trace, scenario.theory)
    consistency = consistency_check(trace.final)
    text = report.render() + "%-12s %s\n" % (
        "consistency",
        "Consistent" if consistency else "Divergent",
    )
    _write(text, args.out)
    if args.plot:
        from .plots import plot_kb_sizes

        plot_kb_sizes(trace, args.plot)
    return EXIT_MISS if report.failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="immunet",
        description="simulators for immune-inspired distributed systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and emit its trace")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--steps", type=int, default=None, help="ticks (ncps) or rewrite steps")
    p_run.add_argument("--out", default=None, help="trace file (default stdout)")
    p_run.add_argument("--plot", default=None, help="render a knowledge-propagation figure")
    p_run.set_defaults(func=cmd_run)

    p_search = sub.add_parser("search", help="breadth-first reachability over a rewrite scenario")
    p_search.add_argument("scenario")
    p_search.add_argument("--find", default=None, help="target predicate loc:symbol")
    p_search.add_argument("--depth", type=int, default=None)
    p_search.add_argument("--max-states", type=int, default=100_000, help="state budget before giving up")
    p_search.add_argument("--out", default=None)
    p_search.set_defaults(func=cmd_search)

    p_attr = sub.add_parser("attractors", help="exhaustive attractor analysis of a boolean network")
    p_attr.add_argument("network", help="a .bn network file or an 'engine boolnet' scenario")
    p_attr.add_argument("--set", default=None, help="fix inputs, e.g. Lps=1,Mph=1,NK=1")
    p_attr.add_argument("--out", default=None)
    p_attr.add_argument("--plot", default=None, help="render a basin bar chart")
    p_attr.set_defaults(func=cmd_attractors)

    p_check = sub.add_parser("check", help="distributed-logic property report for an ncps scenario")
    p_check.add_argument("scenario")
    p_check.add_argument("--steps", type=int, default=None)
    p_check.add_argument("--out", default=None)
    p_check.add_argument("--plot", default=None)
    p_check.set_defaults(func=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
