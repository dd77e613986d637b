"""Command-line front end.

Subcommands cover the whole pipeline: `extract` (network to
choreography), `project` (choreography to network), `simulate` (one
labelled run of either), `check-equiv` (bounded bisimulation),
`aes-dump` (the abstract reduction graph as DOT) and `roundtrip`
(project, re-extract, compare).

Exit codes are fixed for scripting: 0 success, 1 parse/usage trouble
(or a failed equivalence check), 2 extraction/projection impossible,
3 node budget exhausted.  Diagnostics go to stderr; results to stdout.
Runs with the same `--seed` produce byte-identical output.
"""

from __future__ import annotations

import argparse
import random
import sys

from .epp import ProjectionError, epp, unused_definitions
from .equivalence import (
    async_stepper, bounded_bisim, choreography_stepper, sample_states,
    sync_stepper,
)
from .extraction import (
    ASYNC, NotExtractable, ResourceLimit, SYNC, build_aes, extract, to_dot,
)
from .multicom import MulticomFailure
from .parsing import ParseError, parse_choreography, parse_network
from .printing import render_network, render_program, render_state
from .semantics import Queues, State, render_label, state
from .terms import Constant, InvalidTerm

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IMPOSSIBLE = 2
EXIT_RESOURCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None


def _parse_state(text: str | None) -> State:
    if not text:
        return State()
    entries = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            print(f"bad --state entry {item!r}: expected p=value", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        name, value = item.split("=", 1)
        try:
            entries.append((name.strip(), Constant(value.strip())))
        except InvalidTerm as exc:
            print(f"bad --state entry {item!r}: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_USAGE) from None
    return State(tuple(entries))


def _build_parser() -> _Parser:
    top = _Parser(prog="chorex",
                  description="choreography extraction and projection")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a choreography from a network")
    p.add_argument("file")
    p.add_argument("--async", dest="asynchronous", action="store_true",
                   help="group exchanges into asynchronous bundles")
    p.add_argument("--seed", type=int, default=None,
                   help="randomize choice order (deterministically)")
    p.add_argument("--lazy", action="store_true",
                   help="grow the reduction graph only as the search needs it")
    p.add_argument("--max-nodes", type=int, default=None)

    p = sub.add_parser("project", help="project a choreography onto processes")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true",
                   help="fail if the choreography defines unused procedures")

    p = sub.add_parser("simulate", help="print one labelled run")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--cc", action="store_true", help="input is a choreography")
    group.add_argument("--sp", action="store_true", help="input is a network")
    p.add_argument("file")
    p.add_argument("--async", dest="asynchronous", action="store_true")
    p.add_argument("--state", default=None, help="initial memory, e.g. p=v,q=w")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=None,
                   help="pick among enabled steps at random (seeded)")

    p = sub.add_parser("check-equiv",
                       help="bounded bisimulation between a choreography and a network")
    p.add_argument("--cc", required=True, metavar="FILE")
    p.add_argument("--sp", required=True, metavar="FILE")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--async", dest="asynchronous", action="store_true")
    p.add_argument("--state", default=None,
                   help="check only this initial memory instead of the sample")

    p = sub.add_parser("aes-dump", help="write the abstract reduction graph as DOT")
    p.add_argument("file")
    p.add_argument("--async", dest="asynchronous", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-nodes", type=int, default=None)

    p = sub.add_parser("roundtrip",
                       help="project, re-extract, and compare with the original")
    p.add_argument("file")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--async", dest="asynchronous", action="store_true")
    p.add_argument("--seed", type=int, default=None)

    return top


def _cmd_extract(args) -> int:
    net = parse_network(_read(args.file))
    prog = extract(net, mode=ASYNC if args.asynchronous else SYNC,
                   seed=args.seed, lazy=args.lazy, max_nodes=args.max_nodes)
    print(render_program(prog))
    return EXIT_OK


def _cmd_project(args) -> int:
    prog = parse_choreography(_read(args.file))
    if args.strict:
        unused = unused_definitions(prog)
        if unused:
            print(f"unused procedure definition(s): {', '.join(sorted(unused))}",
                  file=sys.stderr)
            return EXIT_IMPOSSIBLE
    print(render_network(epp(prog)))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    rng = random.Random(args.seed) if args.seed is not None else None
    sigma = _parse_state(args.state)
    if args.cc:
        if args.asynchronous:
            print("--async applies to --sp inputs only", file=sys.stderr)
            return EXIT_USAGE
        prog = parse_choreography(_read(args.file))
        step = choreography_stepper(prog)
        cfg = (prog.main, sigma)

        def describe(cfg):
            from .printing import render_choreography
            return [f"residual: {render_choreography(cfg[0])}",
                    f"state: {render_state(cfg[1])}"]
    else:
        net = parse_network(_read(args.file))
        if args.asynchronous:
            step = async_stepper()
            cfg = (net, sigma, Queues())
        else:
            step = sync_stepper()
            cfg = (net, sigma)

        def describe(cfg):
            return [f"residual: {render_network(cfg[0], compact=True)}",
                    f"state: {render_state(cfg[1])}"]

    for i in range(1, args.max_steps + 1):
        moves = step(cfg)
        if not moves:
            break
        label, cfg = moves[0] if rng is None else rng.choice(moves)
        print(f"step {i}: {render_label(label)}")
    for line in describe(cfg):
        print(line)
    return EXIT_OK


def _check_states(prog, net, depth, mode, states):
    for sigma in states:
        ok, trace = bounded_bisim(prog, net, sigma, depth, mode=mode)
        if not ok:
            return sigma, trace
    return None


def _cmd_check_equiv(args) -> int:
    prog = parse_choreography(_read(args.cc))
    net = parse_network(_read(args.sp))
    mode = "async" if args.asynchronous else "sync"
    states = [_parse_state(args.state)] if args.state else sample_states(prog)
    failure = _check_states(prog, net, args.depth, mode, states)
    if failure is None:
        print(f"EQUIVALENT (depth {args.depth}, {len(states)} initial state(s))")
        return EXIT_OK
    sigma, trace = failure
    print(f"NOT EQUIVALENT (initial state: {render_state(sigma)})")
    for line in trace:
        print(f"  {line}")
    return 1


def _cmd_aes_dump(args) -> int:
    net = parse_network(_read(args.file))
    graph = build_aes(net, mode=ASYNC if args.asynchronous else SYNC,
                      max_nodes=args.max_nodes)
    dot = to_dot(graph, title=args.file)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(dot)
    print(f"wrote {graph.node_count()} nodes, {graph.edge_count()} edges "
          f"to {args.output}")
    return EXIT_OK


def _cmd_roundtrip(args) -> int:
    prog = parse_choreography(_read(args.file))
    mode = ASYNC if args.asynchronous else SYNC
    net = epp(prog)
    extracted = extract(net, mode=mode, seed=args.seed)
    bisim_mode = "async" if args.asynchronous else "sync"
    failure = _check_states(extracted, net, args.depth, bisim_mode,
                            sample_states(prog))
    if failure is None:
        print("EQUIVALENT")
        return EXIT_OK
    sigma, trace = failure
    print(f"NOT EQUIVALENT (initial state: {render_state(sigma)})")
    for line in trace:
        print(f"  {line}")
    return 1


_COMMANDS = {
    "extract": _cmd_extract,
    "project": _cmd_project,
    "simulate": _cmd_simulate,
    "check-equiv": _cmd_check_equiv,
    "aes-dump": _cmd_aes_dump,
    "roundtrip": _cmd_roundtrip,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (NotExtractable, ProjectionError, MulticomFailure) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except ResourceLimit as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
