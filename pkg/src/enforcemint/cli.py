"""Command-line entry points.

Exit codes:

    0  success
    1  unreadable input, syntax error or malformed scenario config
    2  ill-formed or nondeterministic property
    3  property events outside the alphabet
    4  trace contains tau (erase it before checking)
    5  trace violates the property
    6  scenario expectations not met
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import __version__, gen
from .automata import export
from .calculus import ControllerError, parse_controller, validate
from .combinators import CombinatorEnv, CombinatorError
from .nfa import lang_member, lang_prefix
from .parser import ParseError, parse_property
from .props import events_of, inter_count, prop_size
from .runtime import Monitored, Network, SchedulerPolicy, run
from .synthesis import (
    AlphabetMismatch,
    IllFormedProperty,
    NondeterministicProperty,
    check_derivative_bound,
    derivative_bound,
    synthesize,
)
from .trace import Action, Kind, parse_action, parse_trace

log = logging.getLogger("enforcemint")

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY, EXIT_ALPHABET, EXIT_TAU, EXIT_VIOLATION, EXIT_EXPECT = range(7)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def read_alphabet(path: str) -> List[Action]:
    """Whitespace or comma separated actions; ``#`` starts a comment."""
    words = []
    for line in _read(path).splitlines():
        words += line.split("#", 1)[0].replace(",", " ").split()
    try:
        return [parse_action(w) for w in words]
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None


def load_property(path: str, alphabet=None, maxa: Optional[int] = None):
    env = None
    if maxa is not None:
        if alphabet is None:
            raise CliError("--maxa needs an alphabet to expand combinators")
        env = CombinatorEnv.from_alphabet(alphabet, maxa)
    try:
        return parse_property(_read(path), env)
    except ParseError as exc:
        raise CliError(f"{path}:{exc}") from None
    except CombinatorError as exc:
        raise CliError(f"{path}: {exc}") from None


def _synth_errors(fn):
    try:
        return fn()
    except (IllFormedProperty, NondeterministicProperty) as exc:
        raise CliError(str(exc), EXIT_PROPERTY) from None
    except AlphabetMismatch as exc:
        raise CliError(str(exc), EXIT_ALPHABET) from None


# -- commands ----------------------------------------------------------------------

def cmd_synth(args) -> int:
    alphabet = read_alphabet(args.alphabet)
    e = load_property(args.property, alphabet, args.maxa)
    a = _synth_errors(lambda: synthesize(e, alphabet))
    data = export(a, args.out)
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")
    states = len(a.reachable())
    print(f"states: {states}  bound: {derivative_bound(e)} (size {prop_size(e)}, intersections {inter_count(e)})",
          file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    alphabet = read_alphabet(args.alphabet) if args.alphabet else None
    try:
        t = parse_trace(_read(args.trace))
    except ValueError as exc:
        raise CliError(f"{args.trace}: {exc}") from None
    if any(a.kind is Kind.TAU for a in t):
        raise CliError("trace contains tau; erase tau actions before checking", EXIT_TAU)
    e = load_property(args.property, alphabet or sorted(set(t)), args.maxa)
    if lang_member(t, e):
        print("member")
        return EXIT_OK
    if lang_prefix(t, e):
        print("prefix (a strict prefix of some trace of the property)")
        return EXIT_OK
    print("violation")
    return EXIT_VIOLATION


def _load_controller(path: str, raw: bool):
    try:
        return parse_controller(_read(path), raw=raw)
    except ControllerError as exc:
        raise CliError(f"{path}: {exc}") from None


def cmd_simulate(args) -> int:
    enforce = {}
    for item in args.enforce or []:
        idx, _, prop = item.partition("=")
        if not idx.isdigit() or not prop:
            raise CliError(f"--enforce expects INDEX=PROPERTY_FILE, got {item!r}")
        enforce[int(idx)] = prop
    nodes = []
    for i, path in enumerate(args.controllers):
        P, defs = _load_controller(path, args.raw)
        alphabet = set(validate(P, defs, raw=True).alphabet)
        if args.alphabet:
            alphabet |= set(read_alphabet(args.alphabet))
        if i in enforce:
            maxa = args.maxa or validate(P, defs, raw=True).maxa
            e = load_property(enforce[i], sorted(alphabet), maxa)
            alphabet |= set(events_of(e))
            a = _synth_errors(lambda: synthesize(e, alphabet))
        else:
            from .automata import EditAutomaton
            a = EditAutomaton.go(alphabet)
        nodes.append(Monitored.start(a, P, defs))
    unknown = set(enforce) - set(range(len(nodes)))
    if unknown:
        raise CliError(f"--enforce names unknown node {min(unknown)}")
    trace = run(Network(tuple(nodes)), SchedulerPolicy(args.seed, args.tie_break), horizon=args.horizon,
                closed=args.closed)
    if args.format == "csv":
        out = trace.to_csv()
    else:
        out = " ".join(str(a) for a in trace.global_trace()) + "\n"
    _emit(out, args.output)
    if trace.stuck:
        log.warning("network stuck after %d ticks", trace.ticks)
    return EXIT_OK


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_scenario(args) -> int:
    from .swat.scenario import ConfigError, load_config, run_scenario

    try:
        cfg = load_config(args.config, scale=args.scale, horizon=args.horizon, seed=args.seed)
    except ConfigError as exc:
        raise CliError(f"{args.config}: {exc}") from None
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc.strerror}") from None
    try:
        report = run_scenario(cfg)
    except AlphabetMismatch as exc:
        raise CliError(str(exc), EXIT_ALPHABET) from None
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.config).stem
        (out / f"{stem}-levels.csv").write_text(report.levels_csv)
        (out / f"{stem}-actions.csv").write_text(report.actions_csv)
        (out / f"{stem}-report.json").write_text(report.to_json() + "\n")
    print(report.to_json())
    unmet = report.unmet(cfg.expect)
    for k, got in sorted(unmet.items()):
        print(f"expectation not met: {k} = {got}", file=sys.stderr)
    return EXIT_EXPECT if unmet else EXIT_OK


BENCH_COLUMNS = ["family", "n", "prop_size", "intersections", "states", "bound", "within_bound", "seconds"]


def bench_rows(family: str, lo: int, hi: int):
    from .trace import END, TICK, sens

    alphabet = [TICK, END, sens("a")]
    build = gen.nested_family if family == "nested" else gen.flat_family
    for n in range(lo, hi + 1):
        e = build(n)
        t0 = time.perf_counter()
        states, bound, ok = check_derivative_bound(e, alphabet)
        yield [family, n, prop_size(e), inter_count(e), states, bound, ok, round(time.perf_counter() - t0, 6)]


def format_table(rows, columns=BENCH_COLUMNS) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(columns, *rows)]
    return "\n".join("  ".join(str(x).rjust(w) for x, w in zip(r, widths)) for r in [columns, *rows]) + "\n"


def cmd_bench(args) -> int:
    rows = list(bench_rows(args.family, args.start, args.stop))
    if args.format == "csv":
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        w.writerows(rows)
        _emit(buf.getvalue(), args.output)
    else:
        _emit(format_table(rows), args.output)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enforcemint", description="Synthesize and run enforcing monitors for PLC controllers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="compile a property into an edit automaton")
    s.add_argument("property")
    s.add_argument("alphabet")
    s.add_argument("--out", choices=("json", "dot"), default="json", help="output format")
    s.add_argument("-o", "--output", help="write the automaton here instead of stdout")
    s.add_argument("--maxa", type=int, help="cycle bound used to expand combinators")
    s.set_defaults(fn=cmd_synth)

    c = sub.add_parser("check", help="check a trace against a property")
    c.add_argument("trace")
    c.add_argument("property")
    c.add_argument("--alphabet")
    c.add_argument("--maxa", type=int)
    c.set_defaults(fn=cmd_check)

    m = sub.add_parser("simulate", help="run controllers, optionally under enforcement")
    m.add_argument("controllers", nargs="+")
    m.add_argument("--enforce", action="append", metavar="INDEX=PROPERTY", help="monitor node INDEX (from 0)")
    m.add_argument("--alphabet", help="extra actions for the monitors' alphabet")
    m.add_argument("--maxa", type=int)
    m.add_argument("--horizon", type=int, default=10)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--tie-break", choices=("first_declared", "seeded_random"), default="first_declared")
    m.add_argument("--closed", action="store_true", help="hide unmatched channel actions")
    m.add_argument("--raw", action="store_true", help="accept controllers that break the cycle phases")
    m.add_argument("--format", choices=("csv", "text"), default="csv")
    m.add_argument("-o", "--output")
    m.set_defaults(fn=cmd_simulate)

    r = sub.add_parser("scenario", help="run a water-treatment scenario")
    r.add_argument("config")
    r.add_argument("--out", help="directory for the CSV logs and the JSON report")
    r.add_argument("--horizon", type=int)
    r.add_argument("--scale", type=float)
    r.add_argument("--seed", type=int)
    r.set_defaults(fn=cmd_scenario)

    b = sub.add_parser("bench", help="synthesis size and time for a property family")
    b.add_argument("--family", choices=("nested", "flat"), default="nested")
    b.add_argument("--start", type=int, default=1)
    b.add_argument("--stop", type=int, default=3)
    b.add_argument("--format", choices=("csv", "table"), default="csv")
    b.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the families are fixed")
    b.add_argument("-o", "--output")
    b.set_defaults(fn=cmd_bench)
    return p


def _setup_logging():
    level = os.environ.get("ENFORCEMINT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"enforcemint: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
