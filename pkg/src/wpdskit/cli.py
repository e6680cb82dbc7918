"""Command-line front end: ``wpdskit solve|pre|post|movp|check``.

Exit codes: 0 solved or safe, 1 input error, 2 witness or property violation.
"""
from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
from typing import Any

from .analyses import (AnalysisError, Verdict, check_correspondence, check_memory_safety,
                       check_shape_balancedness)
from .fixpoint import GreatestFixedPoint, all_witnesses, safe_kleene
from .formats import (FormatError, automaton_to_dot, automaton_to_json, format_automaton,
                      parse_automaton, parse_cfg, parse_equations, parse_wpds)
from .nfa import Nfa
from .semiring import BOTTOM, SemiringError, get_semiring
from .wautomata import UNREACHABLE, accepted_weight, from_post_star, from_pre_star
from .wpds import (Configuration, WpdsError, format_rule, normalize, reduce_regular_target,
                   solve_post_star, solve_pre_star)

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2

log = logging.getLogger("wpdskit")


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _stamp(args) -> str | None:
    if args.deterministic:
        return None
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _emit(text: str) -> None:
    sys.stdout.write(text)


def _semiring_arg(args):
    return get_semiring(args.semiring) if args.semiring else None


# -- solve ----------------------------------------------------------------------

def cmd_solve(args) -> int:
    system = parse_equations(_read(args.file), _semiring_arg(args))
    S = system.semiring
    out = safe_kleene(system, trace=args.trace, backend=args.backend)
    report: dict[str, Any] = {"semiring": S.name, "variables": list(system.names)}
    if args.trace:
        report["trace"] = [[S.format(x) for x in row] for row in out.trace]
    report["evaluations"] = out.evaluations
    if isinstance(out, GreatestFixedPoint):
        report["status"] = "fixed_point"
        report["values"] = {n: S.format(v) for n, v in zip(system.names, out.values)}
        code = EXIT_OK
    else:
        report["status"] = "witness"
        report["witness"] = system.names[out.index]
        if S.divergent is not None:
            allw = all_witnesses(system, backend=args.backend)
            report["witnesses"] = [system.names[i] for i in allw.witnesses]
            report["values"] = {n: S.format(v) for n, v in zip(system.names, allw.values)}
        code = EXIT_VIOLATION
    stamp = _stamp(args)
    if args.format == "json":
        if stamp:
            report["generated"] = stamp
        _emit(json.dumps(report, indent=2) + "\n")
        return code
    lines = []
    if args.trace:
        for k, row in enumerate(report["trace"]):
            lines.append(f"ks{k} = ({', '.join(row)})")
    if report["status"] == "fixed_point":
        lines.append("fixed point:")
    else:
        lines.append(f"witness: {report['witness']}")
        if "witnesses" in report:
            lines.append("all witnesses: " + " ".join(report["witnesses"]))
    for name, v in report.get("values", {}).items():
        lines.append(f"  {name} = {v}")
    lines.append(f"evaluations: {report['evaluations']}")
    if stamp:
        lines.append(f"# generated {stamp}")
    _emit("\n".join(lines) + "\n")
    return code


# -- pre / post -------------------------------------------------------------------

def _write_automaton(args, a, witnesses: int) -> int:
    stamp = _stamp(args)
    if args.format == "json":
        data = automaton_to_json(a)
        if stamp:
            data["generated"] = stamp
        _emit(json.dumps(data, indent=2) + "\n")
    elif args.format == "dot":
        text = automaton_to_dot(a)
        _emit(text + (f"// generated {stamp}\n" if stamp else ""))
    else:
        text = format_automaton(a)
        _emit(text + (f"# generated {stamp}\n" if stamp else ""))
    return EXIT_VIOLATION if witnesses else EXIT_OK


def _config(text: str, what: str) -> Configuration:
    try:
        return Configuration.parse(text)
    except WpdsError as exc:
        raise InputError(f"bad {what}: {exc}") from None


def cmd_pre(args) -> int:
    wf = parse_wpds(_read(args.file), _semiring_arg(args))
    target = _config(args.target, "target") if args.target else wf.target
    if target is None:
        raise InputError("no target: pass --target or add a 'target' line")
    wpds = normalize(wf.wpds)
    wpds.check_configuration(target)
    if target.stack:
        wpds, target = reduce_regular_target(wpds, Nfa.single(target.state, target.stack))
    sol = solve_pre_star(wpds, target, backend=args.backend)
    return _write_automaton(args, from_pre_star(sol), len(sol.witnesses))


def cmd_post(args) -> int:
    wf = parse_wpds(_read(args.file), _semiring_arg(args))
    source = _config(args.source, "source") if args.source else wf.source
    if source is None:
        raise InputError("no source: pass --source or add a 'source' line")
    sol = solve_post_star(normalize(wf.wpds), source, backend=args.backend)
    return _write_automaton(args, from_post_star(sol), len(sol.witnesses))


def cmd_movp(args) -> int:
    a = parse_automaton(_read(args.file), _semiring_arg(args))
    c = _config(args.configuration, "configuration")
    if c.state not in a.states:
        raise InputError(f"unknown control state {c.state!r}")
    unknown = [x for x in c.stack if x not in a.alphabet]
    if unknown and a.alphabet:
        raise InputError(f"symbols not in the automaton alphabet: {' '.join(unknown)}")
    w = accepted_weight(a, c)
    text = "unreachable" if w is UNREACHABLE else a.semiring.format(w)
    if args.format == "json":
        _emit(json.dumps({"configuration": str(c), "weight": text}) + "\n")
    else:
        _emit(text + "\n")
    return EXIT_VIOLATION if w is BOTTOM else EXIT_OK


# -- check ------------------------------------------------------------------------

def verdict_to_json(v: Verdict) -> dict:
    S = v.wpds.semiring if v.wpds is not None else None
    data: dict[str, Any] = {"check": v.check, "status": v.status}
    data["evidence"] = {k: _jsonable(x) for k, x in v.evidence.items()}
    if v.start is not None and v.path is not None:
        data["start"] = str(v.start)
        data["path"] = [format_rule(S, r) for r in v.path]
    return data


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(y) for k, y in x.items()}
    if x is BOTTOM:
        return "bot"
    if isinstance(x, (str, int)) and not isinstance(x, bool):
        return x
    return str(x)


def verdict_to_text(data: dict) -> str:
    lines = [f"check: {data['check']}", f"status: {data['status']}"]
    for key, value in data["evidence"].items():
        if isinstance(value, dict):
            inner = " ".join(f"{k}={v}" for k, v in value.items())
            lines.append(f"{key}: {inner}")
        else:
            lines.append(f"{key}: {value}")
    if "path" in data:
        lines.append(f"start: {data['start']}")
        lines.append("path:")
        lines += [f"  {r}" for r in data["path"]]
    return "\n".join(lines) + "\n"


def _emit_verdicts(args, verdicts: list[Verdict]) -> int:
    docs = [verdict_to_json(v) for v in verdicts]
    stamp = _stamp(args)
    if args.format == "json":
        payload: Any = docs[0] if len(docs) == 1 else {"verdicts": docs}
        if stamp:
            payload = dict(payload, generated=stamp)
        _emit(json.dumps(payload, indent=2) + "\n")
    else:
        text = "\n".join(verdict_to_text(d) for d in docs)
        _emit(text + (f"# generated {stamp}\n" if stamp else ""))
    return EXIT_OK if all(v.safe for v in verdicts) else EXIT_VIOLATION


def cmd_check(args) -> int:
    if args.kind == "balance":
        g = parse_cfg(_read(args.file))
        return _emit_verdicts(args, [check_shape_balancedness(g, backend=args.backend)])
    wf = parse_wpds(_read(args.file))
    initial = _config(args.initial, "initial configuration") if args.initial else wf.source
    if initial is None:
        raise InputError("no initial configuration: pass --initial or add a 'source' line")
    lw = wf.labelled()
    if args.kind == "alloc":
        return _emit_verdicts(args, [check_memory_safety(lw, initial, backend=args.backend)])
    labels = args.label or sorted(lw.labels)
    if not labels:
        raise InputError("no correspondence labels declared")
    return _emit_verdicts(
        args, [check_correspondence(lw, initial, ell, backend=args.backend) for ell in labels])


# -- argument parsing ------------------------------------------------------------

def _common(parser: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--semiring", default=d(None),
                        help="minplus-int, maxplus-int, maxtimes-rat or bool")
    parser.add_argument("--format", choices=("text", "json", "dot"), default=d("text"))
    parser.add_argument("--trace", action="store_true", default=d(False),
                        help="print every Kleene iterate")
    parser.add_argument("--deterministic", action="store_true", default=d(False),
                        help="omit the generation timestamp")
    parser.add_argument("--backend", choices=("numba", "numpy", "python"), default=d(None),
                        help="kernel backend (default: WPDSKIT_BACKEND or numba)")
    parser.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpdskit", description=__doc__.splitlines()[0])
    _common(parser, True)
    sub = parser.add_subparsers(dest="command", required=True)
    shared = argparse.ArgumentParser(add_help=False)
    _common(shared, False)

    p = sub.add_parser("solve", parents=[shared], help="solve an equation system")
    p.add_argument("file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pre", parents=[shared], help="pre* automaton of a WPDS")
    p.add_argument("file")
    p.add_argument("--target", help="target configuration, e.g. 'q' or 'q Y'")
    p.set_defaults(func=cmd_pre)

    p = sub.add_parser("post", parents=[shared], help="post* automaton of a WPDS")
    p.add_argument("file")
    p.add_argument("--source", help="source configuration 'p X'")
    p.set_defaults(func=cmd_post)

    p = sub.add_parser("movp", parents=[shared], help="accepted weight of a configuration")
    p.add_argument("file", help="automaton dump")
    p.add_argument("configuration", help="'p X Y' (state, then stack top first)")
    p.set_defaults(func=cmd_movp)

    p = sub.add_parser("check", parents=[shared], help="safety checks")
    p.add_argument("kind", choices=("alloc", "corr", "balance"))
    p.add_argument("file")
    p.add_argument("--initial", help="initial configuration 'p X'")
    p.add_argument("--label", action="append", help="correspondence label (repeatable)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.format == "dot" and args.command not in ("pre", "post"):
        print("error: --format dot applies to pre and post only", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {args.file}: {exc}", file=sys.stderr)
    except (InputError, WpdsError, SemiringError, AnalysisError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
