"""Text, JSON and DOT formats for equation systems, WPDS files, automaton
dumps and grammars."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .analyses import Cfg, EPSILON, LabelledWpds, Tag
from .fixpoint import Monomial, PolynomialSystem, Var
from .semiring import BOTTOM, MIN_PLUS, Semiring, SemiringError, get_semiring
from .wautomata import Transition, WAutomaton
from .wpds import Configuration, Rule, Wpds, WpdsError, check_identifier, format_rule

EPS_LABEL = "%eps"


class FormatError(ValueError):
    """Parse error with a 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message, self.line, self.col = message, line, col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + message)


def _lines(text: str):
    """Yield ``(line_no, column_offset, content)`` with comments removed and
    ``;`` treated as a line break."""
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        offset = 0
        for part in body.split(";"):
            stripped = part.strip()
            if stripped:
                yield no, offset + len(part) - len(part.lstrip()) + 1, stripped
            offset += len(part) + 1


def _tokens(content: str, col: int):
    """Whitespace separated tokens with their columns."""
    for m in re.finditer(r"\S+", content):
        yield m.group(), col + m.start()


def _semiring(name: str, line: int, col: int) -> Semiring:
    try:
        return get_semiring(name)
    except SemiringError as exc:
        raise FormatError(str(exc), line, col) from None


def _literal(S: Semiring, text: str, line: int, col: int) -> Any:
    try:
        return S.parse(text)
    except SemiringError as exc:
        raise FormatError(str(exc), line, col) from None


def _peek_json(text: str):
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return None


# -- equation systems ---------------------------------------------------------

_EQ_TOKEN = re.compile(r"\s*(?:(\()([^()]*)(\))|([|.=])|([^\s|.=()]+))")


def parse_equations(text: str, semiring: Semiring | None = None) -> PolynomialSystem:
    """``X1 = (-2) | X2 . X3`` per line or ``;``-separated statement.

    An optional ``semiring <name>`` statement selects the semiring; the
    ``semiring`` argument overrides it.  Variables are numbered by the order
    of their defining equations.
    """
    data = _peek_json(text)
    if data is not None:
        return equations_from_json(data, semiring)
    header: Semiring | None = None
    equations = []
    for line, col, content in _lines(text):
        if content.startswith("semiring ") or content == "semiring":
            parts = content.split()
            if len(parts) != 2:
                raise FormatError("expected 'semiring <name>'", line, col)
            header = _semiring(parts[1], line, col + content.index(parts[1]))
            continue
        equations.append((line, col, content))
    S = semiring or header or MIN_PLUS
    names: dict[str, int] = {}
    parsed = []
    for line, col, content in equations:
        toks = _tokenize_equation(content, line, col)
        if len(toks) < 3 or toks[1][0] != "=" or toks[0][0] != "name":
            raise FormatError("expected '<name> = <polynomial>'", line, col)
        name, ncol = toks[0][1], toks[0][2]
        if name in names:
            raise FormatError(f"variable {name} defined twice", line, ncol)
        names[name] = len(names)
        parsed.append((line, toks[2:]))
    polys = []
    for line, toks in parsed:
        polys.append(tuple(_parse_poly(S, toks, names, line)))
    return PolynomialSystem(S, tuple(polys), tuple(names))


def _tokenize_equation(content: str, line: int, col: int):
    toks, pos = [], 0
    while pos < len(content):
        m = _EQ_TOKEN.match(content, pos)
        if not m or m.end() == pos:
            raise FormatError(f"unexpected character {content[pos]!r}", line, col + pos)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group(1):
            toks.append(("const", m.group(2).strip(), col + start))
        elif m.group(4):
            toks.append((m.group(4), m.group(4), col + start))
        elif m.group(5):
            toks.append(("name", m.group(5), col + start))
        pos = m.end()
        if not content[pos:].strip():
            break
    return toks


def _parse_poly(S: Semiring, toks, names, line):
    monos, factors, expect_factor = [], [], True
    for kind, text, col in toks:
        if expect_factor:
            if kind == "const":
                value = _literal(S, text, line, col)
                if value is BOTTOM:
                    raise FormatError("'bot' cannot be a coefficient", line, col)
                factors.append(value)
            elif kind == "name":
                if text not in names:
                    raise FormatError(f"undefined variable {text}", line, col)
                factors.append(Var(names[text]))
            else:
                raise FormatError(f"expected a variable or (constant), got {text!r}", line, col)
            expect_factor = False
        elif kind == ".":
            expect_factor = True
        elif kind == "|":
            monos.append(Monomial.build(S, *factors))
            factors, expect_factor = [], True
        else:
            raise FormatError(f"expected '.' or '|', got {text!r}", line, col)
    if expect_factor:
        col = toks[-1][2] if toks else None
        raise FormatError("polynomial ends with an operator", line, col)
    monos.append(Monomial.build(S, *factors))
    return monos


def format_monomial(S: Semiring, m: Monomial, names) -> str:
    parts = []
    for i, c in enumerate(m.coeffs):
        if c != S.one:
            parts.append(f"({S.format(c)})")
        if i < len(m.vars):
            parts.append(names[m.vars[i]])
    return " . ".join(parts) if parts else f"({S.format(S.one)})"


def format_equations(system: PolynomialSystem) -> str:
    S = system.semiring
    out = [f"semiring {S.name}"]
    for name, poly in zip(system.names, system.polys):
        rhs = " | ".join(format_monomial(S, m, system.names) for m in poly)
        out.append(f"{name} = {rhs or '(' + S.format(S.zero) + ')'}")
    return "\n".join(out) + "\n"


def equations_to_json(system: PolynomialSystem) -> dict:
    S = system.semiring
    return {
        "semiring": S.name,
        "equations": [
            {"name": name,
             "monomials": [{"coeffs": [S.format(c) for c in m.coeffs], "vars": list(m.vars)}
                           for m in poly]}
            for name, poly in zip(system.names, system.polys)
        ],
    }


def equations_from_json(data: dict, semiring: Semiring | None = None) -> PolynomialSystem:
    try:
        S = semiring or get_semiring(data.get("semiring", MIN_PLUS.name))
        eqs = data["equations"]
        names = tuple(e["name"] for e in eqs)
        polys = tuple(
            tuple(Monomial(tuple(S.parse(c) for c in m["coeffs"]), tuple(m["vars"]))
                  for m in e["monomials"])
            for e in eqs)
        return PolynomialSystem(S, polys, names)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed equation JSON: {exc}") from None


# -- WPDS files ---------------------------------------------------------------

@dataclass
class WpdsFile:
    """Parsed WPDS file: the system, optional directives, and per-rule tags
    (``None`` for untagged files)."""

    wpds: Wpds
    target: Configuration | None = None
    source: Configuration | None = None
    tags: tuple[Tag, ...] | None = None
    labels: tuple[str, ...] = ()
    raw_rules: tuple[Rule, ...] = field(default=(), repr=False)

    def labelled(self) -> LabelledWpds:
        tags = self.tags or tuple(Tag() for _ in self.raw_rules)
        return LabelledWpds(self.wpds.states, self.wpds.stack,
                            tuple(zip(self.raw_rules, tags)), frozenset(self.labels))


def _idents(tokens, line):
    out = []
    for tok, col in tokens:
        try:
            check_identifier(tok)
        except WpdsError as exc:
            raise FormatError(str(exc), line, col) from None
        out.append(tok)
    return out


def parse_wpds(text: str, semiring: Semiring | None = None) -> WpdsFile:
    """Parse the line-oriented WPDS format; see :func:`format_wpds`."""
    header: Semiring | None = None
    states: list[str] = []
    stack: list[str] = []
    labels: list[str] = []
    rule_lines = []
    target = source = None
    tagged = False
    for line, col, content in _lines(text):
        toks = list(_tokens(content, col))
        head = toks[0][0]
        if head == "semiring":
            if len(toks) != 2:
                raise FormatError("expected 'semiring <name>'", line, col)
            header = _semiring(toks[1][0], line, toks[1][1])
        elif head == "states":
            states += _idents(toks[1:], line)
        elif head == "stack":
            stack += _idents(toks[1:], line)
        elif head == "labels":
            labels += _idents(toks[1:], line)
        elif head in ("target", "source"):
            if len(toks) < 2:
                raise FormatError(f"'{head}' needs a configuration", line, col)
            conf = (Configuration(toks[1][0], tuple(t for t, _ in toks[2:])), line, col)
            if head == "target":
                target = conf
            else:
                source = conf
        else:
            rule_lines.append((line, col, toks))
    S = semiring or header or MIN_PLUS
    sset, gset = set(states), set(stack)
    rules, tags = [], []
    for line, col, toks in rule_lines:
        r, tag = _parse_rule(S, toks, line, col, sset, gset)
        tagged = tagged or tag is not None
        rules.append(r)
        tags.append(tag or Tag())
    for conf in (target, source):
        if conf is None:
            continue
        c, line, col = conf
        if c.state not in sset:
            raise FormatError(f"unknown control state {c.state!r}", line, col)
        for x in c.stack:
            if x not in gset:
                raise FormatError(f"unknown stack symbol {x!r}", line, col)
    try:
        wpds = Wpds(S, tuple(states), tuple(stack), tuple(rules))
    except (WpdsError, SemiringError) as exc:
        raise FormatError(str(exc)) from None
    return WpdsFile(wpds, target and target[0], source and source[0],
                    tuple(tags) if tagged else None, tuple(dict.fromkeys(labels)), tuple(rules))


def _parse_rule(S, toks, line, col, states, stack):
    words = [t for t, _ in toks]
    if "->" not in words:
        raise FormatError(f"unknown directive {words[0]!r}", line, col)
    arrow = words.index("->")
    if arrow != 2:
        raise FormatError("rule must start with '<state> <symbol> ->'", line, col)
    end = len(words)
    weight, tag = S.one, None
    i = arrow + 1
    while i < len(words) and not words[i].startswith("@"):
        i += 1
    end = i
    while i < len(words):
        w, c = toks[i]
        if w == "@tag":
            if i + 1 >= len(words):
                raise FormatError("'@tag' needs kind[:arg]", line, c)
            try:
                tag = Tag.parse(words[i + 1])
            except ValueError as exc:
                raise FormatError(str(exc), line, toks[i + 1][1]) from None
            i += 2
        elif w == "@":
            if i + 1 >= len(words):
                raise FormatError("'@' needs a weight", line, c)
            weight = _literal(S, words[i + 1], line, toks[i + 1][1])
            if weight is BOTTOM:
                raise FormatError("rule weights cannot be 'bot'", line, toks[i + 1][1])
            i += 2
        else:
            raise FormatError(f"unexpected token {w!r} after the rule", line, c)
    if end - arrow - 1 < 1:
        raise FormatError("rule needs a target state", line, col)
    p, X = words[0], words[1]
    q, rhs = words[arrow + 1], tuple(words[arrow + 2:end])
    for name, c in ((p, toks[0][1]), (q, toks[arrow + 1][1])):
        if name not in states:
            raise FormatError(f"unknown control state {name!r}", line, c)
    for k, name in [(1, X)] + [(arrow + 2 + j, y) for j, y in enumerate(rhs)]:
        if name not in stack:
            raise FormatError(f"unknown stack symbol {name!r}", line, toks[k][1])
    return Rule(p, X, weight, q, rhs), tag


def format_wpds(wf: WpdsFile | Wpds) -> str:
    if isinstance(wf, Wpds):
        wf = WpdsFile(wf, raw_rules=wf.rules)
    w = wf.wpds
    S = w.semiring
    out = [f"semiring {S.name}", "states " + " ".join(w.states), "stack " + " ".join(w.stack)]
    if wf.labels:
        out.append("labels " + " ".join(wf.labels))
    rules = wf.raw_rules or w.rules
    tags = wf.tags or (None,) * len(rules)
    for r, t in zip(rules, tags):
        line = format_rule(S, r)
        if t is not None and wf.tags is not None:
            line += f" @tag {t}"
        out.append(line)
    if wf.target is not None:
        out.append(f"target {wf.target}")
    if wf.source is not None:
        out.append(f"source {wf.source}")
    return "\n".join(out) + "\n"


# -- automaton dumps ----------------------------------------------------------

def _label_text(label):
    return EPS_LABEL if label is None else label


def format_automaton(a: WAutomaton) -> str:
    S = a.semiring
    out = [f"semiring {S.name}"]
    for q in a.states:
        flags = [f for f, on in (("initial", q in a.initial), ("final", q in a.final)) if on]
        out.append(" ".join(["state", q] + flags))
    for t in sorted(a.transitions, key=_trans_key):
        line = f"trans {t.src} {_label_text(t.label)} {t.dst}"
        if t.weight is BOTTOM or t.weight != S.one:
            line += f" @ {S.format(t.weight)}"
        out.append(line)
    return "\n".join(out) + "\n"


def _trans_key(t: Transition):
    return (t.src, "" if t.label is None else t.label, t.dst)


def parse_automaton(text: str, semiring: Semiring | None = None) -> WAutomaton:
    data = _peek_json(text)
    if data is not None:
        return automaton_from_json(data, semiring)
    header = None
    states, initial, final, trans = [], set(), set(), []
    for line, col, content in _lines(text):
        toks = list(_tokens(content, col))
        head = toks[0][0]
        if head == "semiring":
            if len(toks) != 2:
                raise FormatError("expected 'semiring <name>'", line, col)
            header = _semiring(toks[1][0], line, toks[1][1])
        elif head == "state":
            if len(toks) < 2:
                raise FormatError("'state' needs a name", line, col)
            q = toks[1][0]
            states.append(q)
            for flag, c in toks[2:]:
                if flag == "initial":
                    initial.add(q)
                elif flag == "final":
                    final.add(q)
                else:
                    raise FormatError(f"unknown state flag {flag!r}", line, c)
        elif head == "trans":
            trans.append((line, toks))
        else:
            raise FormatError(f"unknown directive {head!r}", line, col)
    S = semiring or header or MIN_PLUS
    known = set(states)
    out = []
    for line, toks in trans:
        words = [t for t, _ in toks]
        if len(words) not in (4, 6) or (len(words) == 6 and words[4] != "@"):
            raise FormatError("expected 'trans <src> <label> <dst> [@ <weight>]'", line, toks[0][1])
        for k in (1, 3):
            if words[k] not in known:
                raise FormatError(f"unknown state {words[k]!r}", line, toks[k][1])
        weight = _literal(S, words[5], line, toks[5][1]) if len(words) == 6 else S.one
        label = None if words[2] == EPS_LABEL else words[2]
        out.append(Transition(words[1], label, weight, words[3]))
    try:
        return WAutomaton(S, tuple(states), tuple(out), frozenset(initial), frozenset(final))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def automaton_to_json(a: WAutomaton) -> dict:
    S = a.semiring
    return {
        "semiring": S.name,
        "states": [{"name": q, "initial": q in a.initial, "final": q in a.final}
                   for q in a.states],
        "transitions": [{"src": t.src, "label": t.label, "dst": t.dst,
                         "weight": S.format(t.weight)}
                        for t in sorted(a.transitions, key=_trans_key)],
    }


def automaton_from_json(data: dict, semiring: Semiring | None = None) -> WAutomaton:
    try:
        S = semiring or get_semiring(data.get("semiring", MIN_PLUS.name))
        states = [s["name"] for s in data["states"]]
        initial = {s["name"] for s in data["states"] if s.get("initial")}
        final = {s["name"] for s in data["states"] if s.get("final")}
        trans = tuple(Transition(t["src"], t.get("label"), S.parse(t.get("weight", S.format(S.one))),
                                 t["dst"]) for t in data["transitions"])
        return WAutomaton(S, tuple(states), trans, frozenset(initial), frozenset(final))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed automaton JSON: {exc}") from None


def _dot_id(name: str) -> str:
    return json.dumps(name, ensure_ascii=False)


def automaton_to_dot(a: WAutomaton) -> str:
    S = a.semiring
    out = ["digraph automaton {", "  rankdir=LR;"]
    for q in a.states:
        shape = "doublecircle" if q in a.final else "circle"
        out.append(f"  {_dot_id(q)} [shape={shape}];")
    for i, q in enumerate(sorted(a.initial)):
        out.append(f'  "__init{i}" [shape=point]; "__init{i}" -> {_dot_id(q)};')
    for t in sorted(a.transitions, key=_trans_key):
        w = "⊥" if t.weight is BOTTOM else S.format(t.weight)
        lab = "ε" if t.label is None else t.label
        out.append(f"  {_dot_id(t.src)} -> {_dot_id(t.dst)} [label={_dot_id(f'{lab} / {w}')}];")
    out.append("}")
    return "\n".join(out) + "\n"


# -- grammars -----------------------------------------------------------------

def parse_cfg(text: str) -> Cfg:
    """``start S``, ``open a b``, ``close c``, productions ``S -> a S b | @``."""
    start = None
    opening, closing, prods = [], [], []
    for line, col, content in _lines(text):
        toks = list(_tokens(content, col))
        head = toks[0][0]
        if head == "start":
            if len(toks) != 2:
                raise FormatError("expected 'start <nonterminal>'", line, col)
            start = toks[1][0]
        elif head == "open":
            opening += _idents(toks[1:], line)
        elif head == "close":
            closing += _idents(toks[1:], line)
        elif len(toks) >= 2 and toks[1][0] == "->":
            lhs = _idents(toks[:1], line)[0]
            alt: list[str] = []
            for word, c in toks[2:] + [("|", None)]:
                if word == "|":
                    prods.append((lhs, tuple(x for x in alt if x != EPSILON)))
                    if EPSILON in alt and len(alt) > 1:
                        raise FormatError("'@' must stand alone in an alternative", line, c)
                    alt = []
                else:
                    if word != EPSILON:
                        _idents([(word, c)], line)
                    alt.append(word)
        else:
            raise FormatError(f"unknown directive {head!r}", line, col)
    if start is None:
        raise FormatError("missing 'start <nonterminal>'")
    try:
        return Cfg(start, tuple(prods), frozenset(opening), frozenset(closing))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_cfg(g: Cfg) -> str:
    out = [f"start {g.start}"]
    if g.opening:
        out.append("open " + " ".join(sorted(g.opening)))
    if g.closing:
        out.append("close " + " ".join(sorted(g.closing)))
    for a, rhs in g.productions:
        out.append(f"{a} -> {' '.join(rhs) if rhs else EPSILON}")
    return "\n".join(out) + "\n"
