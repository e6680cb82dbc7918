"""Safety checks built on weighted reachability: memory-page balance,
begin/end correspondence, and shape-balancedness of context-free languages."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .nfa import Nfa
from .semiring import BOTTOM, MAX_PLUS, MIN_PLUS
from .wautomata import (UNREACHABLE, WAutomaton, bellman_ford_extremal,
                        from_post_star, product_with_unweighted, unweighted_pre_star)
from .wpds import (Configuration, Rule, Wpds, WpdsError, normalize, path_weight,
                   solve_post_star, step)

logger = logging.getLogger(__name__)

TAG_KINDS = ("alloc", "free", "begin", "end", "open", "close", "other")


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class Tag:
    kind: str = "other"
    arg: Any = None

    def __post_init__(self):
        if self.kind not in TAG_KINDS:
            raise AnalysisError(f"unknown tag kind {self.kind!r}")
        if self.kind in ("alloc", "free"):
            if type(self.arg) is not int or self.arg < 0:
                raise AnalysisError(f"{self.kind} needs a nonnegative integer order")
        elif self.kind in ("begin", "end"):
            if not isinstance(self.arg, str) or not self.arg:
                raise AnalysisError(f"{self.kind} needs a label")
        elif self.arg is not None:
            raise AnalysisError(f"tag {self.kind} takes no argument")

    @classmethod
    def parse(cls, text: str) -> "Tag":
        kind, _, arg = text.partition(":")
        if kind in ("alloc", "free"):
            try:
                return cls(kind, int(arg))
            except ValueError:
                raise AnalysisError(f"bad order in tag {text!r}") from None
        return cls(kind, arg or None)

    def __str__(self) -> str:
        return self.kind if self.arg is None else f"{self.kind}:{self.arg}"


@dataclass(frozen=True, eq=False)
class LabelledWpds:
    """Pushdown rules annotated with instruction tags.

    Weights stored in ``rules`` are ignored; every analysis derives its own
    integer weights from the tags.  ``labels`` lists the correspondence labels,
    including those declared without any tagged rule.
    """

    states: tuple[str, ...]
    stack: tuple[str, ...]
    rules: tuple[tuple[Rule, Tag], ...]
    labels: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple((r, t) for r, t in self.rules))
        used = {t.arg for _, t in self.rules if t.kind in ("begin", "end")}
        object.__setattr__(self, "labels", frozenset(self.labels) | used)
        self.weighted(lambda tag: 0)  # validates states and symbols

    def weighted(self, weight_of: Callable[[Tag], int]) -> Wpds:
        rules = [Rule(r.p, r.X, weight_of(t), r.q, r.rhs) for r, t in self.rules]
        return Wpds(MIN_PLUS, self.states, self.stack, tuple(rules))


def memory_weight(tag: Tag) -> int:
    if tag.kind == "alloc":
        return 2 ** tag.arg
    if tag.kind == "free":
        return -(2 ** tag.arg)
    return 0


def label_weight(label: str) -> Callable[[Tag], int]:
    def weight(tag: Tag) -> int:
        if tag.arg == label:
            return {"begin": 1, "end": -1}.get(tag.kind, 0)
        return 0
    return weight


def tag_weight(tag: Tag) -> int:
    return {"open": 1, "close": -1}.get(tag.kind, 0)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check.

    ``status`` is ``safe``, ``unsafe`` or ``diverges``; the latter means the
    extremal weight is unbounded but no concrete path was found within the
    search bounds.  ``path`` replays from ``start`` through ``wpds`` to the
    offending configuration.
    """

    status: str
    check: str
    evidence: dict = field(default_factory=dict)
    start: Configuration | None = None
    path: tuple[Rule, ...] | None = None
    wpds: Wpds | None = field(default=None, repr=False, compare=False)

    @property
    def safe(self) -> bool:
        return self.status == "safe"

    def replay(self) -> tuple[Any, Configuration]:
        if self.path is None or self.wpds is None or self.start is None:
            raise AnalysisError("verdict carries no replayable path")
        return path_weight(self.wpds, self.start, self.path)


# -- witness search -----------------------------------------------------------

def find_path(wpds: Wpds, start: Configuration,
              accept: Callable[[Configuration, Any], bool], *,
              max_depth: int = 64, max_nodes: int = 200_000) -> tuple[Rule, ...] | None:
    """Shortest rule sequence from ``start`` to a configuration ``c`` reached
    with weight ``w`` such that ``accept(c, w)``; ``None`` within the bounds."""
    S = wpds.semiring
    root = (start, S.one)
    parent: dict = {root: None}
    frontier = [root]
    for _ in range(max_depth + 1):
        nxt = []
        for node in frontier:
            c, w = node
            if accept(c, w):
                rules = []
                while parent[node] is not None:
                    node, r = parent[node]
                    rules.append(r)
                return tuple(reversed(rules))
            for r, c2 in step(wpds, c):
                child = (c2, S.mul(w, r.weight))
                if child not in parent:
                    parent[child] = (node, r)
                    nxt.append(child)
        if len(parent) > max_nodes or not nxt:
            return None
        frontier = nxt
    return None


def _config_of(path, state: str) -> Configuration:
    return Configuration(state, tuple(t.label for t in path if t.label is not None))


def _fmt(w) -> str:
    if w is BOTTOM:
        return "bot"
    if w is UNREACHABLE:
        return "unreachable"
    return str(w)


def _negative_check(check: str, wpds: Wpds, initial: Configuration,
                    automaton: WAutomaton, coreachable: Callable[[Configuration], bool] | None,
                    backend: str | None) -> Verdict:
    """Shared tail of the memory, correspondence and prefix checks: a
    configuration accepted by ``automaton`` with negative weight is a
    violation."""
    ext = bellman_ford_extremal(automaton, "shortest", backend=backend)
    bad = {p: v for p, v in ext.values.items()
           if v is BOTTOM or (v is not UNREACHABLE and v < 0)}
    if not bad:
        return Verdict("safe", check, {"minimum": {p: _fmt(v) for p, v in sorted(ext.values.items())}},
                       wpds=wpds)
    evidence: dict = {"minimum": {p: _fmt(v) for p, v in sorted(ext.values.items())}}

    def accept(c, w):
        return w < 0 and (coreachable is None or coreachable(c))

    path = find_path(wpds, initial, accept)
    if path is not None:
        w, c = path_weight(wpds, initial, path)
        evidence["configuration"], evidence["weight"] = str(c), w
        return Verdict("unsafe", check, evidence, initial, path, wpds)
    for p, v in sorted(bad.items()):
        if v is not BOTTOM:
            evidence["configuration"] = str(_config_of(ext.path(p), p))
            evidence["weight"] = v
            break
    status = "diverges" if all(v is BOTTOM for v in bad.values()) else "unsafe"
    return Verdict(status, check, evidence, initial, None, wpds)


def _post_star_automaton(wpds: Wpds, initial: Configuration, backend) -> WAutomaton:
    try:
        wpds.check_configuration(initial)
    except WpdsError as exc:
        raise AnalysisError(f"malformed initial configuration: {exc}") from None
    if len(initial.stack) != 1:
        raise AnalysisError("the initial configuration must be p X with one stack symbol")
    return from_post_star(solve_post_star(normalize(wpds), initial, backend=backend))


def check_memory_safety(w: LabelledWpds, initial: Configuration, *,
                        backend: str | None = None) -> Verdict:
    """Unsafe iff some configuration reachable from ``initial`` has freed
    more pages than it allocated."""
    wpds = w.weighted(memory_weight)
    a = _post_star_automaton(wpds, initial, backend)
    return _negative_check("alloc", wpds, initial, a, None, backend)


def check_correspondence(w: LabelledWpds, initial: Configuration, label: str, *,
                         backend: str | None = None) -> Verdict:
    """Unsafe iff some reachable configuration executed more ``end label``
    than ``begin label`` instructions."""
    if label not in w.labels:
        raise AnalysisError(f"unknown label {label!r}; declared: {sorted(w.labels)}")
    wpds = w.weighted(label_weight(label))
    a = _post_star_automaton(wpds, initial, backend)
    v = _negative_check("corr", wpds, initial, a, None, backend)
    v.evidence["label"] = label
    return v


# -- grammars -----------------------------------------------------------------

EPSILON = "@"


@dataclass(frozen=True)
class Cfg:
    """Context-free grammar over opening, closing and neutral terminals.

    Nonterminals are the left-hand sides of ``productions``; every other
    symbol is a terminal, neutral unless listed in ``opening`` or ``closing``.
    """

    start: str
    productions: tuple[tuple[str, tuple[str, ...]], ...]
    opening: frozenset = frozenset()
    closing: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "productions",
                           tuple(dict.fromkeys((a, tuple(b)) for a, b in self.productions)))
        object.__setattr__(self, "opening", frozenset(self.opening))
        object.__setattr__(self, "closing", frozenset(self.closing))
        if self.opening & self.closing:
            raise AnalysisError(f"tags both opening and closing: {sorted(self.opening & self.closing)}")
        if self.start not in self.nonterminals:
            raise AnalysisError(f"start symbol {self.start!r} has no production")
        clash = (self.opening | self.closing) & set(self.nonterminals)
        if clash:
            raise AnalysisError(f"symbols used as both tag and nonterminal: {sorted(clash)}")

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(a for a, _ in self.productions))

    @property
    def terminals(self) -> tuple[str, ...]:
        nts = set(self.nonterminals)
        seen = dict.fromkeys(sorted(self.opening | self.closing))
        for _, rhs in self.productions:
            for x in rhs:
                if x not in nts:
                    seen[x] = None
        return tuple(seen)

    def weight(self, terminal: str) -> int:
        if terminal in self.opening:
            return 1
        if terminal in self.closing:
            return -1
        return 0


def prune_useless(g: Cfg) -> Cfg:
    """Drop productions that mention non-generating or unreachable
    nonterminals, with a warning per dropped nonterminal."""
    nts = set(g.nonterminals)
    generating: set = set()
    changed = True
    while changed:
        changed = False
        for a, rhs in g.productions:
            if a not in generating and all(x not in nts or x in generating for x in rhs):
                generating.add(a)
                changed = True
    prods = [(a, rhs) for a, rhs in g.productions
             if a in generating and all(x not in nts or x in generating for x in rhs)]
    reach = {g.start}
    todo = [g.start]
    while todo:
        a = todo.pop()
        for b, rhs in prods:
            if b == a:
                for x in rhs:
                    if x in nts and x not in reach:
                        reach.add(x)
                        todo.append(x)
    kept = [(a, rhs) for a, rhs in prods if a in reach]
    for a in g.nonterminals:
        if a not in generating:
            logger.warning("nonterminal %s derives no word; its productions are ignored", a)
        elif a not in reach:
            logger.warning("nonterminal %s is unreachable from %s", a, g.start)
    if not any(a == g.start for a, _ in kept):
        # empty language; a self-loop keeps the start symbol defined
        kept = [(g.start, (g.start,))]
    return Cfg(g.start, tuple(kept), g.opening, g.closing)


RUN, DONE = "p", "f"
START, BOTTOM_SYMBOL = "%S", "%B"


@dataclass(frozen=True)
class GrammarPds:
    """Pushdown system accepting a grammar's language by final control state
    ``f``; ``initial`` is ``p %S``."""

    wpds: Wpds
    initial: Configuration
    final: tuple[str, ...]
    grammar: Cfg


def cfg_to_wpds(g: Cfg, semiring=MIN_PLUS) -> GrammarPds:
    """Leftmost-derivation pushdown system.

    ``p %S -> p S %B`` starts, ``p A -> p rhs`` expands a nonterminal,
    ``p a -> p`` reads a terminal with its tag weight and ``p %B -> f``
    accepts.  Productions weigh one (0 in the integer semirings).
    """
    g = prune_useless(g)
    terms = g.terminals
    stack = (START, BOTTOM_SYMBOL) + g.nonterminals + terms
    one = semiring.one
    rules = [Rule(RUN, START, one, RUN, (g.start, BOTTOM_SYMBOL))]
    rules += [Rule(RUN, a, one, RUN, rhs) for a, rhs in g.productions]
    rules += [Rule(RUN, t, g.weight(t), RUN) for t in terms]
    rules.append(Rule(RUN, BOTTOM_SYMBOL, one, DONE))
    wpds = Wpds(semiring, (RUN, DONE), stack, tuple(rules))
    return GrammarPds(wpds, Configuration(RUN, (START,)), (DONE,), g)


def check_shape_balancedness(g: Cfg, *, backend: str | None = None) -> Verdict:
    """Safe iff every word has tag weight 0 (property i) and every prefix of a
    word has nonnegative weight (property ii)."""
    pds = cfg_to_wpds(g)
    finals = set(pds.final)
    evidence: dict = {}
    for mode, semiring in (("shortest", MIN_PLUS), ("longest", MAX_PLUS)):
        plain = pds.wpds if semiring is MIN_PLUS else pds.wpds.with_semiring(MAX_PLUS, lambda r: r.weight)
        a = from_post_star(solve_post_star(normalize(plain), pds.initial, backend=backend))
        ext = bellman_ford_extremal(a, mode, backend=backend)
        values = {q: ext.values[q] for q in pds.final}
        evidence[f"{mode}_word"] = {q: _fmt(v) for q, v in values.items()}
        bad = [v for v in values.values() if v is not UNREACHABLE and v != 0]
        if bad:
            path = find_path(pds.wpds, pds.initial,
                             lambda c, w: c.state in finals and w != 0)
            if path is not None:
                w, c = path_weight(pds.wpds, pds.initial, path)
                evidence["word"] = _word_of(pds, path)
                evidence["weight"] = w
                status = "unsafe"
            else:
                status = "diverges" if all(v is BOTTOM for v in bad) else "unsafe"
            evidence["property"] = "i"
            return Verdict(status, "balance", evidence, pds.initial, path, pds.wpds)

    a = from_post_star(solve_post_star(normalize(pds.wpds), pds.initial, backend=backend))
    co = unweighted_pre_star(pds.wpds, Nfa.control_states_any_stack(pds.final, pds.wpds.stack),
                             backend=backend)
    prod = product_with_unweighted(a, co)
    inner = _negative_check("balance", pds.wpds, pds.initial, prod,
                            lambda c: co.accepts(c.state, c.stack), backend)
    if inner.safe:
        evidence["prefix_minimum"] = inner.evidence["minimum"]
        return Verdict("safe", "balance", evidence, pds.initial, None, pds.wpds)
    evidence.update(inner.evidence)
    evidence["property"] = "ii"
    if inner.path is not None:
        evidence["prefix"] = _word_of(pds, inner.path)
    return Verdict(inner.status, "balance", evidence, pds.initial, inner.path, pds.wpds)


def _word_of(pds: GrammarPds, path: Sequence[Rule]) -> str:
    """Terminals read along ``path``, space separated."""
    terms = set(pds.grammar.terminals)
    return " ".join(r.X for r in path if not r.rhs and r.X in terms)

