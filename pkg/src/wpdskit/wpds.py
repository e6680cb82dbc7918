"""Weighted pushdown systems and their finite reachability equation systems."""
from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .fixpoint import (AllWitnesses, GreatestFixedPoint, Monomial, PolynomialSystem,
                       all_witnesses, safe_kleene)
from .nfa import Nfa
from .semiring import BOTTOM, Semiring, SemiringError

logger = logging.getLogger(__name__)

BOTTOM_MARK = "#"
POST_FINAL = "%f"
EPS = None  # epsilon label on automaton transitions / post* variables

_RESERVED = re.compile(r"[%#]")


class WpdsError(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    state: str
    stack: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stack", tuple(self.stack))

    @classmethod
    def parse(cls, text: str) -> "Configuration":
        parts = text.split()
        if not parts:
            raise WpdsError("empty configuration")
        return cls(parts[0], tuple(parts[1:]))

    def __str__(self) -> str:
        return " ".join((self.state,) + self.stack)


@dataclass(frozen=True)
class Rule:
    """``p X -> q rhs`` carrying ``weight``."""

    p: str
    X: str
    weight: Any
    q: str
    rhs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))

    @property
    def kind(self) -> str:
        return ("pop", "swap", "push")[len(self.rhs)] if len(self.rhs) <= 2 else "long"

    def apply(self, c: Configuration) -> Configuration:
        return Configuration(self.q, self.rhs + c.stack[1:])


@dataclass(frozen=True, eq=False)
class Wpds:
    semiring: Semiring
    states: tuple[str, ...]
    stack: tuple[str, ...]
    rules: tuple[Rule, ...]
    _index: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        S = self.semiring
        states = tuple(dict.fromkeys(self.states))
        stack = tuple(dict.fromkeys(self.stack))
        sset, gset = set(states), set(stack)
        kept = []
        for r in self.rules:
            if r.p not in sset or r.q not in sset:
                raise WpdsError(f"rule {format_rule(S, r)} uses an undeclared control state")
            if r.X not in gset or any(y not in gset for y in r.rhs):
                raise WpdsError(f"rule {format_rule(S, r)} uses an undeclared stack symbol")
            if r.weight is BOTTOM:
                raise SemiringError("rule weights cannot be BOTTOM")
            S.check(r.weight)
            if r.weight == S.zero:
                logger.warning("dropping rule %s: zero weight never contributes", format_rule(S, r))
                continue
            kept.append(r)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "stack", stack)
        object.__setattr__(self, "rules", tuple(dict.fromkeys(kept)))

    def __eq__(self, other):
        if not isinstance(other, Wpds):
            return NotImplemented
        return (self.semiring is other.semiring and self.states == other.states
                and self.stack == other.stack and self.rules == other.rules)

    def __hash__(self):
        return hash((self.semiring.name, self.states, self.stack, self.rules))

    @property
    def is_normalized(self) -> bool:
        return all(len(r.rhs) <= 2 for r in self.rules)

    def rules_from(self, p: str, X: str) -> list[Rule]:
        if not self._index:
            idx: dict = {}
            for r in self.rules:
                idx.setdefault((r.p, r.X), []).append(r)
            self._index.update(idx)
        return self._index.get((p, X), [])

    def check_configuration(self, c: Configuration) -> None:
        if c.state not in self.states:
            raise WpdsError(f"unknown control state {c.state!r}")
        for x in c.stack:
            if x not in self.stack:
                raise WpdsError(f"unknown stack symbol {x!r}")

    def with_semiring(self, semiring: Semiring, weight_of) -> "Wpds":
        """Same rule skeleton, weights recomputed by ``weight_of(rule)``."""
        rules = tuple(Rule(r.p, r.X, weight_of(r), r.q, r.rhs) for r in self.rules)
        return Wpds(semiring, self.states, self.stack, rules)


def format_rule(S: Semiring, r: Rule) -> str:
    rhs = " ".join((r.q,) + r.rhs)
    return f"{r.p} {r.X} -> {rhs} @ {S.format(r.weight)}"


def check_identifier(name: str) -> None:
    if not name or _RESERVED.search(name) or any(ch.isspace() for ch in name):
        raise WpdsError(f"invalid identifier {name!r}: '%' and '#' are reserved")


# -- normalisation and the step relation --------------------------------------

def normalize(wpds: Wpds) -> Wpds:
    """Split every rule with more than two pushed symbols.

    ``p X -d-> q Y1 .. Ym`` becomes ``p X -d-> q N Ym`` plus rules rewriting the
    fresh symbol ``N`` into ``Y1 .. Y(m-1)`` with weight one.
    """
    if wpds.is_normalized:
        return wpds
    S = wpds.semiring
    used = set(wpds.stack)
    counter = itertools.count(1)

    def fresh():
        while True:
            name = f"%N{next(counter)}"
            if name not in used:
                used.add(name)
                return name

    rules, extra = [], []
    for r in wpds.rules:
        if len(r.rhs) <= 2:
            rules.append(r)
            continue
        body, weight, head = r.rhs, r.weight, (r.p, r.X)
        while len(body) > 2:
            n = fresh()
            extra.append(n)
            rules.append(Rule(head[0], head[1], weight, r.q, (n, body[-1])))
            head, body, weight = (r.q, n), body[:-1], S.one
        rules.append(Rule(head[0], head[1], weight, r.q, body))
    return Wpds(S, wpds.states, wpds.stack + tuple(extra), tuple(rules))


def step(wpds: Wpds, c: Configuration) -> list[tuple[Rule, Configuration]]:
    if not c.stack:
        return []
    return [(r, r.apply(c)) for r in wpds.rules_from(c.state, c.stack[0])]


def path_weight(wpds: Wpds, start: Configuration, rules: Sequence[Rule]) -> tuple[Any, Configuration]:
    """Replay ``rules`` from ``start``; raises if a rule does not apply."""
    S = wpds.semiring
    c, w = start, S.one
    for r in rules:
        if not c.stack or (r.p, r.X) != (c.state, c.stack[0]) or r not in wpds.rules_from(r.p, r.X):
            raise WpdsError(f"rule {format_rule(S, r)} does not apply to {c}")
        c = r.apply(c)
        w = S.mul(w, r.weight)
    return w, c


# -- backward reachability (pop sequences) ------------------------------------

def pre_star_heads(wpds: Wpds) -> list[tuple[str, str]]:
    """Pairs ``p X`` occurring on either side of some rule, in rule order."""
    heads = {}
    for r in wpds.rules:
        heads[(r.p, r.X)] = None
        if r.rhs:
            heads[(r.q, r.rhs[0])] = None
    return list(heads)


def build_pre_star_system(wpds: Wpds, target: str | Configuration):
    """Equation system over pop-sequence variables ``[p X q]``.

    Returns the system and a map from ``(p, X, q)`` to variable index.  Triples
    whose ``p X`` never occurs in a rule are omitted (they are zero).
    """
    if not wpds.is_normalized:
        raise WpdsError("build_pre_star_system needs a normalized WPDS")
    target = _target_state(wpds, target)
    S = wpds.semiring
    one = S.one
    index: dict[tuple[str, str, str], int] = {}
    for p, X in pre_star_heads(wpds):
        for q in wpds.states:
            index[(p, X, q)] = len(index)
    polys: list[list[Monomial]] = [[] for _ in index]
    for (p, X, q), i in index.items():
        poly = polys[i]
        for r in wpds.rules_from(p, X):
            d = r.weight
            if not r.rhs:
                if r.q == q:
                    poly.append(Monomial((d,)))
            elif len(r.rhs) == 1:
                j = index.get((r.q, r.rhs[0], q))
                if j is not None:
                    poly.append(Monomial((d, one), (j,)))
            else:
                Y, Z = r.rhs
                for s in wpds.states:
                    j = index.get((r.q, Y, s))
                    k = index.get((s, Z, q))
                    if j is not None and k is not None:
                        poly.append(Monomial((d, one, one), (j, k)))
    names = tuple(f"[{p} {X} {q}]" for (p, X, q) in index)
    return PolynomialSystem(S, tuple(tuple(p) for p in polys), names), index


def _target_state(wpds: Wpds, target) -> str:
    if isinstance(target, Configuration):
        if target.stack:
            raise WpdsError("target must have an empty stack; use reduce_regular_target")
        target = target.state
    if target not in wpds.states:
        raise WpdsError(f"unknown target state {target!r}")
    return target


@dataclass(frozen=True)
class ReachSolution:
    """Solved reachability variables.

    ``values`` maps each generated variable key to its value (``BOTTOM`` for
    witnesses); missing keys are zero.  ``exact`` is false only for
    non-integer semirings where iteration diverged: there the diverging
    components are reported as ``BOTTOM`` and the rest carry the last iterate.
    """

    wpds: Wpds
    values: dict
    system: PolynomialSystem
    index: dict
    exact: bool = True
    trace: tuple | None = None
    evaluations: int = 0
    target: str | None = None
    source: Configuration | None = None

    def value(self, key) -> Any:
        return self.values.get(key, self.wpds.semiring.zero)

    @property
    def witnesses(self) -> list:
        return [k for k, v in self.values.items() if v is BOTTOM]


def _solve(system: PolynomialSystem, *, trace: bool, backend: str | None):
    """Greatest fixed point with witnesses as ``BOTTOM``; ``(values, exact,
    trace, evaluations)``."""
    S = system.semiring
    if S.divergent is not None:
        res = all_witnesses(system, trace=trace, backend=backend)
        return res.values, True, res.trace, res.evaluations
    out = safe_kleene(system, trace=trace, backend=backend)
    if isinstance(out, GreatestFixedPoint):
        return out.values, True, out.trace, out.evaluations
    prev = out.trace[-2] if out.trace else None
    if prev is None:
        again = safe_kleene(system, trace=True, backend=backend)
        prev = again.trace[-2]
    values = tuple(BOTTOM if a != b else b for a, b in zip(prev, out.last))
    return values, False, out.trace, out.evaluations


def solve_pre_star(wpds: Wpds, target: str | Configuration, *, trace: bool = False,
                   backend: str | None = None) -> ReachSolution:
    target = _target_state(wpds, target)
    system, index = build_pre_star_system(wpds, target)
    values, exact, tr, evals = _solve(system, trace=trace, backend=backend)
    return ReachSolution(
        wpds, {key: values[i] for key, i in index.items()}, system, index,
        exact, tr, evals, target=target)


def movp(solution: ReachSolution, c: Configuration, target: str | None = None) -> Any:
    """Meet over all paths from ``c`` to ``target`` with an empty stack, by
    summing over every sequence of intermediate control states."""
    wpds = solution.wpds
    S = wpds.semiring
    target = target or solution.target
    wpds.check_configuration(c)
    if target not in wpds.states:
        raise WpdsError(f"unknown target state {target!r}")
    if not c.stack:
        return S.one if c.state == target else S.zero
    n = len(c.stack)
    total = S.zero
    for mids in itertools.product(wpds.states, repeat=n - 1):
        seq = (c.state,) + mids + (target,)
        term = S.one
        for i, X in enumerate(c.stack):
            term = S._extend_tainted(term, solution.value((seq[i], X, seq[i + 1])))
        total = S._combine_tainted(total, term)
    return total


def reduce_regular_target(wpds: Wpds, targets: Nfa) -> tuple[Wpds, Configuration]:
    """Replace a regular target set by the single configuration ``%F``.

    Weight-one pop rules simulate ``targets`` on fresh control states.  Pop
    rules that end in a control state whose empty-stack configuration is a
    target get a twin ending in ``%F``.  The empty-stack configurations
    themselves cannot move, so their membership is left to the caller.
    """
    S = wpds.semiring
    if not targets.alphabet <= set(wpds.stack):
        raise WpdsError("target automaton alphabet is not a subset of the stack alphabet")
    unknown = set(targets.initial) - set(wpds.states)
    if unknown:
        raise WpdsError(f"target automaton names unknown control states {sorted(unknown)}")
    if (not targets.transitions and len(targets.initial) == 1
            and set(targets.initial.values()) <= targets.final):
        (p,) = targets.initial
        return wpds, Configuration(p)
    final_state = "%F"

    def sim(s):
        return f"%T.{s}"

    by_source: dict[str, list] = {}
    for s, X, t in sorted(targets.transitions):
        by_source.setdefault(s, []).append((X, t))
    sim_states = [sim(s) for s in sorted(targets.states)]
    rules = list(wpds.rules)
    for s in sorted(targets.states):
        for X, t in by_source.get(s, []):
            heads = [sim(s)] + [p for p, s0 in targets.initial.items() if s0 == s]
            for h in heads:
                rules.append(Rule(h, X, S.one, sim(t)))
                if t in targets.final:
                    rules.append(Rule(h, X, S.one, final_state))
    accepting_empty = {p for p, s0 in targets.initial.items() if s0 in targets.final}
    for r in wpds.rules:
        if not r.rhs and r.q in accepting_empty:
            rules.append(Rule(r.p, r.X, r.weight, final_state))
    new = Wpds(S, wpds.states + tuple(sim_states) + (final_state,), wpds.stack, tuple(rules))
    return new, Configuration(final_state)


def reverse_wpds(wpds: Wpds) -> Wpds:
    """A WPDS running ``wpds`` backwards on stacks closed by ``#``."""
    if not wpds.is_normalized:
        raise WpdsError("reverse_wpds needs a normalized WPDS")
    S = wpds.semiring
    aux, rules = [], []
    full = wpds.stack + (BOTTOM_MARK,)
    for r in wpds.rules:
        if len(r.rhs) == 1:
            rules.append(Rule(r.q, r.rhs[0], r.weight, r.p, (r.X,)))
        elif not r.rhs:
            for Y in full:
                rules.append(Rule(r.q, Y, r.weight, r.p, (r.X, Y)))
        else:
            Y, Z = r.rhs
            mid = aux_state(r.q, Y)
            if mid not in aux:
                aux.append(mid)
            rules.append(Rule(r.q, Y, S.one, mid))
            rules.append(Rule(mid, Z, r.weight, r.p, (r.X,)))
    return Wpds(S, wpds.states + tuple(aux), full, tuple(rules))


def aux_state(q: str, Y: str) -> str:
    return f"{q}%{Y}"


# -- forward reachability -----------------------------------------------------

def post_star_aux(wpds: Wpds) -> list[tuple[str, str]]:
    aux = {}
    for r in wpds.rules:
        if len(r.rhs) == 2:
            aux[(r.q, r.rhs[0])] = None
    return list(aux)


def build_post_star_system(wpds: Wpds, source: Configuration):
    """Forward equation system for paths from ``source = p_s X_s``.

    Each variable is keyed by the post* automaton transition it labels:
    ``(src, symbol or EPS, dst)`` where ``dst`` is ``POST_FINAL`` or an
    auxiliary state ``q%Y`` introduced by a push rule ``. -> q Y Z``.
    """
    if not wpds.is_normalized:
        raise WpdsError("build_post_star_system needs a normalized WPDS")
    wpds.check_configuration(source)
    if len(source.stack) != 1:
        raise WpdsError("source configuration must have exactly one stack symbol")
    S = wpds.semiring
    one = S.one
    ps, Xs = source.state, source.stack[0]
    aux = post_star_aux(wpds)
    under: dict[tuple[str, str], list[str]] = {a: [] for a in aux}
    for r in wpds.rules:
        if len(r.rhs) == 2 and r.rhs[1] not in under[(r.q, r.rhs[0])]:
            under[(r.q, r.rhs[0])].append(r.rhs[1])
    dests = [POST_FINAL] + [aux_state(*a) for a in aux]
    aux_of = {aux_state(*a): a for a in aux}

    index: dict[tuple, int] = {}
    for d in dests:
        for p in wpds.states:
            for X in wpds.stack:
                index[(p, X, d)] = len(index)
        for p in wpds.states:
            index[(p, EPS, d)] = len(index)
        for a in aux:
            for Y in under[a]:
                index[(aux_state(*a), Y, d)] = len(index)

    into: dict[tuple, list[Rule]] = {}
    for r in wpds.rules:
        into.setdefault((r.q,) + r.rhs, []).append(r)

    polys: list[list[Monomial]] = [[] for _ in index]

    def via(rule: Rule, d: str) -> Monomial | None:
        j = index.get((rule.p, rule.X, d))
        return None if j is None else Monomial((one, rule.weight), (j,))

    for key, i in index.items():
        src, X, d = key
        poly = polys[i]
        if src not in aux_of and X is not EPS:
            p = src
            if (d == POST_FINAL and (p, X) == (ps, Xs)) or d == aux_state(p, X):
                poly.append(Monomial((one,)))
            for r in into.get((p, X), []):
                m = via(r, d)
                if m is not None:
                    poly.append(m)
            for a in aux:
                j = index.get((aux_state(*a), X, d))
                k = index.get((p, EPS, aux_state(*a)))
                if j is not None and k is not None:
                    poly.append(Monomial((one, one, one), (j, k)))
        elif X is EPS:
            for r in into.get((src,), []):
                m = via(r, d)
                if m is not None:
                    poly.append(m)
        else:
            q, Y = aux_of[src]
            for r in into.get((q, Y, X), []):
                m = via(r, d)
                if m is not None:
                    poly.append(m)
    names = tuple(f"[{s} {x if x is not EPS else 'eps'} {d}]" for (s, x, d) in index)
    return PolynomialSystem(S, tuple(tuple(p) for p in polys), names), index


def solve_post_star(wpds: Wpds, source: Configuration, *, trace: bool = False,
                    backend: str | None = None) -> ReachSolution:
    system, index = build_post_star_system(wpds, source)
    values, exact, tr, evals = _solve(system, trace=trace, backend=backend)
    return ReachSolution(
        wpds, {key: values[i] for key, i in index.items()}, system, index,
        exact, tr, evals, source=source)


# -- brute force oracle -------------------------------------------------------

class StateSpaceExceeded(RuntimeError):
    pass


def brute_force_movp(wpds: Wpds, start: Configuration, goal: Configuration,
                     max_len: int, cap: int = 200_000) -> Any:
    """Combine of ``v(sigma)`` over every rule sequence ``sigma`` leading from
    ``start`` to ``goal`` with ``len(sigma) < max_len``.

    Paths are enumerated breadth-first; frontier entries that agree on both
    configuration and accumulated weight are merged, which leaves the result
    unchanged because combine is idempotent.
    """
    S = wpds.semiring
    total = S.zero
    frontier = {(start, S.one)}
    for length in range(max_len):
        for c, w in frontier:
            if c == goal:
                total = S.add(total, w)
        if length == max_len - 1:
            break
        nxt = set()
        for c, w in frontier:
            for r, c2 in step(wpds, c):
                nxt.add((c2, S.mul(w, r.weight)))
        if len(nxt) > cap:
            raise StateSpaceExceeded(f"frontier exceeded {cap} entries")
        frontier = nxt
        if not frontier:
            break
    return total
