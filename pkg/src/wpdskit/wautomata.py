"""Weighted automata over stack alphabets: construction from solved
reachability systems, accepted weights, Bellman-Ford and products."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from . import _kernels
from .nfa import Nfa
from .semiring import BOOL, BOTTOM, MAX_PLUS, MIN_PLUS, Semiring
from .wpds import (POST_FINAL, Configuration, ReachSolution, Wpds, normalize,
                   reduce_regular_target, solve_pre_star)



class _Unreachable:
    __slots__ = ()

    def __repr__(self):
        return "UNREACHABLE"


UNREACHABLE = _Unreachable()


@dataclass(frozen=True)
class Transition:
    src: str
    label: str | None  # None is epsilon
    weight: Any
    dst: str


@dataclass(frozen=True, eq=False)
class WAutomaton:
    semiring: Semiring
    states: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial: frozenset
    final: frozenset

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(dict.fromkeys(self.states)))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "final", frozenset(self.final))
        known = set(self.states)
        for t in self.transitions:
            if t.src not in known or t.dst not in known:
                raise ValueError(f"transition {t} uses an unknown state")
        if not (self.initial | self.final) <= known:
            raise ValueError("initial and final states must be declared")

    def __eq__(self, other):
        if not isinstance(other, WAutomaton):
            return NotImplemented
        return (self.semiring is other.semiring and self.states == other.states
                and set(self.transitions) == set(other.transitions)
                and self.initial == other.initial and self.final == other.final)

    def __hash__(self):
        return hash((self.semiring.name, self.states, frozenset(self.transitions)))

    @property
    def alphabet(self) -> frozenset:
        return frozenset(t.label for t in self.transitions if t.label is not None)

    @property
    def has_epsilon(self) -> bool:
        return any(t.label is None for t in self.transitions)


def from_pre_star(solution: ReachSolution, target: str | None = None) -> WAutomaton:
    """Automaton on the control states with one transition per non-zero
    pop-sequence variable; ``BOTTOM`` transitions are kept."""
    S = solution.wpds.semiring
    target = target or solution.target
    trans = [Transition(p, X, v, q) for (p, X, q), v in solution.values.items()
             if v is BOTTOM or v != S.zero]
    states = solution.wpds.states
    return WAutomaton(S, states, tuple(trans), frozenset(states), frozenset([target]))


def from_post_star(solution: ReachSolution) -> WAutomaton:
    """Automaton for the successors of the source; variables are transitions
    ``(src, symbol or epsilon, dst)``."""
    S = solution.wpds.semiring
    trans = [Transition(s, x, v, d) for (s, x, d), v in solution.values.items()
             if v is BOTTOM or v != S.zero]
    states = list(solution.wpds.states)
    for t in trans:
        for q in (t.src, t.dst):
            if q not in states:
                states.append(q)
    if POST_FINAL not in states:
        states.append(POST_FINAL)
    return WAutomaton(S, tuple(states), tuple(trans),
                      frozenset(solution.wpds.states), frozenset([POST_FINAL]))


# -- accepted weights ---------------------------------------------------------

def _eps_closure(a: WAutomaton) -> dict[str, dict[str, Any]]:
    """``closure[s][t]``: combine of epsilon-path weights from s to t (s to s
    includes the empty path)."""
    S = a.semiring
    eps = [t for t in a.transitions if t.label is None]
    closure = {s: {s: S.one} for s in a.states}
    if not eps:
        return closure
    for _ in range(len(a.states) + 1):
        changed = False
        for s in a.states:
            row = closure[s]
            for t in eps:
                if t.src in row:
                    w = S._extend_tainted(row[t.src], t.weight)
                    old = row.get(t.dst)
                    new = w if old is None else S._combine_tainted(old, w)
                    if new is not old and new != old:
                        row[t.dst] = new
                        changed = True
        if not changed:
            return closure
    raise ValueError("epsilon cycles with improving weights are not supported")


def _run(a: WAutomaton, start: Mapping[str, Any], word: Iterable[str], closure):
    S = a.semiring
    by_label: dict[tuple[str, str], list[Transition]] = {}
    for t in a.transitions:
        if t.label is not None:
            by_label.setdefault((t.src, t.label), []).append(t)

    def close(cur):
        out: dict[str, Any] = {}
        for s, w in cur.items():
            for t, cw in closure[s].items():
                v = S._extend_tainted(w, cw)
                out[t] = v if t not in out else S._combine_tainted(out[t], v)
        return out

    cur = close(dict(start))
    for x in word:
        nxt: dict[str, Any] = {}
        for s, w in cur.items():
            for t in by_label.get((s, x), ()):
                v = S._extend_tainted(w, t.weight)
                nxt[t.dst] = v if t.dst not in nxt else S._combine_tainted(nxt[t.dst], v)
        cur = close(nxt)
        if not cur:
            break
    return cur


def accepted_weight(a: WAutomaton, c: Configuration) -> Any:
    """Combine over accepting paths for ``c`` of the path weights, taken in
    traversal order; ``UNREACHABLE`` when no path accepts ``c``."""
    if c.state not in a.initial:
        return UNREACHABLE
    S = a.semiring
    cur = _run(a, {c.state: S.one}, c.stack, _eps_closure(a))
    hits = [w for s, w in cur.items() if s in a.final]
    if not hits:
        return UNREACHABLE
    return S.sum(hits)


def weight_or_zero(a: WAutomaton, w: Any) -> Any:
    return a.semiring.zero if w is UNREACHABLE else w


# -- Bellman-Ford -------------------------------------------------------------

@dataclass(frozen=True)
class ExtremalPaths:
    """Extremal accumulated weight from each initial state to any final state.

    ``values[p]`` is an integer, ``BOTTOM`` when an improving cycle makes the
    extremum unbounded, or ``UNREACHABLE`` when no final state can be reached.
    ``next_edge[s]`` is the transition that last improved ``s``.
    """

    mode: str
    values: dict
    next_edge: dict = field(repr=False)
    automaton: WAutomaton = field(repr=False)

    def path(self, state: str, limit: int | None = None) -> list[Transition]:
        """Follow recorded transitions from ``state`` until a state without
        one, or for at most ``limit`` steps (default: number of states)."""
        limit = len(self.automaton.states) if limit is None else limit
        out, s = [], state
        while s in self.next_edge and len(out) < limit:
            t = self.next_edge[s]
            out.append(t)
            s = t.dst
        return out


_MODES = {"shortest": MIN_PLUS, "longest": MAX_PLUS}


def bellman_ford_extremal(a: WAutomaton, mode: str = "shortest", *,
                          backend: str | None = None) -> ExtremalPaths:
    """Shortest weight (min-plus automata) or longest weight (max-plus
    automata) from every initial state to any final state, ignoring labels.

    ``BOTTOM`` transitions act as an unbounded edge in the direction of the
    mode.  Longest paths run as shortest paths on negated weights.
    """
    if mode not in _MODES:
        raise ValueError("mode must be 'shortest' or 'longest'")
    if a.semiring is not _MODES[mode]:
        raise ValueError(f"{mode} paths need a {_MODES[mode].name} automaton")
    sign = -1 if mode == "longest" else 1
    states = list(a.states)
    pos = {s: i for i, s in enumerate(states)}
    edges = [t for t in a.transitions if t.weight is BOTTOM or t.weight != a.semiring.zero]
    weights = [-math.inf if t.weight is BOTTOM else sign * t.weight for t in edges]
    targets = [pos[s] for s in sorted(a.final)]
    backend = _kernels.resolve_backend(backend)
    dist = succ = None
    if backend != "python":
        limit = _kernels.value_limit(2)
        if all(w == -math.inf or abs(w) <= limit for w in weights):
            src = np.asarray([pos[t.src] for t in edges], dtype=np.int64)
            dst = np.asarray([pos[t.dst] for t in edges], dtype=np.int64)
            w = np.asarray([_kernels.NEG if x == -math.inf else x for x in weights],
                           dtype=np.int64)
            d, sc, overflow = _kernels.bellman_ford_minplus(
                len(states), src, dst, w, np.asarray(targets, dtype=np.int64), limit, backend)
            if not overflow:
                dist = [math.inf if x == _kernels.INF else -math.inf if x == _kernels.NEG
                        else int(x) for x in d.tolist()]
                succ = sc.tolist()
    if dist is None:
        dist, succ = _bellman_ford_py(len(states), edges, weights, pos, targets)
    values = {}
    for s in sorted(a.initial):
        x = dist[pos[s]]
        values[s] = UNREACHABLE if x == math.inf else BOTTOM if x == -math.inf else sign * x
    next_edge = {s: edges[succ[pos[s]]] for s in states if succ[pos[s]] >= 0}
    return ExtremalPaths(mode, values, next_edge, a)


def _bellman_ford_py(n, edges, weights, pos, targets):
    dist = [math.inf] * n
    succ = [-1] * n
    for t in targets:
        dist[t] = 0
    pairs = [(pos[t.src], pos[t.dst], w) for t, w in zip(edges, weights)]

    def cand(d, w):
        if d == -math.inf or w == -math.inf:
            return -math.inf
        return d + w

    for _ in range(max(n - 1, 1)):
        changed = False
        for e, (u, v, w) in enumerate(pairs):
            if dist[v] == math.inf:
                continue
            c = cand(dist[v], w)
            if c < dist[u]:
                dist[u], succ[u], changed = c, e, True
        if not changed:
            break
    for e, (u, v, w) in enumerate(pairs):
        if dist[v] in (math.inf, -math.inf):
            continue
        if cand(dist[v], w) < dist[u]:
            dist[u], succ[u] = -math.inf, e
    for _ in range(n):
        changed = False
        for e, (u, v, w) in enumerate(pairs):
            if dist[v] == -math.inf and dist[u] != -math.inf:
                dist[u], succ[u], changed = -math.inf, e, True
        if not changed:
            break
    return dist, succ


# -- products and unweighted pre* ---------------------------------------------

def product_with_unweighted(a: WAutomaton, b: Nfa) -> WAutomaton:
    """Synchronised product; weights come from ``a`` and epsilon moves of
    ``a`` leave ``b`` in place.  A pair ``(p, b.initial[p])`` keeps the name
    ``p`` so the result stays an automaton over the same control states."""
    if any(x is None for _, x, _ in b.transitions):
        raise ValueError("the unweighted automaton must not have epsilon moves")
    by_src_b: dict[tuple[str, str], list[str]] = {}
    for s, x, t in b.transitions:
        by_src_b.setdefault((s, x), []).append(t)
    by_src_a: dict[str, list[Transition]] = {}
    for t in a.transitions:
        by_src_a.setdefault(t.src, []).append(t)

    names: dict[tuple[str, str], str] = {}
    initial = []
    for p in sorted(a.initial):
        if p in b.initial:
            names[(p, b.initial[p])] = p
            initial.append(p)

    def name(pair):
        if pair not in names:
            names[pair] = f"<{pair[0]},{pair[1]}>"
        return names[pair]

    todo = [(p, b.initial[p]) for p in initial]
    seen = set(todo)
    trans = []
    while todo:
        sa, sb = todo.pop()
        for t in by_src_a.get(sa, ()):
            if t.label is None:
                targets = [sb]
            else:
                targets = by_src_b.get((sb, t.label), [])
            for tb in targets:
                pair = (t.dst, tb)
                trans.append(Transition(name((sa, sb)), t.label, t.weight, name(pair)))
                if pair not in seen:
                    seen.add(pair)
                    todo.append(pair)
    ordered = sorted(seen, key=lambda pr: (names[pr] not in initial, names[pr]))
    states = [names[pr] for pr in ordered]
    final = [names[pr] for pr in ordered if pr[0] in a.final and pr[1] in b.final]
    trans.sort(key=lambda t: (t.src, t.label or "", t.dst))
    return WAutomaton(a.semiring, tuple(states), tuple(trans), frozenset(initial), frozenset(final))


def unweighted_pre_star(wpds: Wpds, targets: Nfa, *, backend: str | None = None) -> Nfa:
    """Automaton for every configuration from which ``targets`` is reachable,
    computed as a pre* solve over the Boolean semiring."""
    plain = normalize(wpds).with_semiring(BOOL, lambda r: True)
    reduced, goal = reduce_regular_target(plain, targets)
    sol = solve_pre_star(reduced, goal, backend=backend)
    trans = {(p, X, q) for (p, X, q), v in sol.values.items() if v is True}
    final = {goal.state}
    final |= {p for p, s in targets.initial.items() if s in targets.final}
    states = set(reduced.states)
    return Nfa(frozenset(states), frozenset(trans), {p: p for p in wpds.states}, frozenset(final))
