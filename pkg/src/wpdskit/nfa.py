"""Unweighted automata over a stack alphabet, used to describe regular sets of
configurations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


@dataclass(frozen=True)
class Nfa:
    """A P-automaton without epsilon moves.

    ``initial`` maps a control state ``p`` to the automaton state where words
    for configurations ``p w`` start; control states absent from it have an
    empty language.
    """

    states: frozenset
    transitions: frozenset  # of (src, symbol, dst)
    initial: Mapping[str, str]
    final: frozenset

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        object.__setattr__(self, "final", frozenset(self.final))
        object.__setattr__(self, "initial", dict(self.initial))
        for s, _, t in self.transitions:
            if s not in self.states or t not in self.states:
                raise ValueError(f"transition ({s}, {t}) uses an unknown state")
        for p, s in self.initial.items():
            if s not in self.states:
                raise ValueError(f"initial state {s!r} for {p!r} is unknown")

    def __hash__(self):
        return hash((self.states, self.transitions, tuple(sorted(self.initial.items())), self.final))

    @property
    def alphabet(self) -> frozenset:
        return frozenset(x for _, x, _ in self.transitions)

    def successors(self, s, x):
        return [t for (a, y, t) in self.transitions if a == s and y == x]

    def accepts(self, p: str, stack: Iterable[str]) -> bool:
        if p not in self.initial:
            return False
        current = {self.initial[p]}
        for x in stack:
            current = {t for (s, y, t) in self.transitions if s in current and y == x}
            if not current:
                return False
        return bool(current & self.final)

    @classmethod
    def control_states_any_stack(cls, states: Iterable[str], alphabet: Iterable[str]) -> "Nfa":
        """Automaton for ``(q1 + ... + qn) Gamma*``."""
        states = list(states)
        alphabet = list(alphabet)
        return cls(
            frozenset(states),
            frozenset((q, x, q) for q in states for x in alphabet),
            {q: q for q in states},
            frozenset(states),
        )

    @classmethod
    def single(cls, state: str, stack: Iterable[str] = ()) -> "Nfa":
        """Automaton accepting exactly one configuration."""
        stack = list(stack)
        names = [state] + [f"{state}.{i + 1}" for i in range(len(stack))]
        trans = {(names[i], x, names[i + 1]) for i, x in enumerate(stack)}
        return cls(frozenset(names), frozenset(trans), {state: state}, frozenset([names[-1]]))

    @classmethod
    def empty(cls) -> "Nfa":
        return cls(frozenset(), frozenset(), {}, frozenset())
