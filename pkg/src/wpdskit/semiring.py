"""Idempotent semirings used by the solvers.

Values are plain Python objects: ``int`` / ``math.inf`` for the integer
semirings, :class:`fractions.Fraction` for max-times and ``bool`` for
reachability.  ``BOTTOM`` is the witness-taint marker; it is never an element
of a domain.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

INF = math.inf
NEG_INF = -math.inf


class SemiringError(ValueError):
    """Raised for operands that do not belong to the semiring in use."""


class _Bottom:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True, eq=False)
class Semiring:
    """An idempotent semiring ``(D, combine, extend, zero, one)``.

    ``add`` and ``mul`` are the raw operations on domain elements and skip all
    validation; the solvers call them directly.  :meth:`combine` and
    :meth:`extend` are the checked, ``BOTTOM``-aware variants.

    ``divergent`` is the extra element (``-inf`` for min-plus, ``+inf`` for
    max-plus) used to propagate witnesses; ``None`` when the semiring has no
    such extension.
    """

    name: str
    zero: Any
    one: Any
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    contains: Callable[[Any], bool]
    parse_literal: Callable[[str], Any] = field(repr=False, default=None)
    format_literal: Callable[[Any], str] = field(repr=False, default=str)
    divergent: Any = None
    commutative: bool = True

    def __repr__(self) -> str:
        return f"<Semiring {self.name}>"

    # -- checked operations -------------------------------------------------
    def check(self, x: Any) -> Any:
        if x is BOTTOM:
            return x
        if not self.contains(x):
            raise SemiringError(f"{x!r} is not an element of {self.name}")
        return x

    def combine(self, a: Any, b: Any) -> Any:
        self.check(a)
        self.check(b)
        if a is BOTTOM or b is BOTTOM:
            return BOTTOM
        return self.add(a, b)

    def extend(self, a: Any, b: Any) -> Any:
        self.check(a)
        self.check(b)
        return self._extend_tainted(a, b)

    def leq(self, a: Any, b: Any) -> bool:
        if a is BOTTOM or b is BOTTOM:
            raise SemiringError("BOTTOM is unordered")
        self.check(a)
        self.check(b)
        return self.add(a, b) == a

    # -- unchecked helpers for BOTTOM-carrying values -----------------------
    def _combine_tainted(self, a: Any, b: Any) -> Any:
        if a is BOTTOM or b is BOTTOM:
            return BOTTOM
        return self.add(a, b)

    def _extend_tainted(self, a: Any, b: Any) -> Any:
        # zero annihilates even a tainted operand
        if a is BOTTOM:
            return self.zero if b == self.zero else BOTTOM
        if b is BOTTOM:
            return self.zero if a == self.zero else BOTTOM
        return self.mul(a, b)

    def sum(self, values: Iterable[Any]) -> Any:
        acc = self.zero
        for v in values:
            acc = self._combine_tainted(acc, v)
        return acc

    def product(self, values: Iterable[Any]) -> Any:
        acc = self.one
        for v in values:
            acc = self._extend_tainted(acc, v)
        return acc

    def from_divergent(self, x: Any) -> Any:
        """Map the internal divergent element back to ``BOTTOM``."""
        if self.divergent is not None and x == self.divergent:
            return BOTTOM
        return x

    def to_divergent(self, x: Any) -> Any:
        if x is BOTTOM:
            if self.divergent is None:
                raise SemiringError(f"{self.name} has no divergent element")
            return self.divergent
        return x

    def parse(self, text: str) -> Any:
        text = text.strip()
        if text == "bot":
            return BOTTOM
        value = self.parse_literal(text)
        if not self.contains(value):
            raise SemiringError(f"literal {text!r} is not an element of {self.name}")
        return value

    def format(self, x: Any) -> str:
        if x is BOTTOM:
            return "bot"
        return self.format_literal(x)


# -- integer min-plus ---------------------------------------------------------

def _is_int(x: Any) -> bool:
    return type(x) is int


def _parse_int_literal(text: str) -> Any:
    if text in ("inf", "+inf"):
        return INF
    if text == "-inf":
        return NEG_INF
    try:
        return int(text, 10)
    except ValueError:
        raise SemiringError(f"bad integer literal {text!r}") from None


def _format_int(x: Any) -> str:
    if x == INF:
        return "inf"
    if x == NEG_INF:
        return "-inf"
    return str(x)


def _minplus_mul(a, b):
    if a == INF or b == INF:
        return INF
    return a + b


def _maxplus_mul(a, b):
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


MIN_PLUS = Semiring(
    name="minplus-int",
    zero=INF,
    one=0,
    add=min,
    mul=_minplus_mul,
    contains=lambda x: _is_int(x) or x == INF,
    parse_literal=_parse_int_literal,
    format_literal=_format_int,
    divergent=NEG_INF,
)

MAX_PLUS = Semiring(
    name="maxplus-int",
    zero=NEG_INF,
    one=0,
    add=max,
    mul=_maxplus_mul,
    contains=lambda x: _is_int(x) or x == NEG_INF,
    parse_literal=_parse_int_literal,
    format_literal=_format_int,
    divergent=INF,
)


# -- rational max-times -------------------------------------------------------

def _parse_rat(text: str) -> Fraction:
    num, sep, den = text.partition("/")
    try:
        if sep and int(den) <= 0:
            raise SemiringError(f"rational literal {text!r} needs a positive denominator")
        return Fraction(int(num), int(den)) if sep else Fraction(int(num))
    except ValueError:
        raise SemiringError(f"bad rational literal {text!r}") from None


def _rat_contains(x: Any) -> bool:
    return isinstance(x, Fraction) and 0 <= x <= 1


MAX_TIMES = Semiring(
    name="maxtimes-rat",
    zero=Fraction(0),
    one=Fraction(1),
    add=max,
    mul=lambda a, b: a * b,
    contains=_rat_contains,
    parse_literal=_parse_rat,
    format_literal=str,
)


# -- boolean reachability -----------------------------------------------------

def _parse_bool(text: str) -> bool:
    table = {"true": True, "1": True, "reachable": True,
             "false": False, "0": False, "unreachable": False}
    try:
        return table[text.lower()]
    except KeyError:
        raise SemiringError(f"bad boolean literal {text!r}") from None


BOOL = Semiring(
    name="bool",
    zero=False,
    one=True,
    add=lambda a, b: a or b,
    mul=lambda a, b: a and b,
    contains=lambda x: type(x) is bool,
    parse_literal=_parse_bool,
    format_literal=lambda x: "true" if x else "false",
)

SEMIRINGS = {s.name: s for s in (MIN_PLUS, MAX_PLUS, MAX_TIMES, BOOL)}


def get_semiring(name: str) -> Semiring:
    try:
        return SEMIRINGS[name]
    except KeyError:
        raise SemiringError(
            f"unknown semiring {name!r}; expected one of {', '.join(SEMIRINGS)}"
        ) from None


# -- axiom checking -----------------------------------------------------------

@dataclass(frozen=True)
class AxiomResult:
    name: str
    passed: bool
    counterexample: tuple | None = None


def axiom_suite(semiring: Semiring, samples: Sequence[Any]) -> dict[str, AxiomResult]:
    """Exhaustively check the semiring laws over all sample triples.

    Returns one :class:`AxiomResult` per law, keyed by name.  Failing laws carry
    the first counterexample found in ``itertools.product`` order.
    """
    if not samples:
        raise ValueError("need at least one sample")
    S = semiring
    add, mul, zero, one = S.add, S.mul, S.zero, S.one
    pairs = list(itertools.product(samples, repeat=2))
    triples = list(itertools.product(samples, repeat=3))

    def first(items, pred):
        for item in items:
            if not pred(*item):
                return item
        return None

    nz = [x for x in samples if x != zero]
    checks = {
        "combine_associative": (triples, lambda a, b, c: add(add(a, b), c) == add(a, add(b, c))),
        "combine_commutative": (pairs, lambda a, b: add(a, b) == add(b, a)),
        "combine_identity": ([(a,) for a in samples], lambda a: add(a, zero) == a == add(zero, a)),
        "combine_idempotent": ([(a,) for a in samples], lambda a: add(a, a) == a),
        "extend_associative": (triples, lambda a, b, c: mul(mul(a, b), c) == mul(a, mul(b, c))),
        "extend_identity": ([(a,) for a in samples], lambda a: mul(a, one) == a == mul(one, a)),
        "distributive": (
            triples,
            lambda a, b, c: mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
            and mul(add(a, b), c) == add(mul(a, c), mul(b, c)),
        ),
        "annihilation": ([(a,) for a in samples], lambda a: mul(a, zero) == zero == mul(zero, a)),
        "total_order": (pairs, lambda a, b: add(a, b) == a or add(a, b) == b),
        "preserves_inequality": (
            list(itertools.product(nz, repeat=3)),
            lambda a, b, c: a == b or mul(a, c) != mul(b, c),
        ),
    }
    report = {}
    for name, (items, pred) in checks.items():
        cex = first(items, pred)
        report[name] = AxiomResult(name, cex is None, cex)
    return report
