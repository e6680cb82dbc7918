"""Polynomial systems over idempotent semirings and safe Kleene iteration."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels
from .semiring import BOTTOM, MAX_PLUS, MIN_PLUS, Semiring, SemiringError

logger = logging.getLogger(__name__)

DEFAULT_ENUM_CAP = 10**6
# systems smaller than this are solved on the Python path; kernel dispatch
# overhead dominates below it
KERNEL_MIN_SIZE = 256


@dataclass(frozen=True)
class Var:
    """Reference to variable ``index`` inside a monomial under construction."""
    index: int


@dataclass(frozen=True)
class Monomial:
    """``coeffs[0] X[vars[0]] coeffs[1] ... X[vars[-1]] coeffs[-1]``."""

    coeffs: tuple
    vars: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.coeffs) != len(self.vars) + 1:
            raise ValueError("a monomial needs exactly one more coefficient than variables")

    @property
    def is_constant(self) -> bool:
        return not self.vars

    @classmethod
    def build(cls, semiring: Semiring, *factors) -> "Monomial":
        """Assemble a monomial from constants and :class:`Var` factors.

        Adjacent constants are multiplied; missing coefficients become one.
        """
        coeffs, vars_ = [semiring.one], []
        for f in factors:
            if isinstance(f, Var):
                vars_.append(f.index)
                coeffs.append(semiring.one)
            else:
                if f is BOTTOM:
                    raise SemiringError("BOTTOM cannot be a coefficient")
                coeffs[-1] = semiring.mul(coeffs[-1], semiring.check(f))
        return cls(tuple(coeffs), tuple(vars_))

    def operator_count(self, semiring: Semiring) -> int:
        # coefficients equal to one are implicit in the written form
        written = len(self.vars) + sum(1 for c in self.coeffs if c != semiring.one)
        return max(written - 1, 0)

    def evaluate(self, semiring: Semiring, v: Sequence[Any]) -> Any:
        mul, zero = semiring.mul, semiring.zero
        acc = self.coeffs[0]
        for x, a in zip(self.vars, self.coeffs[1:]):
            if acc == zero:
                return zero
            acc = mul(mul(acc, v[x]), a)
        return acc


@dataclass(frozen=True, eq=False)
class PolynomialSystem:
    """A vector of polynomials ``(f_1, ..., f_n)``; ``polys[i]`` is a tuple of
    monomials whose combine is ``f_i`` (the empty tuple denotes zero)."""

    semiring: Semiring
    polys: tuple[tuple[Monomial, ...], ...]
    names: tuple[str, ...] = ()
    _compiled: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.polys)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"X{i + 1}" for i in range(n)))
        elif len(self.names) != n:
            raise ValueError("names and polynomials differ in length")
        S = self.semiring
        for poly in self.polys:
            for m in poly:
                for c in m.coeffs:
                    if c is BOTTOM:
                        raise SemiringError("BOTTOM cannot be a coefficient")
                    S.check(c)
                for x in m.vars:
                    if not 0 <= x < n:
                        raise ValueError(f"variable index {x} out of range for {n} variables")

    def __eq__(self, other):
        if not isinstance(other, PolynomialSystem):
            return NotImplemented
        return (self.semiring is other.semiring and self.polys == other.polys
                and self.names == other.names)

    def __hash__(self):
        return hash((self.semiring.name, self.polys, self.names))

    @property
    def n(self) -> int:
        return len(self.polys)

    @property
    def size(self) -> int:
        """Total number of combine and extend operators, ``K(f)``."""
        S = self.semiring
        total = 0
        for poly in self.polys:
            total += max(len(poly) - 1, 0)
            total += sum(m.operator_count(S) for m in poly)
        return total

    @property
    def max_degree(self) -> int:
        return max((len(m.vars) for p in self.polys for m in p), default=0)

    def index(self, name: str) -> int:
        return self.names.index(name)


def evaluate(system: PolynomialSystem, v: Sequence[Any]) -> tuple:
    """Return ``f(v)``."""
    if len(v) != system.n:
        raise ValueError(f"vector has {len(v)} components, system has {system.n}")
    if any(x is BOTTOM for x in v):
        raise SemiringError("cannot evaluate at a vector containing BOTTOM")
    return _evaluate_py(system, v)


def _evaluate_py(system: PolynomialSystem, v: Sequence[Any]) -> tuple:
    S = system.semiring
    add, zero = S.add, S.zero
    out = []
    for poly in system.polys:
        acc = zero
        for m in poly:
            acc = add(acc, m.evaluate(S, v))
        out.append(acc)
    return tuple(out)


# -- solve outcomes -----------------------------------------------------------

@dataclass(frozen=True)
class GreatestFixedPoint:
    values: tuple
    trace: tuple | None = None
    evaluations: int = 0

    is_fixpoint = True


@dataclass(frozen=True)
class Witness:
    """Kleene iteration does not terminate; ``index`` is the smallest witness
    component (0-based)."""

    index: int
    last: tuple = ()
    trace: tuple | None = None
    evaluations: int = 0

    is_fixpoint = False


@dataclass(frozen=True)
class AllWitnesses:
    witnesses: frozenset
    values: tuple
    trace: tuple | None = None
    evaluations: int = 0


# -- iteration engines --------------------------------------------------------

class _KernelOverflow(Exception):
    pass


class _PyEngine:
    def __init__(self, system: PolynomialSystem):
        self.system = system
        self.S = system.semiring

    def start(self):
        return tuple([self.S.zero] * self.system.n)

    def step(self, v):
        return _evaluate_py(self.system, v)

    def mark(self, v, idx):
        v = list(v)
        for i in idx:
            v[i] = self.S.divergent
        return tuple(v)

    def decode(self, v):
        return tuple(v)


class _KernelEngine:
    """Min-plus kernels; max-plus runs through them by negating everything."""

    def __init__(self, system: PolynomialSystem, backend: str):
        self.system = system
        self.backend = backend
        self.negate = system.semiring is MAX_PLUS
        key = "minplus"
        if key not in system._compiled:
            system._compiled[key] = _compile_minplus(system, self.negate)
        compiled = system._compiled[key]
        if compiled is None:
            raise _KernelOverflow
        self.owner, self.const, self.vars, self.limit = compiled

    def start(self):
        return np.full(self.system.n, _kernels.INF, dtype=np.int64)

    def step(self, v):
        out, overflow = _kernels.evaluate_minplus(
            v, self.owner, self.const, self.vars, self.system.n, self.limit, self.backend)
        if overflow:
            raise _KernelOverflow
        return out

    def mark(self, v, idx):
        v = v.copy()
        v[list(idx)] = _kernels.NEG
        return v

    def decode(self, v):
        S = self.system.semiring
        out = []
        for x in v.tolist():
            if x == _kernels.INF:
                out.append(S.zero)
            elif x == _kernels.NEG:
                out.append(S.divergent)
            else:
                out.append(-x if self.negate else x)
        return tuple(out)


def _compile_minplus(system: PolynomialSystem, negate: bool):
    S = system.semiring
    n = system.n
    width = max(system.max_degree, 1)
    limit = _kernels.value_limit(width + 1)
    owner, const, rows = [], [], []
    for i, poly in enumerate(system.polys):
        for m in poly:
            c = S.product(m.coeffs)
            if c == S.zero:
                continue
            c = -c if negate else c
            if abs(c) > limit:
                return None
            owner.append(i)
            const.append(c)
            rows.append(list(m.vars) + [n] * (width - len(m.vars)))
    return (
        np.asarray(owner, dtype=np.int64),
        np.asarray(const, dtype=np.int64),
        np.asarray(rows, dtype=np.int64).reshape(len(rows), width),
        limit,
    )


def _engine(system: PolynomialSystem, backend: str | None):
    backend = _kernels.resolve_backend(backend)
    kernel_ok = system.semiring in (MIN_PLUS, MAX_PLUS) and system.semiring.commutative
    if backend != "python" and kernel_ok:
        return backend
    return "python"


def _run(system, backend, body):
    """Run ``body(engine)`` on the requested engine, redoing it on exact
    Python integers if the int64 kernel would overflow."""
    choice = _engine(system, backend)
    if choice != "python":
        try:
            return body(_KernelEngine(system, choice))
        except _KernelOverflow:
            logger.debug("int64 kernel overflow, falling back to exact arithmetic")
    return body(_PyEngine(system))


def _auto_backend(system: PolynomialSystem, backend: str | None) -> str | None:
    if backend is None and system.size * max(system.n, 1) < KERNEL_MIN_SIZE * 8:
        return "python"
    return backend


def _equal(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, b))
    return a == b


def _diff(a, b) -> list[int]:
    if isinstance(a, np.ndarray):
        return np.flatnonzero(a != b).tolist()
    return [i for i, (x, y) in enumerate(zip(a, b)) if x != y]


def safe_kleene(system: PolynomialSystem, *, trace: bool = False,
                backend: str | None = None):
    """Run exactly ``n + 1`` Kleene rounds from the all-zero vector.

    Returns :class:`GreatestFixedPoint` when round ``n + 1`` repeats round
    ``n``, otherwise :class:`Witness` naming the smallest differing component.
    """
    backend = _auto_backend(system, backend)

    def body(eng):
        n = system.n
        v = eng.start()
        hist = [eng.decode(v)] if trace else None
        prev = v
        evals = 0
        for _ in range(n + 1):
            prev, v = v, eng.step(v)
            evals += 1
            if trace:
                hist.append(eng.decode(v))
        tr = tuple(hist) if trace else None
        if n == 0 or _equal(prev, v):
            return GreatestFixedPoint(eng.decode(prev), tr, evals)
        return Witness(_diff(prev, v)[0], eng.decode(v), tr, evals)

    return _run(system, backend, body)


def all_witnesses(system: PolynomialSystem, *, trace: bool = False,
                  backend: str | None = None) -> AllWitnesses:
    """Safe Kleene iteration extended to report every witness component.

    Integer semirings only.  After the ``n + 1`` plain rounds, iteration
    continues with every component that still changes pinned to the divergent
    element, which then propagates; each non-final round pins at least one new
    component, so at most ``n + 1`` extra rounds run.  Witnesses come back as
    ``BOTTOM``; every other component carries its exact greatest-fixed-point
    value.
    """
    S = system.semiring
    if S.divergent is None:
        raise SemiringError(f"all_witnesses needs an integer semiring, not {S.name}")
    backend = _auto_backend(system, backend)

    def body(eng):
        n = system.n
        v = eng.start()
        hist = [eng.decode(v)] if trace else None
        prev = v
        evals = 0
        for _ in range(n + 1):
            prev, v = v, eng.step(v)
            evals += 1
            if trace:
                hist.append(eng.decode(v))
        changed = _diff(prev, v) if n else []
        if changed:
            v = eng.mark(v, changed)
            if trace:
                hist.append(eng.decode(v))
            while True:
                nxt = eng.step(v)
                evals += 1
                changed = _diff(v, nxt)
                if not changed:
                    break
                v = eng.mark(nxt, changed)
                if trace:
                    hist.append(eng.decode(v))
        else:
            v = prev
        decoded = eng.decode(v)
        values = tuple(S.from_divergent(x) for x in decoded)
        found = frozenset(i for i, x in enumerate(values) if x is BOTTOM)
        return AllWitnesses(found, values, tuple(hist) if trace else None, evals)

    return _run(system, backend, body)


def kleene_iterates(system: PolynomialSystem, k: int) -> list[tuple]:
    """Plain Kleene sequence ``ks^0 .. ks^k`` on the exact Python path."""
    v = tuple([system.semiring.zero] * system.n)
    out = [v]
    for _ in range(k):
        v = _evaluate_py(system, v)
        out.append(v)
    return out


# -- derivation-tree oracle ---------------------------------------------------

class EnumerationCapExceeded(RuntimeError):
    pass


def enum_cap() -> int:
    raw = os.environ.get("WPDS_ENUM_CAP")
    return int(raw) if raw else DEFAULT_ENUM_CAP


def derivation_tree_value(system: PolynomialSystem, i: int, k: int,
                          cap: int | None = None) -> Any:
    """Combine of the yields of all derivation trees rooted at variable ``i``
    with height at most ``k``.

    Yields are enumerated tree by tree (memoised as sets of distinct yield
    values per variable and height bound) and never merged through the
    polynomial evaluation used by the solver.
    """
    if k < 1:
        raise ValueError("height bound must be at least 1")
    cap = enum_cap() if cap is None else cap
    S = system.semiring
    mul = S.mul
    budget = [cap]
    memo: dict[tuple[int, int], frozenset] = {}

    def yields(var: int, h: int) -> frozenset:
        key = (var, h)
        if key in memo:
            return memo[key]
        out = set()
        for m in system.polys[var]:
            if m.is_constant:
                out.add(m.coeffs[0])
                budget[0] -= 1
                continue
            if h <= 1:
                continue
            partial = {m.coeffs[0]}
            for x, a in zip(m.vars, m.coeffs[1:]):
                child = yields(x, h - 1)
                budget[0] -= len(partial) * len(child)
                if budget[0] < 0:
                    raise EnumerationCapExceeded(f"more than {cap} yields enumerated")
                partial = {mul(mul(p, y), a) for p in partial for y in child}
                if not partial:
                    break
            out |= partial
        if budget[0] < 0:
            raise EnumerationCapExceeded(f"more than {cap} yields enumerated")
        memo[key] = frozenset(out)
        return memo[key]

    return S.sum(yields(i, k))
