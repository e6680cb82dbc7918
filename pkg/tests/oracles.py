"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import random
from functools import lru_cache

from wpdskit.fixpoint import Monomial, PolynomialSystem
from wpdskit.semiring import INF, MIN_PLUS
from wpdskit.wpds import Configuration, Rule, Wpds

COEFFS = list(range(-3, 4)) + [INF]


# -- random instances ------------------------------------------------------------

def random_system(rng: random.Random, max_n: int = 3, max_degree: int = 2,
                  coeffs=COEFFS, max_monomials: int = 3) -> PolynomialSystem:
    n = rng.randint(1, max_n)
    polys = []
    for _ in range(n):
        monos = []
        for _ in range(rng.randint(1, max_monomials)):
            deg = rng.randint(0, max_degree)
            vars_ = tuple(rng.randrange(n) for _ in range(deg))
            cs = tuple(rng.choice(coeffs) for _ in range(deg + 1))
            monos.append(Monomial(cs, vars_))
        polys.append(tuple(monos))
    return PolynomialSystem(MIN_PLUS, tuple(polys))


def random_wpds(rng: random.Random, semiring=MIN_PLUS, max_states: int = 3,
                max_symbols: int = 4, max_rules: int = 8, weights=range(-2, 3),
                max_push: int = 2) -> Wpds:
    P = ("p", "q", "r")[:rng.randint(1, max_states)]
    G = ("X", "Y", "Z", "W")[:rng.randint(1, max_symbols)]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        k = rng.randint(0, max_push)
        rules.append(Rule(rng.choice(P), rng.choice(G), rng.choice(list(weights)),
                          rng.choice(P), tuple(rng.choice(G) for _ in range(k))))
    return Wpds(semiring, P, G, tuple(rules))


def configurations(wpds: Wpds, max_depth: int):
    for d in range(max_depth + 1):
        for stack in itertools.product(wpds.stack, repeat=d):
            for p in wpds.states:
                yield Configuration(p, stack)


# -- lazy iterates of the configuration-indexed equation system -----------------

def lazy_iterate(wpds: Wpds, target: Configuration, c: Configuration, k: int):
    """k-th Kleene iterate at ``c`` of the infinite system
    ``v(c) = [c = target] + sum over steps c -d-> c' of d * v(c')``."""
    S = wpds.semiring

    @lru_cache(maxsize=None)
    def it(conf: Configuration, k: int):
        if k == 0:
            return S.zero
        total = S.one if conf == target else S.zero
        if conf.stack:
            for r in wpds.rules_from(conf.state, conf.stack[0]):
                total = S.add(total, S.mul(r.weight, it(r.apply(conf), k - 1)))
        return total

    return it(c, k)


# -- pop sequences by length ------------------------------------------------------

def pop_sequence_bounds(wpds: Wpds, max_len: int):
    """``best[(p, X, q)][L]``: combine of ``v(sigma)`` over pop sequences
    ``p X => q`` with ``|sigma| <= L``, for ``L = 0 .. max_len``."""
    S = wpds.semiring
    P = wpds.states
    exact = {}  # (p, X, q, length) -> value
    for L in range(1, max_len + 1):
        for p, X, q in itertools.product(P, wpds.stack, P):
            total = S.zero
            for r in wpds.rules_from(p, X):
                if not r.rhs:
                    if L == 1 and r.q == q:
                        total = S.add(total, r.weight)
                elif len(r.rhs) == 1:
                    total = S.add(total, S.mul(r.weight, exact.get((r.q, r.rhs[0], q, L - 1), S.zero)))
                else:
                    Y, Z = r.rhs
                    for s in P:
                        for l1 in range(1, L - 1):
                            a = exact.get((r.q, Y, s, l1), S.zero)
                            if a == S.zero:
                                continue
                            b = exact.get((s, Z, q, L - 1 - l1), S.zero)
                            total = S.add(total, S.mul(r.weight, S.mul(a, b)))
            if total != S.zero:
                exact[(p, X, q, L)] = total
    best = {}
    for p, X, q in itertools.product(P, wpds.stack, P):
        acc, row = S.zero, [S.zero]
        for L in range(1, max_len + 1):
            acc = S.add(acc, exact.get((p, X, q, L), S.zero))
            row.append(acc)
        best[(p, X, q)] = row
    return best


# -- grammar words ----------------------------------------------------------------

def grammar_words(g, max_len: int) -> set[tuple[str, ...]]:
    """Every word of length at most ``max_len`` derivable from the start
    symbol, by a fixpoint over per-nonterminal word sets."""
    nts = set(g.nonterminals)
    words = {a: set() for a in nts}
    changed = True
    while changed:
        changed = False
        for a, rhs in g.productions:
            partial = {()}
            for x in rhs:
                options = words[x] if x in nts else {(x,)}
                partial = {u + v for u in partial for v in options if len(u) + len(v) <= max_len}
                if not partial:
                    break
            new = partial - words[a]
            if new:
                words[a] |= new
                changed = True
    return words[g.start]


def word_is_shape_balanced(g, word) -> tuple[bool, bool]:
    """(total weight is 0, every prefix is nonnegative)."""
    acc, prefixes_ok = 0, True
    for x in word:
        acc += g.weight(x)
        prefixes_ok = prefixes_ok and acc >= 0
    return acc == 0, prefixes_ok


def language_verdict(g, max_len: int = 10) -> tuple[bool, bool, bool]:
    """(language non-empty, property i holds, property ii holds) over words up
    to ``max_len``."""
    ws = grammar_words(g, max_len)
    checks = [word_is_shape_balanced(g, w) for w in ws]
    return bool(ws), all(a for a, _ in checks), all(b for _, b in checks)
