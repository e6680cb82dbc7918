import itertools
import logging
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import pushing_loop
from oracles import configurations, lazy_iterate, pop_sequence_bounds, random_wpds
from wpdskit.fixpoint import Monomial, kleene_iterates
from wpdskit.nfa import Nfa
from wpdskit.semiring import BOTTOM, INF, MIN_PLUS
from wpdskit.wpds import (BOTTOM_MARK, POST_FINAL, Configuration, Rule, StateSpaceExceeded,
                          Wpds, WpdsError, brute_force_movp, build_post_star_system,
                          build_pre_star_system, movp, normalize, path_weight,
                          reduce_regular_target, reverse_wpds, solve_post_star,
                          solve_pre_star, step)

C = Configuration.parse


def test_step(loop):
    out = step(loop, C("p X"))
    assert {(r.q, r.rhs, r.weight, str(c)) for r, c in out} == {
        ("q", ("Y",), 1, "q Y"), ("p", ("X", "Y"), 1, "p X Y")}
    assert step(loop, C("q")) == []
    assert [(r.weight, str(c)) for r, c in step(loop, C("q Y Y"))] == [(-2, "q Y")]


def test_configuration_parse_and_print():
    c = C("p X Y")
    assert c == Configuration("p", ("X", "Y")) and str(c) == "p X Y"
    with pytest.raises(WpdsError):
        C("   ")


def test_validation():
    with pytest.raises(WpdsError):
        Wpds(MIN_PLUS, ("p",), ("X",), (Rule("p", "X", 1, "r"),))
    with pytest.raises(WpdsError):
        Wpds(MIN_PLUS, ("p",), ("X",), (Rule("p", "X", 1, "p", ("Z",)),))


def test_zero_weight_rule_dropped(caplog):
    with caplog.at_level(logging.WARNING):
        w = Wpds(MIN_PLUS, ("p",), ("X",), (Rule("p", "X", INF, "p"), Rule("p", "X", 1, "p")))
    assert len(w.rules) == 1
    assert "zero weight" in caplog.text


def test_normalize_splits_long_rules():
    w = Wpds(MIN_PLUS, ("p",), ("X", "Y", "Z"), (Rule("p", "X", 3, "p", ("Y", "Y", "Z")),))
    n = normalize(w)
    assert n.is_normalized
    assert set(n.rules) == {Rule("p", "X", 3, "p", ("%N1", "Z")), Rule("p", "%N1", 0, "p", ("Y", "Y"))}
    short = Wpds(MIN_PLUS, ("p", "q"), ("X", "Y"), (Rule("p", "X", 1, "q", ("Y",)), Rule("p", "X", 2, "q")))
    assert normalize(short) is short


def test_path_weight_replays(loop):
    r1, r2 = loop.rules_from("p", "X")[0], loop.rules_from("q", "Y")[0]
    assert path_weight(loop, C("p X"), [r1, r2]) == (-1, C("q"))
    with pytest.raises(WpdsError):
        path_weight(loop, C("p X"), [r2])


# -- pre* ------------------------------------------------------------------------

def test_pre_star_equations(loop):
    system, index = build_pre_star_system(loop, "q")
    i = index
    poly = set(system.polys[i[("p", "X", "p")]])
    assert poly == {
        Monomial((1, 0), (i[("q", "Y", "p")],)),
        Monomial((1, 0, 0), (i[("p", "X", "p")], i[("p", "Y", "p")])),
        Monomial((1, 0, 0), (i[("p", "X", "q")], i[("q", "Y", "p")])),
    }
    assert system.polys[i[("p", "Y", "p")]] == (Monomial((1,)),)
    assert system.polys[i[("q", "Y", "q")]] == (Monomial((-2,)),)


def test_pre_star_solution(loop):
    sol = solve_pre_star(loop, C("q"))
    assert sol.value(("p", "Y", "p")) == 1
    assert sol.value(("q", "Y", "q")) == -2
    assert sol.value(("p", "X", "q")) is BOTTOM
    for key in [("p", "X", "p"), ("q", "Y", "p"), ("p", "Y", "q")]:
        assert sol.value(key) == INF
    assert sol.witnesses == [("p", "X", "q")]


def test_pop_sequence_weights_descend(loop):
    system, index = build_pre_star_system(loop, "q")
    ks = kleene_iterates(system, 8)
    seen = [v[index[("p", "X", "q")]] for v in ks]
    distinct = [x for x, y in zip(seen[1:], seen) if x != y]
    assert distinct[:2] == [-1, -2]
    assert all(b < a for a, b in zip(distinct, distinct[1:]))


def test_movp_values(loop):
    sol = solve_pre_star(loop, "q")
    assert movp(sol, C("q Y")) == -2
    assert movp(sol, C("q Y Y")) == -4
    assert movp(sol, C("p X")) is BOTTOM
    assert movp(sol, C("q")) == 0
    with pytest.raises(WpdsError):
        movp(sol, C("r X"))


def test_no_pop_rules_gives_zero():
    w = Wpds(MIN_PLUS, ("p",), ("X",), (Rule("p", "X", 1, "p", ("X",)),))
    sol = solve_pre_star(w, "p")
    assert all(v == INF for v in sol.values.values())


def test_empty_rules_give_zero():
    w = Wpds(MIN_PLUS, ("p", "q"), ("X",), ())
    sol = solve_pre_star(w, "q")
    assert all(v == INF for v in sol.values.values())
    assert movp(sol, C("p X")) == INF


def test_pre_star_rejects_unnormalized():
    w = Wpds(MIN_PLUS, ("p",), ("X",), (Rule("p", "X", 1, "p", ("X", "X", "X")),))
    with pytest.raises(WpdsError):
        build_pre_star_system(w, "p")
    with pytest.raises(WpdsError):
        solve_pre_star(pushing_loop(), C("q Y"))


def test_brute_force_examples(loop):
    assert brute_force_movp(loop, C("p X"), C("q"), 3) == -1
    assert brute_force_movp(loop, C("p X"), C("q"), 6) == -2
    assert brute_force_movp(loop, C("q"), C("q"), 1) == 0


def test_brute_force_guard(loop):
    with pytest.raises(StateSpaceExceeded):
        brute_force_movp(loop, C("p X"), C("q"), 40, cap=5)


# -- regular targets ----------------------------------------------------------

def _min_into(wpds, start, accepts, max_len):
    best = INF
    frontier = {(start, 0)}
    for _ in range(max_len + 1):
        nxt = set()
        for c, w in frontier:
            if accepts(c):
                best = min(best, w)
            for r, c2 in step(wpds, c):
                nxt.add((c2, w + r.weight))
        frontier = nxt
    return best


def test_regular_target_any_stack(loop):
    nfa = Nfa.control_states_any_stack(["q"], loop.stack)
    reduced, goal = reduce_regular_target(loop, nfa)
    sol = solve_pre_star(reduced, goal)
    expected = _min_into(loop, C("q Y Y"), lambda c: nfa.accepts(c.state, c.stack), 8)
    assert expected == -4
    assert movp(sol, C("q Y Y")) == expected


def test_regular_target_identity(loop):
    reduced, goal = reduce_regular_target(loop, Nfa.single("q"))
    assert reduced is loop and goal == C("q")


def test_regular_target_empty(loop):
    reduced, goal = reduce_regular_target(loop, Nfa.empty())
    sol = solve_pre_star(reduced, goal)
    for c in configurations(loop, 2):
        if c.stack:
            assert movp(sol, c) == INF


def test_regular_target_alphabet_check(loop):
    bad = Nfa(frozenset({"q", "t"}), frozenset({("q", "Z", "t")}), {"q": "q"}, frozenset({"t"}))
    with pytest.raises(WpdsError):
        reduce_regular_target(loop, bad)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_regular_target_matches_search(rng):
    w = random_wpds(rng, max_push=1)
    q = rng.choice(w.states)
    X = rng.choice(w.stack)
    nfa = Nfa.single(q, (X,))
    reduced, goal = reduce_regular_target(w, nfa)
    sol = solve_pre_star(reduced, goal)
    for c in configurations(w, 2):
        if not c.stack:
            continue
        got = movp(sol, c)
        want = _min_into(w, c, lambda d: d == C(f"{q} {X}"), 10)
        if got is BOTTOM:
            assert want < INF
        else:
            assert got <= want


# -- reversal and post* ---------------------------------------------------------

def test_reverse_rules():
    w = Wpds(MIN_PLUS, ("p", "q"), ("X", "Y", "Z"), (
        Rule("p", "X", 5, "q", ("Y",)), Rule("p", "Y", 6, "q"), Rule("p", "Z", 7, "q", ("Y", "Z"))))
    rev = reverse_wpds(w)
    assert Rule("q", "Y", 5, "p", ("X",)) in rev.rules
    for Y in ("X", "Y", "Z", BOTTOM_MARK):
        assert Rule("q", Y, 6, "p", ("Y", Y)) in rev.rules
    assert Rule("q", "Y", 0, "q%Y") in rev.rules
    assert Rule("q%Y", "Z", 7, "p", ("Z",)) in rev.rules


def test_reverse_runs_backwards(loop):
    rev = reverse_wpds(loop)
    path = [loop.rules_from("p", "X")[1], loop.rules_from("p", "X")[0], loop.rules_from("q", "Y")[0]]
    w, end = path_weight(loop, C("p X"), path)
    back = brute_force_movp(rev, Configuration(end.state, end.stack + ("#",)), C("p X #"), 10)
    assert back <= w


def test_post_star_structure(loop):
    system, index = build_post_star_system(loop, C("p X"))
    src = index[("p", "X", POST_FINAL)]
    assert Monomial((0, 1), (src,)) in system.polys[index[("q", "Y", POST_FINAL)]]
    assert Monomial((0, 1), (src,)) in system.polys[index[("p%X", "Y", POST_FINAL)]]


def test_post_star_without_rules():
    w = Wpds(MIN_PLUS, ("p", "q"), ("X", "Y"), ())
    sol = solve_post_star(w, C("p X"))
    for key, v in sol.values.items():
        assert v == (0 if key == ("p", "X", POST_FINAL) else INF)


def test_post_star_source_checks(loop):
    with pytest.raises(WpdsError):
        build_post_star_system(loop, C("p X Y"))
    with pytest.raises(WpdsError):
        build_post_star_system(loop, C("r X"))


# -- randomized properties --------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_lazy_iterates_match_brute_force(rng):
    w = random_wpds(rng)
    target = C(rng.choice(w.states))
    for c in configurations(w, 2):
        for k in range(0, 6):
            assert lazy_iterate(w, target, c, k) == (brute_force_movp(w, c, target, k) if k else INF)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_pop_sequence_sandwich(rng):
    w = random_wpds(rng)
    system, index = build_pre_star_system(w, w.states[0])
    ks = kleene_iterates(system, 5)
    bounds = pop_sequence_bounds(w, 2 ** 5 - 1)
    for key, i in index.items():
        for k in range(1, 6):
            lo, hi = bounds[key][2 ** k - 1], bounds[key][k]
            assert lo <= ks[k][i] <= hi


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_equation_count_bound(rng):
    w = random_wpds(rng)
    system, _ = build_pre_star_system(w, w.states[0])
    heads = {(r.p, r.X) for r in w.rules} | {(r.q, r.rhs[0]) for r in w.rules if r.rhs}
    assert system.n <= len(w.states) * len(heads)


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_normalization_preserves_paths(rng):
    base = random_wpds(rng, max_push=3, max_rules=5)
    norm = normalize(base)
    m = max([len(r.rhs) for r in base.rules] + [2])
    for c, d in itertools.islice(itertools.product(configurations(base, 1), configurations(base, 2)), 40):
        if not c.stack:
            continue
        for L in (1, 3, 5):
            orig = brute_force_movp(base, c, d, L)
            assert orig <= brute_force_movp(norm, c, d, L)
            assert brute_force_movp(norm, c, d, (L - 1) * (m - 1) + 1) <= orig


def test_solutions_are_deterministic():
    rng = random.Random(3)
    for _ in range(10):
        w = random_wpds(rng)
        a = solve_pre_star(w, w.states[0], trace=True)
        b = solve_pre_star(w, w.states[0], trace=True)
        assert a.values == b.values and a.trace == b.trace
