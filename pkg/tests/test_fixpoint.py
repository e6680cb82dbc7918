import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import descending_system
from oracles import random_system
from wpdskit.fixpoint import (AllWitnesses, EnumerationCapExceeded, GreatestFixedPoint,
                              Monomial, PolynomialSystem, Var, Witness, all_witnesses,
                              derivation_tree_value, evaluate, kleene_iterates, safe_kleene)
from wpdskit.semiring import BOOL, BOTTOM, INF, MAX_PLUS, MAX_TIMES, MIN_PLUS, SemiringError

BACKENDS = ["python", "numpy", "numba"]
TRACE = [(INF, INF, INF), (-2, INF, INF), (-2, INF, -2), (-2, -1, -2), (-3, -1, -2)]


def test_size_of_descending_system(system):
    assert system.size == 4


def test_evaluate_at_zero_vector(system):
    assert evaluate(system, (INF, INF, INF)) == (-2, INF, INF)


def test_evaluate_single_constant():
    S = MIN_PLUS
    sys1 = PolynomialSystem(S, ((Monomial.build(S, 5),),))
    assert evaluate(sys1, (INF,)) == (5,)


def test_evaluate_rejects_bad_vectors(system):
    with pytest.raises(ValueError):
        evaluate(system, (INF, INF))
    with pytest.raises(SemiringError):
        evaluate(system, (BOTTOM, INF, INF))


@pytest.mark.parametrize("backend", BACKENDS)
def test_descending_trace(system, backend):
    out = safe_kleene(system, trace=True, backend=backend)
    assert isinstance(out, Witness)
    assert out.index == 0
    assert list(out.trace) == TRACE
    assert out.evaluations == system.n + 1


@pytest.mark.parametrize("backend", BACKENDS)
def test_descending_all_witnesses(system, backend):
    out = all_witnesses(system, backend=backend)
    assert isinstance(out, AllWitnesses)
    assert out.witnesses == {0, 1, 2}
    assert out.values == (BOTTOM, BOTTOM, BOTTOM)


def test_constant_system_is_fixed_point():
    S = MIN_PLUS
    out = safe_kleene(PolynomialSystem(S, ((Monomial.build(S, 5),),)))
    assert isinstance(out, GreatestFixedPoint)
    assert out.values == (5,)


def test_nonnegative_cycle_converges():
    S = MIN_PLUS
    sys1 = PolynomialSystem(S, ((Monomial.build(S, Var(0), 1), Monomial.build(S, 3)),))
    out = safe_kleene(sys1)
    assert isinstance(out, GreatestFixedPoint) and out.values == (3,)


def test_empty_system():
    out = safe_kleene(PolynomialSystem(MIN_PLUS, ()))
    assert isinstance(out, GreatestFixedPoint) and out.values == ()


def test_rational_system_without_divergent_element():
    S = MAX_TIMES
    sys1 = PolynomialSystem(S, ((Monomial.build(S, Fraction(1, 2)), Monomial.build(S, Var(0), Fraction(1, 2))),))
    assert isinstance(safe_kleene(sys1), GreatestFixedPoint)
    with pytest.raises(SemiringError):
        all_witnesses(sys1)


def test_all_witnesses_keeps_finite_components():
    S = MIN_PLUS
    # X1 = X1 . (-1) | (0) diverges, X2 = (4) is finite, X3 = X1 diverges through X1
    sys1 = PolynomialSystem(S, (
        (Monomial.build(S, Var(0), -1), Monomial.build(S, 0)),
        (Monomial.build(S, 4),),
        (Monomial.build(S, Var(0)), Monomial.build(S, Var(1))),
    ))
    out = all_witnesses(sys1)
    assert out.values == (BOTTOM, 4, BOTTOM)
    assert out.evaluations <= 2 * (sys1.n + 1)


def test_maxplus_witness():
    S = MAX_PLUS
    sys1 = PolynomialSystem(S, ((Monomial.build(S, Var(0), 1), Monomial.build(S, 0)),))
    assert isinstance(safe_kleene(sys1), Witness)
    assert all_witnesses(sys1).values == (BOTTOM,)


def test_bool_reachability():
    S = BOOL
    sys1 = PolynomialSystem(S, ((Monomial.build(S, Var(1)),), (Monomial.build(S, True),)))
    out = safe_kleene(sys1)
    assert out.values == (True, True)


def test_bottom_rejected_as_coefficient():
    with pytest.raises(SemiringError):
        Monomial.build(MIN_PLUS, BOTTOM)
    with pytest.raises(SemiringError):
        PolynomialSystem(MIN_PLUS, ((Monomial((BOTTOM,)),),))


def test_derivation_tree_values(system):
    assert [derivation_tree_value(system, 0, k) for k in range(1, 6)] == [-2, -2, -2, -3, -3]


def test_derivation_tree_cap(system, monkeypatch):
    with pytest.raises(EnumerationCapExceeded):
        derivation_tree_value(system, 0, 5, cap=3)
    monkeypatch.setenv("WPDS_ENUM_CAP", "2")
    with pytest.raises(EnumerationCapExceeded):
        derivation_tree_value(system, 0, 5)


def test_kernel_overflow_falls_back_to_exact_integers():
    S = MIN_PLUS
    big = -(2**70)
    sys1 = PolynomialSystem(S, tuple(
        (Monomial.build(S, Var(i - 1), Var(i - 1)),) if i else (Monomial.build(S, big),)
        for i in range(40)))
    for backend in BACKENDS:
        out = safe_kleene(sys1, backend=backend)
        assert isinstance(out, GreatestFixedPoint)
        assert out.values[-1] == big * 2**39


# -- properties ----------------------------------------------------------------

def _descends(S, trace):
    return all(S.leq(b, a) for a, b in zip(trace, trace[1:]) for a, b in zip(a, b))


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_monotone_descent_and_fixed_point_soundness(rng):
    system = random_system(rng)
    out = safe_kleene(system, trace=True)
    assert _descends(system.semiring, out.trace)
    assert out.evaluations <= system.n + 1
    if isinstance(out, GreatestFixedPoint):
        assert evaluate(system, out.values) == out.values


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_witness_keeps_decreasing(rng):
    system = random_system(rng)
    out = safe_kleene(system)
    if isinstance(out, Witness):
        ks = kleene_iterates(system, 2 * system.n + 1)
        i = out.index
        tail = [v[i] for v in ks[system.n + 1:]]
        assert any(b < a for a, b in zip(tail, tail[1:]))


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_all_witnesses_match_long_iteration(rng):
    """A component is a witness iff it keeps decreasing well past the
    pinning phase; otherwise it carries the limit value."""
    system = random_system(rng)
    out = all_witnesses(system)
    horizon = 12 * (system.n + 1)
    ks = kleene_iterates(system, horizon)
    for i in range(system.n):
        if out.values[i] is BOTTOM:
            assert ks[horizon][i] < ks[horizon // 2][i]
        else:
            assert ks[horizon][i] == out.values[i]


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_backends_agree(rng):
    system = random_system(rng, max_n=6, max_degree=3, max_monomials=4)
    results = [all_witnesses(system, trace=True, backend=b) for b in BACKENDS]
    assert all(r.values == results[0].values for r in results)
    assert all(r.trace == results[0].trace for r in results)
    plain = [safe_kleene(system, trace=True, backend=b) for b in BACKENDS]
    assert all(p.trace == plain[0].trace for p in plain)


def test_determinism():
    rng = random.Random(7)
    for _ in range(20):
        system = random_system(rng)
        assert safe_kleene(system, trace=True).trace == safe_kleene(system, trace=True).trace


def test_divergent_injection_reaches_stable_vector():
    system = descending_system()
    out = all_witnesses(system, trace=True)
    assert evaluate_extended(system, out.values) == out.values


def evaluate_extended(system, values):
    """One round on the extended domain where BOTTOM behaves as -inf."""
    S = system.semiring
    ext = [S.to_divergent(v) for v in values]
    res = []
    for poly in system.polys:
        acc = S.zero
        for m in poly:
            acc = S.add(acc, m.evaluate(S, ext))
        res.append(S.from_divergent(acc))
    return tuple(res)


def test_evaluate_late_iterate(system):
    assert evaluate(system, (-2, -1, -2)) == (-3, -1, -2)


def test_zero_absorbs_descending_chain():
    S = MIN_PLUS
    sys1 = PolynomialSystem(S, ((Monomial.build(S, Var(0), -1),),))
    out = safe_kleene(sys1)
    assert isinstance(out, GreatestFixedPoint) and out.values == (INF,)
    assert derivation_tree_value(sys1, 0, 5) == INF


def test_descending_chain_is_witness():
    S = MIN_PLUS
    sys1 = PolynomialSystem(S, ((Monomial.build(S, 0), Monomial.build(S, Var(0), -1)),))
    out = safe_kleene(sys1)
    assert isinstance(out, Witness) and out.index == 0


def test_all_witnesses_examples():
    S = MIN_PLUS
    stable = PolynomialSystem(S, ((Monomial.build(S, 5),),
                                  (Monomial.build(S, Var(0)), Monomial.build(S, Var(1)))))
    out = all_witnesses(stable)
    assert out.witnesses == frozenset() and out.values == (5, 5)
    isolated = PolynomialSystem(S, ((Monomial.build(S, 0), Monomial.build(S, Var(0), -1)),
                                    (Monomial.build(S, 7),)))
    out = all_witnesses(isolated)
    assert out.witnesses == {0} and out.values == (BOTTOM, 7)


def test_derivation_tree_small_heights(system):
    assert derivation_tree_value(system, 1, 1) == INF
    assert derivation_tree_value(system, 0, 1) == -2
    assert derivation_tree_value(system, 0, 4) == -3
