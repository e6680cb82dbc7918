import pytest

from wpdskit.fixpoint import Monomial, PolynomialSystem, Var
from wpdskit.semiring import MIN_PLUS
from wpdskit.wpds import Rule, Wpds


def descending_system() -> PolynomialSystem:
    S = MIN_PLUS
    X1, X2, X3 = Var(0), Var(1), Var(2)
    return PolynomialSystem(S, (
        (Monomial.build(S, -2), Monomial.build(S, X2, X3)),
        (Monomial.build(S, X3, 1),),
        (Monomial.build(S, X1), Monomial.build(S, X2)),
    ))


def pushing_loop() -> Wpds:
    return Wpds(MIN_PLUS, ("p", "q"), ("X", "Y"), (
        Rule("p", "X", 1, "q", ("Y",)),
        Rule("p", "X", 1, "p", ("X", "Y")),
        Rule("p", "Y", 1, "p", ()),
        Rule("q", "Y", -2, "q", ()),
    ))


@pytest.fixture
def system():
    return descending_system()


@pytest.fixture
def loop():
    return pushing_loop()
