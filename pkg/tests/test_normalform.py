"""Normal form for elementary-function expressions."""

from fractions import Fraction

import pytest

from qlift import Poly, UnsupportedNode
from qlift.expressions import Const, Func, Mul, Pow, Var
from qlift.normalform import GenPoly, genpoly_lie, normalize
from qlift.variables import VarKind, Variable

from conftest import P, state

X = state("x", 0)
Y = state("y", 1)


def test_exponential_powers_merge():
    e1 = Pow(Func("exp", Mul((Const(Fraction(-1)), Var(X)))), Fraction(2))
    e2 = Func("exp", Mul((Const(Fraction(-2)), Var(X))))
    assert normalize(e1) == normalize(e2)


def test_exponential_product_merges():
    a = Mul((Func("exp", Var(X)), Func("exp", Var(Y))))
    b = Func("exp", Var(X) + Var(Y))
    assert normalize(a) == normalize(b)


def test_fractional_powers_combine():
    a = Mul((Pow(Var(X), Fraction(13, 10)), Pow(Var(X), Fraction(7, 10))))
    assert normalize(a) == normalize(Pow(Var(X), Fraction(2)))
    assert normalize(a).to_poly() == P(X) ** 2


def test_fractional_power_of_power():
    a = Pow(Pow(Var(X), Fraction(2)), Fraction(13, 10))
    b = Pow(Var(X), Fraction(13, 5))
    assert normalize(a) == normalize(b)


def test_quotient_by_monomial_is_laurent():
    expr = Mul((Var(Y), Pow(Var(X), Fraction(-1))))
    p = normalize(expr).to_poly(laurent=True)
    assert p.monomials()[0].degree_in(X) == -1
    assert p.degree_in(X) == 0  # positive-part convention
    with pytest.raises(UnsupportedNode):
        normalize(expr).to_poly(laurent=False)


def test_real_power_conversion_raises():
    expr = Pow(Var(X), Fraction(1, 5))
    with pytest.raises(UnsupportedNode):
        normalize(expr).to_poly(laurent=True)


def test_sin_cos_atoms_distinct():
    s = normalize(Func("sin", Var(X)))
    c = normalize(Func("cos", Var(X)))
    assert s != c
    assert not s.is_polynomial


def test_reciprocal_of_sum_is_atom():
    expr = Pow(Var(X) + Const(Fraction(1)), Fraction(-1))
    gp = normalize(expr)
    assert not gp.is_polynomial
    # reciprocals of equal sums share one atom
    other = Pow(Const(Fraction(1)) + Var(X), Fraction(-1))
    assert gp == normalize(other)


def test_lie_of_exponential():
    # d/dt exp(-x) along x' = x^2 is -x^2 exp(-x)
    gp = normalize(Func("exp", Mul((Const(Fraction(-1)), Var(X)))))
    rhs = {X: normalize(Pow(Var(X), Fraction(2)))}
    d = genpoly_lie(gp, rhs.get, lambda v: v.derivative())
    expect = normalize(Mul((Const(Fraction(-1)), Pow(Var(X), Fraction(2)),
                            Func("exp", Mul((Const(Fraction(-1)), Var(X)))))))
    assert d == expect


def test_lie_of_fractional_power():
    # d/dt x^(1/5) along x' = x is (1/5) x^(1/5)
    gp = normalize(Pow(Var(X), Fraction(1, 5)))
    rhs = {X: normalize(Var(X))}
    d = genpoly_lie(gp, rhs.get, lambda v: v.derivative())
    assert d == gp.scale(Fraction(1, 5))


def test_lie_sin_cos_pair():
    gp = normalize(Func("sin", Var(X)))
    rhs = {X: GenPoly.constant(1)}
    d = genpoly_lie(gp, rhs.get, lambda v: v.derivative())
    assert d == normalize(Func("cos", Var(X)))


def test_lie_log():
    # d/dt log(x) along x' = p is p/x
    gp = normalize(Func("log", Var(X)))
    rhs = {X: normalize(Pow(Var(X), Fraction(3)))}
    d = genpoly_lie(gp, rhs.get, lambda v: v.derivative())
    assert d == normalize(Pow(Var(X), Fraction(2)))
