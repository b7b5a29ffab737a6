"""Coupled families: extraction, four-node instance, transfer."""

import math
import random
from fractions import Fraction

import pytest

from qlift import (DimensionMismatch, Monomial, NotAffineInCoupling, OdeSystem,
                   Poly, SearchMode, extract_family, instantiate_F4,
                   is_quadratization, search_agnostic, specialize)
from qlift.agnostic import agnostic_bound, build_instance
from qlift.quadratize import default_mode

from conftest import P, PC, coupling_var, parameter, state


@pytest.fixture
def traffic_family():
    x = state("x", 0)
    xD = coupling_var("xD", 0)
    s = OdeSystem([(x, P(x) + P(x) ** 2 * P(xD))], couplings=[(xD, x)])
    return extract_family(s)


def bidiagonal(n, scale=1):
    D = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        D[i][i] = Fraction(scale)
        if i > 0:
            D[i][i - 1] = Fraction(-scale)
    return D


def test_extract_family(traffic_family):
    fam = traffic_family
    x = fam.block_vars[0]
    assert fam.p0[x] == P(x)
    c = fam.placeholders[0][0]
    assert fam.p_coupling[c][x] == P(x) ** 2
    assert fam.degree == 2


def test_extract_rejects_quadratic_placeholder():
    x = state("x", 0)
    xD = coupling_var("xD", 0)
    s = OdeSystem([(x, P(xD) ** 2)], couplings=[(xD, x)])
    with pytest.raises(NotAffineInCoupling):
        extract_family(s)


def test_reassembly_round_trip(traffic_family):
    back = traffic_family.reassemble()
    x = traffic_family.block_vars[0]
    c = traffic_family.placeholders[0][0]
    assert back.rhs_poly(x) == P(x) + P(x) ** 2 * P(c)


def test_four_node_coupling_pattern(traffic_family):
    f4, space = instantiate_F4(traffic_family)
    assert len(f4.states) == 4
    x1 = f4.states[0]
    rhs1 = f4.rhs_poly(x1)
    # x1' = x1 + x1^2*(a*x1 + b*x2 + c*x4)
    names = {p.name for p in f4.parameters}
    assert {"a", "b", "c", "d", "e", "f", "g"} <= names
    assert {v.name for v in rhs1.variables()} == {"x_1", "x_2", "x_4"}

    def coeff_params(p):
        out = set()
        for _, c in p.terms():
            for pm in c.param_monomials():
                out.update(v.name for v in pm.variables())
        return out

    assert coeff_params(rhs1) == {"a", "b", "c"}
    # decoupled rows: node 3 only sees itself
    rhs3 = f4.rhs_poly(f4.states[2])
    assert {v.name for v in rhs3.variables()} == {"x_3"}
    assert coeff_params(rhs3) == {"f"}


def test_uncoupled_family_gives_decoupled_instance():
    x = state("x", 0)
    xD = coupling_var("xD", 0)
    s = OdeSystem([(x, P(x) ** 3 + P(xD))], couplings=[(xD, x)])
    fam = extract_family(s)
    f4, _ = instantiate_F4(fam)
    # with p1 = 1 the coupling enters linearly; cubic terms stay per node
    for i, v in enumerate(f4.states):
        cubes = [m for m in f4.rhs_poly(v).monomials() if m.degree == 3]
        assert all(set(m.variables()) == {v} for m in cubes)


def test_traffic_search(traffic_family):
    aq = search_agnostic(traffic_family)
    assert [m.render() for m in aq.w1] == ["x**2"]
    assert [m.render() for m in aq.w2] == ["x*x~"]
    # Thm-style bounds: |w1| <= C(1+2,2), |w2| <= 1*C(1+2,2)
    assert len(aq.w1) <= math.comb(3, 2)
    assert len(aq.w2) <= 1 * math.comb(3, 2)
    for m in aq.w2:
        tilde = [v for v in m.variables() if v.name.endswith("~")]
        assert sum(m.degree_in(v) for v in tilde) == 1


def test_traffic_specialization_bidiagonal(traffic_family):
    aq = search_agnostic(traffic_family)
    for n in (3, 5):
        system, monomials = specialize(aq, n, {"xD": bidiagonal(n, n)})
        squares = {f"x_{i}**2" for i in range(1, n + 1)}
        pairs = {f"x_{i-1}*x_{i}" for i in range(2, n + 1)}
        assert {m.render() for m in monomials} == squares | pairs
        assert is_quadratization(system, monomials)


def test_traffic_specialization_periodic(traffic_family):
    aq = search_agnostic(traffic_family)
    n = 6
    D = bidiagonal(n, n)
    D[0][n - 1] = Fraction(-n)
    system, monomials = specialize(aq, n, {"xD": D})
    assert "x_1*x_6" in {m.render() for m in monomials}
    assert is_quadratization(system, monomials)


def test_transfer_to_random_matrices(traffic_family):
    aq = search_agnostic(traffic_family)
    rng = random.Random(424242)
    for _ in range(50):
        n = rng.randint(3, 8)
        D = [[Fraction(0)] * n for _ in range(n)]
        for _ in range(rng.randint(1, 2 * n)):
            i, j = rng.randrange(n), rng.randrange(n)
            D[i][j] = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        system, monomials = specialize(aq, n, {"xD": D})
        assert is_quadratization(system, monomials)


def test_specialize_single_node(traffic_family):
    aq = search_agnostic(traffic_family)
    system, monomials = specialize(aq, 1, {"xD": [[Fraction(2)]]})
    assert {m.render() for m in monomials} == {"x_1**2"}
    assert is_quadratization(system, monomials)


def test_specialize_dimension_mismatch(traffic_family):
    aq = search_agnostic(traffic_family)
    with pytest.raises(DimensionMismatch):
        specialize(aq, 3, {"xD": [[0, 1], [1, 0]]})
    with pytest.raises(DimensionMismatch):
        specialize(aq, 3, {})


def test_two_block_family_instance():
    # v' = w0D - C1*vD ; w0' = w0D/v - C1*vD/v
    v, w0 = state("v", 0), state("w0", 1)
    vD, w0D = coupling_var("vD", 0), coupling_var("w0D", 1)
    C1 = parameter("C1", 0)
    inv_v = Poly.of_monomial(Monomial.of(v, -1))
    s = OdeSystem([(v, P(w0D) - PC(C1) * P(vD)),
                   (w0, P(w0D) * inv_v - PC(C1) * P(vD) * inv_v)],
                  parameters=[C1], couplings=[(vD, v), (w0D, w0)], laurent=True)
    fam = extract_family(s)
    assert fam.block_dim == 2 and len(fam.placeholders) == 2
    f8, _ = build_instance(fam, 8, lambda c, i, j: None)
    assert len(f8.states) == 16
