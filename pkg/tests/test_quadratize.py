"""Search fixtures: bounds, membership tests, extensions, optimality."""

import itertools
import math
import random
from fractions import Fraction

import pytest

from qlift import (Monomial, NotFoundWithinBound, NotInputAffine,
                   NotPolynomialBilinear, OdeSystem, Poly, SearchMode,
                   SearchTimeout, bilinear_construct, check_triangular_coupling,
                   default_mode, generate_extensions, is_quadratization, search,
                   upper_bound)
from qlift.quadratize import AUTONOMOUS, INPUT_FREE, WITH_INPUTS

from conftest import (P, PC, degree_capped_candidates, input_var,
                      oracle_is_quadratization, parameter, state)


def monos(result):
    return {m.render() for m in result.monomials()}


# -- upper bounds ------------------------------------------------------------

def test_upper_bound_cubic_shift(cubic_shift_system):
    assert upper_bound(cubic_shift_system, SearchMode()) == 8  # (3+1)(1+1)


def test_upper_bound_with_inputs(scalar_bilinear_system):
    mode = SearchMode(kind=WITH_INPUTS)
    assert upper_bound(scalar_bilinear_system, mode) == 6  # (2+1)(1+1)


def test_upper_bound_linear_is_power_of_two():
    x1, x2, x3 = state("x1", 0), state("x2", 1), state("x3", 2)
    s = OdeSystem([(x1, P(x2)), (x2, P(x3)), (x3, P(x1) + P(x2))])
    assert upper_bound(s, SearchMode()) == 8  # 2^3
    assert search(s).order == 0


def test_upper_bound_laurent_counts_monomials(laurent_pair_system):
    mode = SearchMode(laurent=True, max_order=6, max_laurent_degree=4)
    assert upper_bound(laurent_pair_system, mode) == 2


def test_upper_bound_input_free_bilinear(duffing_system):
    mode = SearchMode(kind=INPUT_FREE)
    assert upper_bound(duffing_system, mode) == 10  # C(2+3, 3)


def test_upper_bound_input_free_infinite(pure_square_input_system):
    assert upper_bound(pure_square_input_system,
                       SearchMode(kind=INPUT_FREE)) == math.inf


# -- is_quadratization -------------------------------------------------------

def test_is_quadratization_cubic_shift(cubic_shift_system):
    x1 = cubic_shift_system.states[0]
    assert is_quadratization(cubic_shift_system, [Monomial.of(x1, 2)])
    assert not is_quadratization(cubic_shift_system, [])


def test_is_quadratization_duffing_input_free(duffing_system):
    x1 = duffing_system.states[0]
    assert is_quadratization(duffing_system, [Monomial.of(x1, 2)],
                             SearchMode(kind=INPUT_FREE))


# -- generate_extensions -----------------------------------------------------

def test_extensions_cubic_shift(cubic_shift_system):
    x1 = cubic_shift_system.states[0]
    exts = generate_extensions(cubic_shift_system, [])
    flat = {m.render() for ext in exts for m in ext}
    assert flat <= {"x1**2", "x1**3"}
    assert "x1**2" in flat


def test_extensions_with_inputs(scalar_bilinear_system):
    exts = generate_extensions(scalar_bilinear_system, [],
                               SearchMode(kind=WITH_INPUTS))
    flat = {m.render() for ext in exts for m in ext}
    assert flat == {"x*u", "x**2", "x**2*u"}


def test_extensions_on_quadratization_rejected(cubic_shift_system):
    x1 = cubic_shift_system.states[0]
    with pytest.raises(ValueError):
        generate_extensions(cubic_shift_system, [Monomial.of(x1, 2)])


# -- search fixtures ---------------------------------------------------------

def test_search_two_state_cubic(two_state_cubic_system):
    r = search(two_state_cubic_system)
    assert monos(r) == {"x1**2", "x2**2"}
    assert r.order == 2 and r.optimal
    assert r.wall_time < 1.0


def test_search_cubic_shift(cubic_shift_system):
    r = search(cubic_shift_system)
    assert monos(r) == {"x1**2"} and r.optimal


def test_search_degree_six(degree_six_scalar_system):
    r = search(degree_six_scalar_system)
    assert r.order == 3 and r.optimal


def test_search_with_inputs(scalar_bilinear_system):
    r = search(scalar_bilinear_system)
    assert r.mode.kind == WITH_INPUTS
    assert monos(r) == {"x*u"}
    # emitted w' contains x*u' linearly
    w = r.new_variables[0][0]
    rhs = r.quadratic_system.system.rhs_poly(w)
    u = scalar_bilinear_system.inputs[0][0]
    udot = u.derivative()
    assert any(m.degree_in(udot) == 1 for m in rhs.monomials())


def test_search_duffing_input_free(duffing_system):
    r = search(duffing_system, SearchMode(kind=INPUT_FREE))
    assert monos(r) == {"x1**2"} and r.optimal
    # no input derivatives anywhere in the emitted system
    assert not r.quadratic_system.contains_input_derivatives()


def test_search_finite_dimension_input_free(finite_dimension_system):
    r = search(finite_dimension_system, SearchMode(kind=INPUT_FREE))
    assert monos(r) == {"x1**2"}


def test_search_no_input_free_exists(pure_square_input_system):
    with pytest.raises(NotFoundWithinBound):
        search(pure_square_input_system, SearchMode(kind=INPUT_FREE, max_order=6))


def test_search_laurent(laurent_pair_system):
    mode = SearchMode(laurent=True, max_order=6, max_laurent_degree=4)
    r = search(laurent_pair_system, mode)
    assert monos(r) == {"x2**-1", "x1*x2**-2"}
    assert r.order == 2 and not r.optimal


def test_laurent_beats_polynomialize_first(laurent_pair_system,
                                           laurent_pair_polynomialized):
    mode = SearchMode(laurent=True, max_order=6, max_laurent_degree=4)
    direct = search(laurent_pair_system, mode)
    indirect = search(laurent_pair_polynomialized)
    assert indirect.order == 2
    assert direct.order < 1 + indirect.order


def test_timeout_raises_when_nothing_found(pure_square_input_system):
    with pytest.raises((SearchTimeout, NotFoundWithinBound)):
        search(pure_square_input_system,
               SearchMode(kind=INPUT_FREE, max_order=50, timeout=0.05))


def test_determinism(two_state_cubic_system):
    a = search(two_state_cubic_system)
    b = search(two_state_cubic_system)
    assert a.quadratic_system.render_text() == b.quadratic_system.render_text()
    assert [m.render() for m in a.monomials()] == \
        [m.render() for m in b.monomials()]


def test_workers_agree_with_single(two_state_cubic_system,
                                   degree_six_scalar_system):
    for system in (two_state_cubic_system, degree_six_scalar_system):
        single = search(system, SearchMode(workers=1))
        multi = search(system, SearchMode(workers=4))
        assert single.order == multi.order
        assert monos(single) == monos(multi)


# -- structure tests ---------------------------------------------------------

def test_triangular_verdicts(finite_dimension_system,
                             pure_square_input_system):
    # literal triangularity only: the finite-dimension example admits an
    # input-free quadratization but D(x1) = x1 is not strictly triangular
    assert check_triangular_coupling(finite_dimension_system) is False
    assert check_triangular_coupling(pure_square_input_system) is False
    x1, x2, u = state("x1", 0), state("x2", 1), input_var("u", 0)
    tri = OdeSystem([(x1, P(u)), (x2, P(x1) * P(u))], inputs=[(u, True)])
    assert check_triangular_coupling(tri) is True


def test_triangular_requires_input_affine():
    x, u = state("x", 0), input_var("u", 0)
    s = OdeSystem([(x, P(x) * P(u) ** 2)], inputs=[(u, True)])
    with pytest.raises(NotInputAffine):
        check_triangular_coupling(s)


def test_bilinear_construct_duffing(duffing_system):
    M = bilinear_construct(duffing_system)
    assert len(M) == 9  # all non-unit monomials of degree <= 3 in 2 states
    assert is_quadratization(duffing_system, [m for m in M if m.degree >= 2],
                             SearchMode(kind=INPUT_FREE))


def test_bilinear_construct_linear_states():
    x, u = state("x", 0), input_var("u", 0)
    s = OdeSystem([(x, P(x) + P(x) * P(u))], inputs=[(u, True)])
    M = bilinear_construct(s)
    assert [m.render() for m in M] == ["x"]


def test_bilinear_construct_rejects_square(pure_square_input_system):
    with pytest.raises(NotPolynomialBilinear):
        bilinear_construct(pure_square_input_system)


# -- optimality against a brute-force oracle ---------------------------------

def test_degree_six_oracle(degree_six_scalar_system):
    r = search(degree_six_scalar_system)
    cands = degree_capped_candidates(degree_six_scalar_system)
    assert all(c.degree <= 6 for c in cands)
    for size in range(r.order):
        for S in itertools.combinations(cands, size):
            assert not oracle_is_quadratization(degree_six_scalar_system, S)


def random_autonomous_system(rng, max_states=3, max_degree=4):
    n = rng.randint(1, max_states)
    states = [state(f"x{i+1}", i) for i in range(n)]
    eqs = []
    for v in states:
        nterms = rng.randint(1, 3)
        rhs = Poly.zero()
        for _ in range(nterms):
            exps = {}
            for w in states:
                e = rng.choice([0, 0, 0, 1, 1, 2, 3, 4])
                if e:
                    exps[w] = e
            if sum(exps.values()) > max_degree:
                continue
            coeff = Fraction(rng.randint(-3, 3))
            if coeff:
                rhs = rhs + Poly({Monomial(exps): coeff})
        if rhs.is_zero:
            rhs = P(v)
        eqs.append((v, rhs))
    return OdeSystem(eqs)


def test_random_systems_bounded_and_optimal():
    rng = random.Random(20240817)
    for _ in range(40):
        system = random_autonomous_system(rng)
        r = search(system)
        assert r.optimal
        assert r.order <= upper_bound(system, SearchMode())
        assert is_quadratization(system, r.monomials())
        assert oracle_is_quadratization(system, r.monomials())
        cands = degree_capped_candidates(system)
        for size in range(min(r.order, 3)):
            for S in itertools.combinations(cands, size):
                assert not oracle_is_quadratization(system, S)
