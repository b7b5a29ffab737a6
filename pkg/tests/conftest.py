"""Shared fixture systems drawn from the verification corpus."""

from fractions import Fraction

import pytest

from qlift import Coeff, Monomial, OdeSystem, Poly
from qlift.expressions import Const, Func, Mul, Pow, Var
from qlift.variables import VarKind, Variable


def state(name, index=0):
    return Variable(name, VarKind.STATE, index=index)


def input_var(name, index=0, order=0):
    return Variable(name, VarKind.INPUT, index=index, order=order)


def parameter(name, index=0):
    return Variable(name, VarKind.PARAMETER, index=index)


def coupling_var(name, index=0):
    return Variable(name, VarKind.COUPLING, index=index)


def PC(p):
    return Poly.constant(Coeff.of_param(p))


P = Poly.of_var


@pytest.fixture
def cubic_shift_system():
    """x1' = (x1+1)^3 + x2, x2' = x1 + x2."""
    x1, x2 = state("x1", 0), state("x2", 1)
    return OdeSystem([(x1, (P(x1) + Poly.constant(1)) ** 3 + P(x2)),
                      (x2, P(x1) + P(x2))])


@pytest.fixture
def two_state_cubic_system():
    """x1' = x1^3 + x2^2, x2' = x1 + x2."""
    x1, x2 = state("x1", 0), state("x2", 1)
    return OdeSystem([(x1, P(x1) ** 3 + P(x2) ** 2), (x2, P(x1) + P(x2))])


@pytest.fixture
def degree_six_scalar_system():
    """x' = x^6 + x^4 + x^3."""
    x = state("x", 0)
    return OdeSystem([(x, P(x) ** 6 + P(x) ** 4 + P(x) ** 3)])


@pytest.fixture
def scalar_bilinear_system():
    """x' = x + x^2*u (admits no input-free quadratization)."""
    x, u = state("x", 0), input_var("u", 0)
    return OdeSystem([(x, P(x) + P(x) ** 2 * P(u))], inputs=[(u, True)])


@pytest.fixture
def pure_square_input_system():
    """x' = x^2*u."""
    x, u = state("x", 0), input_var("u", 0)
    return OdeSystem([(x, P(x) ** 2 * P(u))], inputs=[(u, True)])


@pytest.fixture
def duffing_system():
    """Duffing oscillator with parametric coefficients and forcing."""
    x1, x2, u = state("x1", 0), state("x2", 1), input_var("u", 0)
    al, be, de = parameter("alpha", 0), parameter("beta", 1), parameter("delta", 2)
    rhs2 = -(PC(al) * P(x1)) - PC(de) * P(x2) - PC(be) * P(x1) ** 3 + P(u)
    return OdeSystem([(x1, P(x2)), (x2, rhs2)], inputs=[(u, False)],
                     parameters=[al, be, de])


@pytest.fixture
def finite_dimension_system():
    """x1' = x1 + x1*u, x2' = x1^2*u (admits an input-free quadratization)."""
    x1, x2, u = state("x1", 0), state("x2", 1), input_var("u", 0)
    return OdeSystem([(x1, P(x1) + P(x1) * P(u)), (x2, P(x1) ** 2 * P(u))],
                     inputs=[(u, True)])


@pytest.fixture
def laurent_pair_system():
    """x1' = x2^2, x2' = x1/x2 (Laurent)."""
    x1, x2 = state("x1", 0), state("x2", 1)
    return OdeSystem([(x1, P(x2) ** 2),
                      (x2, P(x1) * Poly.of_monomial(Monomial.of(x2, -1)))],
                     laurent=True)


@pytest.fixture
def laurent_pair_polynomialized():
    """The same model after eliminating 1/x2 with x3 = x2^-1."""
    x1, x2, x3 = state("x1", 0), state("x2", 1), state("x3", 2)
    return OdeSystem([(x1, P(x2) ** 2), (x2, P(x1) * P(x3)),
                      (x3, -(P(x1) * P(x3) ** 3))])


@pytest.fixture
def double_exponential_system():
    """x' = exp(-x) + exp(-2x)."""
    x = state("x", 0)
    rhs = Func("exp", Mul((Const(Fraction(-1)), Var(x)))) + \
        Func("exp", Mul((Const(Fraction(-2)), Var(x))))
    return OdeSystem([(x, rhs)])


def combustion_system():
    """Four-species reaction with an Arrhenius factor and temperature input."""
    x1, x2, x3, x4 = (state(f"x{i}", i - 1) for i in range(1, 5))
    u = input_var("u", 0)
    A, E, R = parameter("A", 0), parameter("E", 1), parameter("R", 2)
    core = Mul((Const(Fraction(-1)), Var(A),
                Func("exp", Mul((Const(Fraction(-1)), Var(E),
                                 Pow(Mul((Var(R), Var(u))), Fraction(-1))))),
                Pow(Var(x1), Fraction(1, 5)), Pow(Var(x2), Fraction(13, 10))))
    return OdeSystem([(x1, core),
                      (x2, Mul((Const(Fraction(2)), core))),
                      (x3, Mul((Const(Fraction(-1)), core))),
                      (x4, Mul((Const(Fraction(-2)), core)))],
                     inputs=[(u, True)], parameters=[A, E, R], laurent=True)


@pytest.fixture(name="combustion_system")
def combustion_system_fixture():
    return combustion_system()


# -- coupled family builders -------------------------------------------------

def traffic_family():
    """x' = x + x^2 * xD (single-block transport family)."""
    from qlift import extract_family
    x = state("x", 0)
    xD = coupling_var("xD", 0)
    s = OdeSystem([(x, P(x) + P(x) ** 2 * P(xD))], couplings=[(xD, x)])
    return extract_family(s)


def reactor_polynomial_family():
    """Concentration/temperature blocks with a cubic reaction polynomial."""
    from qlift import extract_family
    psi, theta = state("psi", 0), state("theta", 1)
    psiD, thetaD = coupling_var("psiD", 0), coupling_var("thetaD", 1)
    u = input_var("u", 0)
    bpsi, btheta, b = parameter("b_psi", 0), parameter("b_theta", 1), \
        parameter("b", 2)
    Dk, Bk = parameter("Dk", 3), parameter("Bk", 4)
    c0, c1, c2, c3 = (parameter(f"c{i}", 5 + i) for i in range(4))
    reaction = PC(c0) + PC(c1) * P(theta) + PC(c2) * P(theta) ** 2 \
        + PC(c3) * P(theta) ** 3
    rhs_psi = P(psiD) + PC(bpsi) - PC(Dk) * P(psi) * reaction
    rhs_theta = P(thetaD) + PC(btheta) + PC(b) * P(u) \
        + PC(Bk) * PC(Dk) * P(psi) * reaction
    s = OdeSystem([(psi, rhs_psi), (theta, rhs_theta)], inputs=[(u, True)],
                  parameters=[bpsi, btheta, b, Dk, Bk, c0, c1, c2, c3],
                  couplings=[(psiD, psi), (thetaD, theta)])
    return extract_family(s)


def reactor_exponential_family():
    """The Arrhenius variant after eliminating the exponential by hand:
    block (psi, theta, w1) with w1 standing for exp(gamma - gamma/theta)."""
    from qlift import extract_family
    psi, theta, w1 = state("psi", 0), state("theta", 1), state("w1", 2)
    psiD, thetaD = coupling_var("psiD", 0), coupling_var("thetaD", 1)
    u = input_var("u", 0)
    bpsi, btheta, b = parameter("b_psi", 0), parameter("b_theta", 1), \
        parameter("b", 2)
    Dk, Bk, gam = parameter("Dk", 3), parameter("Bk", 4), parameter("gam", 5)
    th2 = Poly.of_monomial(Monomial.of(theta, -2))
    core = P(thetaD) + PC(btheta) + PC(b) * P(u) + PC(Bk) * PC(Dk) * P(psi) * P(w1)
    s = OdeSystem([(psi, P(psiD) + PC(bpsi) - PC(Dk) * P(psi) * P(w1)),
                   (theta, core),
                   (w1, PC(gam) * P(w1) * th2 * core)],
                  inputs=[(u, True)], parameters=[bpsi, btheta, b, Dk, Bk, gam],
                  couplings=[(psiD, psi), (thetaD, theta)], laurent=True)
    return extract_family(s)


def solar_wind_family():
    """Velocity/log-velocity blocks of the heliospheric transport model."""
    from qlift import extract_family
    v, w0 = state("v", 0), state("w0", 1)
    vD, w0D = coupling_var("vD", 0), coupling_var("w0D", 1)
    C1 = parameter("C1", 0)
    inv_v = Poly.of_monomial(Monomial.of(v, -1))
    s = OdeSystem([(v, P(w0D) - PC(C1) * P(vD)),
                   (w0, P(w0D) * inv_v - PC(C1) * P(vD) * inv_v)],
                  parameters=[C1], couplings=[(vD, v), (w0D, w0)], laurent=True)
    return extract_family(s)


# -- independent brute-force oracle -------------------------------------------

def oracle_is_quadratization(system, S, mode=None):
    """Definition-level check written independently of the search path."""
    import itertools

    from qlift import default_mode, lie_derivative
    from qlift.quadratize import INPUT_FREE, WITH_INPUTS

    mode = mode or default_mode(system)
    base = [Monomial.of(v) for v in system.states]
    K = system.max_input_order()
    tops = []
    if mode.kind == WITH_INPUTS:
        for u, _ in system.inputs:
            for k in range(K + 1):
                d = u
                for _ in range(k):
                    d = d.derivative()
                base.append(Monomial.of(d))
            d = u
            for _ in range(K + 1):
                d = d.derivative()
            tops.append(Monomial.of(d))
    elif mode.kind == INPUT_FREE:
        base += [Monomial.of(u) for u, _ in system.inputs]
    alphabet = base + tops + list(S)
    universe = alphabet + [Monomial.unit()]

    def dec(m):
        for a, b in itertools.product(universe, repeat=2):
            if a * b == m and not (a in tops and b in tops):
                return True
        return False

    for g in list(system.states):
        if not all(dec(m) for m in system.rhs_poly(g).monomials()):
            return False
    for s in S:
        d = lie_derivative(Poly.of_monomial(s), system)
        if not all(dec(m) for m in d.monomials()):
            return False
    return True


def degree_capped_candidates(system):
    """Non-unit deg>=2 monomials within the per-variable degree caps."""
    import itertools

    caps = [(v, max(system.rhs_poly(s).degree_in(v) for s in system.states))
            for v in system.states]
    out = []
    for combo in itertools.product(*[range(d + 1) for _, d in caps]):
        if sum(combo) >= 2:
            out.append(Monomial({v: e for (v, _), e in zip(caps, combo)}))
    return out
