"""Multiplicative normal form for elementary-function expressions.

A :class:`GenPoly` is an exact sum of generalized terms. Each term factors as

    q * m * prod(v**alpha) * prod(atom**k) * exp(R)

with q a rational, m an integer-exponent monomial (parameters included),
``v**alpha`` fractional powers of single variables (alpha in (0,1), the
integer part lives in m), atoms opaque non-polynomial factors (log, sin, cos,
reciprocals and powers of composite bases), and R a Laurent-polynomial
exponential argument. Exponential factors merge additively in R, so e.g.
``exp(-x)**2`` and ``exp(-2*x)`` normalize identically; that exactness is
what lets the polynomializer recognize that one substitution covers both.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .coeffs import Coeff
from .errors import UnsupportedNode
from .expressions import Add, Const, Expression, Func, Mul, Pow, Var, poly_to_expression
from .monomials import Monomial
from .poly import Poly
from .variables import Variable, VarKind

_ZERO_POLY = Poly.zero()


class Atom:
    """Opaque non-polynomial factor keyed by its exact argument."""

    __slots__ = ("kind", "arg", "alpha", "_hash")

    def __init__(self, kind, arg, alpha=None):
        self.kind = kind  # log | sin | cos | inv | pow | exp
        self.arg = arg    # Poly, or GenPoly for composite arguments
        self.alpha = alpha
        self._hash = hash((kind, arg, alpha))

    def __eq__(self, other):
        if not isinstance(other, Atom):
            return NotImplemented
        return (self.kind == other.kind and self.alpha == other.alpha
                and self.arg == other.arg)

    def __hash__(self):
        return self._hash

    def struct_key(self):
        tag = 0 if isinstance(self.arg, Poly) else 1
        return (self.kind, self.alpha if self.alpha is not None else Fraction(0),
                tag, self.arg.struct_key())

    def arg_expression(self):
        if isinstance(self.arg, Poly):
            return poly_to_expression(self.arg)
        return self.arg.to_expression()

    def to_expression(self):
        if self.kind == "inv":
            return Pow(self.arg_expression(), Fraction(-1))
        if self.kind == "pow":
            return Pow(self.arg_expression(), self.alpha)
        return Func(self.kind, self.arg_expression())

    def __repr__(self):
        return f"Atom({self.kind}, {self.arg!r})"


def _split_frac(total):
    """total -> (integer floor, fractional remainder in [0, 1))."""
    fl = math.floor(total)
    return fl, total - fl


class GTerm:
    __slots__ = ("mono", "fexps", "atoms", "exparg", "_hash")

    def __init__(self, mono=None, fexps=(), atoms=(), exparg=None):
        self.mono = mono if mono is not None else Monomial.unit()
        self.fexps = tuple(sorted(((v, f) for v, f in fexps if f),
                                  key=lambda p: p[0].sort_key))
        self.atoms = tuple(sorted(((a, k) for a, k in atoms if k),
                                  key=lambda p: (p[0].struct_key(), p[1])))
        self.exparg = exparg if exparg is not None else _ZERO_POLY
        self._hash = hash((self.mono, self.fexps, self.atoms, self.exparg))

    @property
    def is_polynomial(self):
        return not self.fexps and not self.atoms and self.exparg.is_zero

    def full_exponent(self, var):
        e = Fraction(self.mono.degree_in(var))
        for v, f in self.fexps:
            if v == var:
                e += f
        return e

    def __eq__(self, other):
        if not isinstance(other, GTerm):
            return NotImplemented
        return (self.mono == other.mono and self.fexps == other.fexps
                and self.atoms == other.atoms and self.exparg == other.exparg)

    def __hash__(self):
        return self._hash

    def struct_key(self):
        return (self.mono.struct_key(),
                tuple((v.sort_key, f) for v, f in self.fexps),
                tuple((a.struct_key(), k) for a, k in self.atoms),
                self.exparg.struct_key())

    def __repr__(self):
        return f"GTerm({self.mono!r}, {self.fexps}, {self.atoms}, exp({self.exparg!r}))"


_UNIT_TERM = GTerm()


def _merge_exponents(mono1, fexps1, mono2, fexps2, k2=1):
    """Combine exponent data of two terms (second one raised to k2)."""
    totals = {}
    for v, e in mono1.items():
        totals[v] = totals.get(v, Fraction(0)) + e
    for v, f in fexps1:
        totals[v] = totals.get(v, Fraction(0)) + f
    for v, e in mono2.items():
        totals[v] = totals.get(v, Fraction(0)) + Fraction(e) * k2
    for v, f in fexps2:
        totals[v] = totals.get(v, Fraction(0)) + f * k2
    ints, fracs = {}, []
    for v, tot in totals.items():
        fl, rem = _split_frac(tot)
        if fl:
            ints[v] = fl
        if rem:
            fracs.append((v, rem))
    return Monomial(ints), tuple(fracs)


def _term_mul(t1, t2):
    mono, fexps = _merge_exponents(t1.mono, t1.fexps, t2.mono, t2.fexps)
    atoms = {}
    for a, k in t1.atoms:
        atoms[a] = atoms.get(a, 0) + k
    for a, k in t2.atoms:
        atoms[a] = atoms.get(a, 0) + k
    return GTerm(mono, fexps, atoms.items(), t1.exparg + t2.exparg)


def _term_pow(t, k):
    """Integer power of a term (k may be negative)."""
    mono, fexps = _merge_exponents(Monomial.unit(), (), t.mono, t.fexps, Fraction(k))
    atoms = tuple((a, n * k) for a, n in t.atoms)
    return GTerm(mono, fexps, atoms, t.exparg.scale(Fraction(k)))


class GenPoly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for t, q in terms.items():
                q = Fraction(q)
                if q:
                    clean[t] = q
        self._terms = clean
        self._hash = None

    @staticmethod
    def zero():
        return GenPoly()

    @staticmethod
    def constant(q):
        q = Fraction(q)
        return GenPoly({_UNIT_TERM: q}) if q else GenPoly()

    @staticmethod
    def of_var(var, exp=1):
        return GenPoly({GTerm(Monomial.of(var, exp)): Fraction(1)})

    @staticmethod
    def of_term(term, q=1):
        return GenPoly({term: Fraction(q)})

    @staticmethod
    def of_poly(p):
        terms = {}
        for m, c in p.terms():
            for pm, q in c.items():
                t = GTerm(m * pm)
                terms[t] = terms.get(t, Fraction(0)) + q
        return GenPoly(terms)

    @property
    def is_zero(self):
        return not self._terms

    def terms(self):
        return self._terms.items()

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda it: it[0].struct_key())

    def __add__(self, other):
        terms = dict(self._terms)
        for t, q in other._terms.items():
            s = terms.get(t, Fraction(0)) + q
            if s:
                terms[t] = s
            else:
                terms.pop(t, None)
        return GenPoly(terms)

    def __neg__(self):
        return GenPoly({t: -q for t, q in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        terms = {}
        for t1, q1 in self._terms.items():
            for t2, q2 in other._terms.items():
                t = _term_mul(t1, t2)
                s = terms.get(t, Fraction(0)) + q1 * q2
                if s:
                    terms[t] = s
                else:
                    terms.pop(t, None)
        return GenPoly(terms)

    def scale(self, q):
        q = Fraction(q)
        if not q:
            return GenPoly()
        return GenPoly({t: c * q for t, c in self._terms.items()})

    def __pow__(self, k):
        if k < 0:
            if len(self._terms) != 1:
                raise UnsupportedNode("negative power of a multi-term expression")
            (t, q), = self._terms.items()
            return GenPoly({_term_pow(t, k): Fraction(1) / q ** (-k)})
        out = GenPoly.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def single_term(self):
        if len(self._terms) != 1:
            return None
        return next(iter(self._terms.items()))

    @property
    def is_polynomial(self):
        return all(t.is_polynomial for t in self._terms)

    def to_poly(self, laurent=True):
        terms = {}
        for t, q in self._terms.items():
            if not t.is_polynomial:
                raise UnsupportedNode(f"non-polynomial factor in {t!r}")
            if not laurent:
                for v, e in t.mono.items():
                    if e < 0 and v.kind is not VarKind.PARAMETER:
                        raise UnsupportedNode(
                            f"negative exponent on {v.name} outside Laurent mode")
            c = terms.get(t.mono)
            add = Coeff.rational(q)
            terms[t.mono] = add if c is None else c + add
        return Poly(terms).split_parameters()

    def try_to_poly(self, laurent=True):
        try:
            return self.to_poly(laurent=laurent)
        except UnsupportedNode:
            return None

    def __eq__(self, other):
        if not isinstance(other, GenPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def struct_key(self):
        return tuple(sorted((t.struct_key(), q) for t, q in self._terms.items()))

    def to_expression(self):
        parts = []
        for t, q in self.sorted_terms():
            factors = []
            if q != 1 or (t.mono.is_unit and not t.fexps and not t.atoms
                          and t.exparg.is_zero):
                factors.append(Const(q))
            for v, e in t.mono.items():
                factors.append(Var(v) if e == 1 else Pow(Var(v), Fraction(e)))
            for v, f in t.fexps:
                factors.append(Pow(Var(v), f))
            for a, k in t.atoms:
                ae = a.to_expression()
                factors.append(ae if k == 1 else Pow(ae, Fraction(k)))
            if not t.exparg.is_zero:
                factors.append(Func("exp", poly_to_expression(t.exparg)))
            parts.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
        if not parts:
            return Const(Fraction(0))
        return parts[0] if len(parts) == 1 else Add(tuple(parts))

    def __repr__(self):
        return f"GenPoly({self.to_expression()})"


def normalize(expr):
    """Expression tree -> exact normal form."""
    if isinstance(expr, Const):
        return GenPoly.constant(expr.value)
    if isinstance(expr, Var):
        return GenPoly.of_var(expr.var)
    if isinstance(expr, Add):
        out = GenPoly.zero()
        for a in expr.args:
            out = out + normalize(a)
        return out
    if isinstance(expr, Mul):
        out = GenPoly.constant(1)
        for a in expr.args:
            out = out * normalize(a)
        return out
    if isinstance(expr, Pow):
        return _normalize_pow(normalize(expr.base), Fraction(expr.exponent))
    if isinstance(expr, Func):
        return _normalize_func(expr.fn, normalize(expr.arg))
    raise UnsupportedNode(f"unsupported expression node {expr!r}")


def _normalize_pow(base, exponent):
    if exponent == 0:
        return GenPoly.constant(1)
    if exponent.denominator == 1:
        k = int(exponent)
        if k >= 0:
            return base ** k
        single = base.single_term()
        if single is not None:
            return base ** k
        # reciprocal of a multi-term quantity
        p = base.try_to_poly(laurent=True)
        arg = p if p is not None else base
        return GenPoly.of_term(GTerm(atoms=((Atom("inv", arg), -k),)))
    single = base.single_term()
    if single is not None:
        t, q = single
        if not t.atoms and t.exparg.is_zero and q == 1:
            mono, fexps = _merge_exponents(Monomial.unit(), (), t.mono, t.fexps,
                                           exponent)
            return GenPoly.of_term(GTerm(mono, fexps))
        if not t.atoms and not t.fexps and t.mono.is_unit and q == 1:
            return GenPoly.of_term(GTerm(exparg=t.exparg.scale(exponent)))
    p = base.try_to_poly(laurent=True)
    arg = p if p is not None else base
    return GenPoly.of_term(GTerm(atoms=((Atom("pow", arg, exponent), 1),)))


def _normalize_func(fn, arg):
    if fn == "exp":
        p = arg.try_to_poly(laurent=True)
        if p is not None:
            if p.is_zero:
                return GenPoly.constant(1)
            return GenPoly.of_term(GTerm(exparg=p))
        return GenPoly.of_term(GTerm(atoms=((Atom("exp", arg), 1),)))
    if fn not in ("log", "sin", "cos"):
        raise UnsupportedNode(f"unsupported function {fn!r}")
    p = arg.try_to_poly(laurent=True)
    if fn == "sin" and p is not None and p.is_zero:
        return GenPoly.zero()
    if fn == "cos" and p is not None and p.is_zero:
        return GenPoly.constant(1)
    payload = p if p is not None else arg
    return GenPoly.of_term(GTerm(atoms=((Atom(fn, payload), 1),)))


# ---------------------------------------------------------------------------
# Differentiation along a system


def genpoly_lie(gp, rhs_of, deriv_of):
    """Time derivative of a normal form along the system.

    ``rhs_of(var)`` returns the GenPoly right-hand side for differential
    variables (None for symbols with zero dynamics, e.g. parameters);
    ``deriv_of(var)`` returns the next-order derivative variable for inputs.
    """
    out = GenPoly.zero()
    for t, q in gp.terms():
        rest_base = GenPoly.of_term(t, q)
        # integer and fractional powers share the v**e -> e*v**(e-1)*v' rule
        seen = set()
        for v in list(t.mono.variables()) + [v for v, _ in t.fexps]:
            if v in seen:
                continue
            seen.add(v)
            vdot = _vardot(v, rhs_of, deriv_of)
            if vdot is None:
                continue
            e = t.full_exponent(v)
            if not e:
                continue
            shifted = rest_base * GenPoly.of_var(v, -1)
            out = out + (shifted * vdot).scale(e)
        for a, k in t.atoms:
            da = _atom_derivative(a, rhs_of, deriv_of)
            if da.is_zero:
                continue
            # t / a: drop one power of the atom
            atoms = tuple((b, n - 1 if b == a else n) for b, n in t.atoms)
            t_less = GTerm(t.mono, t.fexps, atoms, t.exparg)
            out = out + (GenPoly.of_term(t_less, q * k) * da)
        if not t.exparg.is_zero:
            dR = poly_lie_gen(t.exparg, rhs_of, deriv_of)
            if not dR.is_zero:
                out = out + rest_base * dR
    return out


def _vardot(v, rhs_of, deriv_of):
    if v.is_differential:
        return rhs_of(v)
    if v.kind is VarKind.INPUT:
        return GenPoly.of_var(deriv_of(v))
    return None


def _atom_derivative(atom, rhs_of, deriv_of):
    arg = atom.arg
    if isinstance(arg, Poly):
        darg = poly_lie_gen(arg, rhs_of, deriv_of)
        arg_gp = GenPoly.of_poly(arg)
    else:
        darg = genpoly_lie(arg, rhs_of, deriv_of)
        arg_gp = arg
    if darg.is_zero:
        return GenPoly.zero()
    one = GenPoly.of_term(GTerm(atoms=((atom, 1),)))
    if atom.kind == "exp":
        return one * darg
    if atom.kind == "log":
        return darg * _reciprocal(arg, arg_gp)
    if atom.kind == "sin":
        cos_atom = Atom("cos", arg)
        return GenPoly.of_term(GTerm(atoms=((cos_atom, 1),))) * darg
    if atom.kind == "cos":
        sin_atom = Atom("sin", arg)
        return GenPoly.of_term(GTerm(atoms=((sin_atom, 1),))).scale(-1) * darg
    if atom.kind == "inv":
        inv2 = GenPoly.of_term(GTerm(atoms=((atom, 2),)))
        return (inv2 * darg).scale(-1)
    if atom.kind == "pow":
        lower = _normalize_pow(arg_gp, atom.alpha - 1)
        return (lower * darg).scale(atom.alpha)
    raise UnsupportedNode(f"cannot differentiate atom kind {atom.kind!r}")


def _reciprocal(arg, arg_gp):
    if isinstance(arg, Poly):
        single = len(arg.monomials()) == 1
        if single:
            (m, c), = arg.terms()
            rec = Poly({m ** -1: Coeff.one()})
            return GenPoly.of_poly(rec).scale(Fraction(1) / c.as_fraction()) \
                if c.is_rational else GenPoly.of_term(GTerm(atoms=((Atom("inv", arg), 1),)))
    return GenPoly.of_term(GTerm(atoms=((Atom("inv", arg), 1),)))


def poly_lie_gen(p, rhs_of, deriv_of):
    """Lie derivative of an exact polynomial, as a GenPoly."""
    out = GenPoly.zero()
    for v in p.variables():
        vdot = _vardot(v, rhs_of, deriv_of)
        if vdot is None:
            continue
        out = out + GenPoly.of_poly(p.partial(v)) * vdot
    return out


def poly_substitute_gen(p, defs):
    """Substitute GenPoly definitions into a Poly (back-substitution)."""
    out = GenPoly.zero()
    for m, c in p.terms():
        term = GenPoly.constant(1)
        for v, e in m.items():
            rep = defs.get(v)
            if rep is None:
                term = term * GenPoly.of_var(v, e)
            else:
                term = term * (rep ** e)
        for pm, q in c.items():
            piece = term * GenPoly.of_poly(Poly.of_monomial(pm)) if not pm.is_unit else term
            out = out + piece.scale(q)
    return out
