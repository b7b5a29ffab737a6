"""Sparse Laurent polynomials over exact coefficients.

A ``Poly`` is a canonical map from :class:`Monomial` to nonzero
:class:`Coeff`. All arithmetic is exact; nothing here ever touches floating
point. Total degree of a Laurent monomial is the sum of its (possibly
negative) exponents; per-variable degree bounds for the search use positive
parts only.
"""

from __future__ import annotations

import functools
from fractions import Fraction

from .coeffs import Coeff
from .monomials import Monomial, display_sorted, sorted_monomials

_UNIT = Monomial.unit()


class Poly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for m, c in terms.items():
                if isinstance(c, (int, Fraction)):
                    c = Coeff.rational(c)
                if not c.is_zero:
                    clean[m] = c
        self._terms = clean
        self._hash = None

    @staticmethod
    def zero():
        return Poly()

    @staticmethod
    def constant(value):
        c = value if isinstance(value, Coeff) else Coeff.rational(value)
        return Poly({_UNIT: c})

    @staticmethod
    def of_var(var, exp=1):
        return Poly({Monomial.of(var, exp): Coeff.one()})

    @staticmethod
    def of_monomial(mono, coeff=None):
        return Poly({mono: coeff if coeff is not None else Coeff.one()})

    @property
    def is_zero(self):
        return not self._terms

    @property
    def is_constant(self):
        return not self._terms or (len(self._terms) == 1 and _UNIT in self._terms)

    def coeff(self, mono):
        return self._terms.get(mono, Coeff.zero())

    def monomials(self):
        return list(self._terms)

    def terms(self):
        return self._terms.items()

    def sorted_terms(self, descending=False):
        monos = display_sorted(self._terms) if descending \
            else sorted_monomials(self._terms)
        return [(m, self._terms[m]) for m in monos]

    def num_terms(self):
        return len(self._terms)

    def variables(self):
        seen = {}
        for m in self._terms:
            for v in m.variables():
                seen[v] = True
        return list(seen)

    def degree(self):
        """Max total degree over terms (0 for the zero polynomial)."""
        return max((m.degree for m in self._terms), default=0)

    def degree_in(self, var):
        """Max exponent of ``var`` over terms, floored at 0 (positive part)."""
        return max(0, max((m.degree_in(var) for m in self._terms), default=0))

    def has_negative_exponent(self):
        return any(m.has_negative_exponent() for m in self._terms)

    def __add__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        terms = dict(self._terms)
        for m, c in other._terms.items():
            s = terms.get(m)
            s = c if s is None else s + c
            if s.is_zero:
                terms.pop(m, None)
            else:
                terms[m] = s
        return Poly(terms)

    def __neg__(self):
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Coeff)):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        terms = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = m1 * m2
                c = c1 * c2
                s = terms.get(m)
                s = c if s is None else s + c
                if s.is_zero:
                    terms.pop(m, None)
                else:
                    terms[m] = s
        return Poly(terms)

    __rmul__ = __mul__

    def scale(self, factor):
        if not isinstance(factor, Coeff):
            factor = Coeff.rational(factor)
        if factor.is_zero:
            return Poly()
        return Poly({m: c * factor for m, c in self._terms.items()})

    def __pow__(self, k):
        if k < 0:
            if len(self._terms) != 1:
                raise ValueError("negative power of a multi-term polynomial")
            (m, c), = self._terms.items()
            return Poly({m ** k: _coeff_pow(c, k)})
        result = Poly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def partial(self, var):
        """Exact partial derivative, valid for negative exponents too."""
        terms = {}
        for m, c in self._terms.items():
            e = m.degree_in(var)
            if e:
                terms[m / Monomial.of(var)] = c * Fraction(e)
        return Poly(terms)

    def substitute(self, mapping):
        """Replace variables by polynomials; unmapped variables stay.

        Negative powers require the replacement to be a single-term
        polynomial (exactly invertible).
        """
        result = Poly()
        for m, c in self._terms.items():
            term = Poly.constant(c)
            for v, e in m.items():
                rep = mapping.get(v)
                if rep is None:
                    term = term * Poly.of_var(v, e)
                else:
                    term = term * (rep ** e)
            result = result + term
        return result

    def split_parameters(self):
        """Move parameter powers out of monomials into coefficients."""
        from .variables import VarKind
        terms = {}
        changed = False
        for m, c in self._terms.items():
            pmono = m.restrict(lambda v: v.kind is VarKind.PARAMETER)
            if not pmono.is_unit:
                changed = True
                m = m / pmono
                c = c * Coeff({pmono: Fraction(1)})
            s = terms.get(m)
            s = c if s is None else s + c
            if s.is_zero:
                terms.pop(m, None)
            else:
                terms[m] = s
        return Poly(terms) if changed else self

    def evaluate(self, values):
        """Float value of the polynomial at a point (params via Coeff)."""
        total = 0.0
        for m, c in self._terms.items():
            val = c if isinstance(c, float) else c.evaluate(values)
            for v, e in m.items():
                val *= values[v.name] ** e
            total += val
        return total

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def struct_key(self):
        return tuple(sorted((m.struct_key(), c.struct_key())
                            for m, c in self._terms.items()))

    def render(self, power="**"):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms(descending=True):
            if m.is_unit:
                body = c.render()
                if not c.is_rational and len(c.param_monomials()) > 1:
                    body = "(" + body + ")"
                parts.append(body)
                continue
            mono = m.render(power)
            if c.is_rational:
                q = c.as_fraction()
                if q == 1:
                    parts.append(mono)
                elif q == -1:
                    parts.append("-" + mono)
                else:
                    parts.append(f"{q}*{mono}")
            else:
                body = c.render()
                if len(c.param_monomials()) > 1:
                    body = "(" + body + ")"
                elif body.startswith("-"):
                    pass
                parts.append(f"{body}*{mono}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"Poly({self.render()})"

    def __str__(self):
        return self.render()


def _coeff_pow(c, k):
    if k >= 0:
        out = Coeff.one()
        for _ in range(k):
            out = out * c
        return out
    inv = c.reciprocal()
    out = Coeff.one()
    for _ in range(-k):
        out = out * inv
    return out


def poly_add(a, b):
    """Spec-level alias; operands must share one variable universe."""
    return a + b


def poly_mul(a, b):
    return a * b
