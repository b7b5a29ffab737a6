"""Exact coefficients: rational linear combinations of parameter monomials.

Keeping parameters inside coefficients (never in search monomials) means the
combinatorial search depends only on the state/input monomial support of a
system. Parameter exponents may be negative, so ratios of parameters such as
``E/R`` stay exact.
"""

from __future__ import annotations

from fractions import Fraction

from .monomials import Monomial

_UNIT = Monomial.unit()


class Coeff:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for mono, q in terms.items():
                q = Fraction(q)
                if q:
                    clean[mono] = q
        self._terms = clean
        self._hash = None

    @staticmethod
    def rational(q):
        q = Fraction(q)
        return Coeff({_UNIT: q}) if q else _ZERO

    @staticmethod
    def of_param(var, exp=1):
        return Coeff({Monomial.of(var, exp): Fraction(1)})

    @staticmethod
    def zero():
        return _ZERO

    @staticmethod
    def one():
        return _ONE

    @property
    def is_zero(self):
        return not self._terms

    @property
    def is_rational(self):
        return not self._terms or (len(self._terms) == 1 and _UNIT in self._terms)

    def as_fraction(self):
        if not self._terms:
            return Fraction(0)
        if not self.is_rational:
            raise ValueError(f"coefficient {self} involves parameters")
        return self._terms[_UNIT]

    def param_monomials(self):
        return list(self._terms)

    def items(self):
        return self._terms.items()

    def __add__(self, other):
        if not isinstance(other, Coeff):
            return NotImplemented
        terms = dict(self._terms)
        for m, q in other._terms.items():
            s = terms.get(m, 0) + q
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return Coeff(terms)

    def __neg__(self):
        return Coeff({m: -q for m, q in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Coeff.rational(other)
        if not isinstance(other, Coeff):
            return NotImplemented
        terms = {}
        for m1, q1 in self._terms.items():
            for m2, q2 in other._terms.items():
                m = m1 * m2
                s = terms.get(m, 0) + q1 * q2
                if s:
                    terms[m] = s
                else:
                    terms.pop(m, None)
        return Coeff(terms)

    __rmul__ = __mul__

    def reciprocal(self):
        """Exact inverse; defined only for single-term coefficients."""
        if len(self._terms) != 1:
            raise ValueError(f"cannot invert multi-term coefficient {self}")
        (m, q), = self._terms.items()
        return Coeff({m ** -1: Fraction(1) / q})

    def evaluate(self, param_values):
        """Numeric value given float/Fraction values for every parameter."""
        total = 0.0
        for m, q in self._terms.items():
            val = float(q)
            for v, e in m.items():
                val *= float(param_values[v.name]) ** e
            total += val
        return total

    def __eq__(self, other):
        if not isinstance(other, Coeff):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def struct_key(self):
        return tuple(sorted((m.struct_key(), q) for m, q in self._terms.items()))

    def render(self):
        if not self._terms:
            return "0"
        parts = []
        for m in sorted(self._terms, key=Monomial.struct_key):
            q = self._terms[m]
            if m.is_unit:
                parts.append(str(q))
            else:
                num = [v.name if e == 1 else f"{v.name}**{e}"
                       for v, e in m.items() if e > 0]
                den = [v.name if e == -1 else f"{v.name}**{-e}"
                       for v, e in m.items() if e < 0]
                body = "*".join(num) if num else "1"
                if den:
                    body += "/" + ("*".join(den) if len(den) == 1 else "(" + "*".join(den) + ")")
                if q == 1:
                    parts.append(body)
                elif q == -1:
                    parts.append(f"-{body}")
                else:
                    parts.append(f"{q}*{body}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"Coeff({self.render()})"

    def __str__(self):
        return self.render()


_ZERO = Coeff()
_ONE = Coeff({_UNIT: Fraction(1)})
