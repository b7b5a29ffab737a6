"""Sparse monomials: products of integer powers of variables.

Exponents are nonzero integers; negative exponents are legal only when the
enclosing system runs in Laurent mode (callers enforce that). The canonical
order is graded: lower total degree first, ties broken so that a higher power
of an earlier variable sorts first (``x1**2 < x1*x2 < x2**2``).
"""

from __future__ import annotations

import functools
import itertools


class Monomial:
    __slots__ = ("_exps", "_pairs", "_degree", "_hash", "_skey")

    def __init__(self, exps=()):
        items = exps.items() if isinstance(exps, dict) else exps
        pairs = tuple(sorted(((v, int(e)) for v, e in items if e != 0),
                             key=lambda p: p[0].sort_key))
        self._init_from(pairs)

    def _init_from(self, pairs):
        self._pairs = pairs
        self._exps = dict(pairs)
        self._degree = sum(e for _, e in pairs)
        self._hash = hash(pairs)
        self._skey = None

    @classmethod
    def _from_sorted(cls, pairs):
        obj = object.__new__(cls)
        obj._init_from(pairs)
        return obj

    @staticmethod
    def unit():
        return _UNIT

    @staticmethod
    def of(var, exp=1):
        if exp == 0:
            return _UNIT
        return Monomial._from_sorted(((var, int(exp)),))

    @property
    def degree(self):
        """Total degree: the sum of all exponents (may be negative)."""
        return self._degree

    @property
    def positive_degree(self):
        """Sum of the positive exponents only."""
        return sum(e for _, e in self._pairs if e > 0)

    def degree_in(self, var):
        return self._exps.get(var, 0)

    @property
    def is_unit(self):
        return not self._pairs

    def variables(self):
        return [v for v, _ in self._pairs]

    def items(self):
        return self._pairs

    def has_negative_exponent(self):
        return any(e < 0 for _, e in self._pairs)

    def max_abs_exponent(self):
        return max((abs(e) for _, e in self._pairs), default=0)

    def _merge(self, other_pairs, sign):
        a, b = self._pairs, other_pairs
        if not b:
            return self
        out = []
        i = j = 0
        la, lb = len(a), len(b)
        while i < la and j < lb:
            va, ea = a[i]
            vb, eb = b[j]
            if va == vb:
                e = ea + sign * eb
                if e:
                    out.append((va, e))
                i += 1
                j += 1
            elif va.sort_key < vb.sort_key:
                out.append(a[i])
                i += 1
            else:
                out.append((vb, sign * eb))
                j += 1
        out.extend(a[i:])
        for k in range(j, lb):
            vb, eb = b[k]
            out.append((vb, sign * eb))
        return Monomial._from_sorted(tuple(out))

    def __mul__(self, other):
        if not isinstance(other, Monomial):
            return NotImplemented
        if not self._pairs:
            return other
        return self._merge(other._pairs, 1)

    def __truediv__(self, other):
        """Formal quotient by exponent subtraction; may go negative."""
        if not isinstance(other, Monomial):
            return NotImplemented
        return self._merge(other._pairs, -1)

    def __pow__(self, k):
        if k == 0:
            return _UNIT
        return Monomial._from_sorted(tuple((v, e * k) for v, e in self._pairs))

    def restrict(self, keep):
        """Keep only exponents of variables satisfying the predicate."""
        return Monomial._from_sorted(tuple((v, e) for v, e in self._pairs
                                           if keep(v)))

    def divisors(self):
        """All component-wise divisors, unit and self included.

        For a negative exponent e the admissible range is e..0, so every
        divisor d leaves a quotient self/d with exponents of the same sign.
        """
        if not self._pairs:
            return [_UNIT]
        ranges = []
        for v, e in self._pairs:
            lo, hi = (0, e) if e > 0 else (e, 0)
            ranges.append([(v, k) for k in range(lo, hi + 1)])
        out = []
        for combo in itertools.product(*ranges):
            out.append(Monomial._from_sorted(tuple(p for p in combo if p[1])))
        return out

    def _cmp(self, other):
        if self._degree != other._degree:
            return -1 if self._degree < other._degree else 1
        i, j = 0, 0
        a, b = self._pairs, other._pairs
        while i < len(a) and j < len(b):
            va, ea = a[i]
            vb, eb = b[j]
            if va == vb:
                if ea != eb:
                    return -1 if ea > eb else 1
                i += 1
                j += 1
            elif va.sort_key < vb.sort_key:
                return -1 if ea > 0 else 1
            else:
                return 1 if eb > 0 else -1
        if i < len(a):
            return -1 if a[i][1] > 0 else 1
        if j < len(b):
            return 1 if b[j][1] > 0 else -1
        return 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __eq__(self, other):
        if not isinstance(other, Monomial):
            return NotImplemented
        return self._pairs == other._pairs

    def __hash__(self):
        return self._hash

    def struct_key(self):
        """Process-independent structural key, usable as a sort key."""
        if self._skey is None:
            self._skey = tuple((v.sort_key, e) for v, e in self._pairs)
        return self._skey

    def render(self, power="**"):
        if not self._pairs:
            return "1"
        out = []
        for v, e in self._pairs:
            out.append(v.name if e == 1 else f"{v.name}{power}{e}")
        return "*".join(out)

    def __repr__(self):
        return f"Monomial({self.render()})"

    def __str__(self):
        return self.render()


_UNIT = Monomial()


def sorted_monomials(monos):
    """Sort monomials in canonical (ascending) order."""
    return sorted(monos, key=functools.cmp_to_key(lambda a, b: a._cmp(b)))


def display_sorted(monos):
    """Rendering order: degree descending, canonical order inside a degree."""

    def cmp(a, b):
        if a.degree != b.degree:
            return -1 if a.degree > b.degree else 1
        return a._cmp(b)

    return sorted(monos, key=functools.cmp_to_key(cmp))
