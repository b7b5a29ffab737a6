"""Expression trees for elementary-function right-hand sides.

Node kinds: constant, variable, sum, product, power (integer or non-integer
rational exponent) and the functions exp, log, sin, cos. Quotients are powers
with exponent -1. A polynomial expression converts back to :class:`Poly`
exactly; converting a non-integer power raises, which forces explicit
polynomialization instead of silent truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import UnsupportedNode
from .monomials import Monomial
from .poly import Poly
from .coeffs import Coeff
from .variables import Variable, VarKind


class Expression:
    __slots__ = ()

    def __add__(self, other):
        return Add((self, _coerce(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Mul((self, _coerce(other)))

    __rmul__ = __mul__

    def __sub__(self, other):
        return Add((self, Mul((Const(Fraction(-1)), _coerce(other)))))

    def __neg__(self):
        return Mul((Const(Fraction(-1)), self))

    def __truediv__(self, other):
        return Mul((self, Pow(_coerce(other), Fraction(-1))))

    def __pow__(self, exponent):
        return Pow(self, Fraction(exponent))


def _coerce(x):
    if isinstance(x, Expression):
        return x
    if isinstance(x, Variable):
        return Var(x)
    return Const(Fraction(x))


@dataclass(frozen=True, slots=True)
class Const(Expression):
    value: Fraction

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True, slots=True)
class Var(Expression):
    var: Variable

    def __str__(self):
        return self.var.name


@dataclass(frozen=True, slots=True)
class Add(Expression):
    args: tuple

    def __str__(self):
        return " + ".join(f"({a})" for a in self.args)


@dataclass(frozen=True, slots=True)
class Mul(Expression):
    args: tuple

    def __str__(self):
        return "*".join(f"({a})" for a in self.args)


@dataclass(frozen=True, slots=True)
class Pow(Expression):
    base: Expression
    exponent: Fraction

    def __str__(self):
        return f"({self.base})**({self.exponent})"


@dataclass(frozen=True, slots=True)
class Func(Expression):
    fn: str  # exp | log | sin | cos
    arg: Expression

    def __str__(self):
        return f"{self.fn}({self.arg})"


FUNCTIONS = ("exp", "log", "sin", "cos")


def poly_to_expression(p):
    """Embed a polynomial as an expression (losslessly)."""
    terms = []
    for mono, coeff in p.sorted_terms(descending=True):
        factors = []
        if coeff.is_rational:
            q = coeff.as_fraction()
            if q != 1 or mono.is_unit:
                factors.append(Const(q))
        else:
            factors.append(_coeff_expression(coeff))
        for v, e in mono.items():
            factors.append(Var(v) if e == 1 else Pow(Var(v), Fraction(e)))
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    if not terms:
        return Const(Fraction(0))
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def _coeff_expression(c):
    parts = []
    for pmono, q in sorted(c.items(), key=lambda it: it[0].struct_key()):
        factors = []
        if q != 1 or pmono.is_unit:
            factors.append(Const(q))
        for v, e in pmono.items():
            factors.append(Var(v) if e == 1 else Pow(Var(v), Fraction(e)))
        parts.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    return parts[0] if len(parts) == 1 else Add(tuple(parts))


def expression_to_poly(expr, laurent=False):
    """Exact conversion; raises UnsupportedNode on non-polynomial content."""
    from .normalform import normalize
    return normalize(expr).to_poly(laurent=laurent)


def expression_variables(expr):
    out = {}

    def walk(e):
        if isinstance(e, Var):
            out[e.var] = True
        elif isinstance(e, Add) or isinstance(e, Mul):
            for a in e.args:
                walk(a)
        elif isinstance(e, Pow):
            walk(e.base)
        elif isinstance(e, Func):
            walk(e.arg)

    walk(expr)
    return list(out)


def render_expression(expr, power="**"):
    """Readable rendering with minimal parentheses."""

    def prec(e):
        if isinstance(e, Add):
            return 1
        if isinstance(e, Mul):
            return 2
        if isinstance(e, Pow):
            return 3
        return 4

    def wrap(e, level):
        s = go(e)
        return f"({s})" if prec(e) < level else s

    def go(e):
        if isinstance(e, Const):
            return str(e.value)
        if isinstance(e, Var):
            return e.var.name
        if isinstance(e, Add):
            out = wrap(e.args[0], 1)
            for a in e.args[1:]:
                s = wrap(a, 1)
                out += " - " + s[1:] if s.startswith("-") else " + " + s
            return out
        if isinstance(e, Mul):
            # pull a leading -1 constant out as a sign
            args = list(e.args)
            sign = ""
            if args and isinstance(args[0], Const) and args[0].value == -1 and len(args) > 1:
                sign = "-"
                args = args[1:]
            return sign + "*".join(wrap(a, 3) for a in args)
        if isinstance(e, Pow):
            exp = e.exponent
            if exp.denominator == 1:
                return f"{wrap(e.base, 4)}{power}{exp.numerator}"
            return f"{wrap(e.base, 4)}{power}({exp})"
        if isinstance(e, Func):
            return f"{e.fn}({go(e.arg)})"
        raise UnsupportedNode(f"cannot render {e!r}")

    return go(expr)
