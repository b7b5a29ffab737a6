"""Problem-file parser.

Grammar, one declaration or equation per statement::

    states: x1, x2
    inputs: u smooth, v nonsmooth
    params: A, E, R
    options: laurent, mode=input-free
    coupling: xD for x
    x1' = x1^3 + 2/3*x2^2;
    x2' = exp(-x1) + x2;

Identifiers are C-like; literals are integers, decimals or rationals a/b;
operators are + - * / ^ (also ** for powers); functions exp, log, sin, cos.
``^`` binds tighter than unary minus and decimal exponents produce
real-power nodes. ``#`` starts a comment. Errors carry line:column.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParseError, SemanticError
from .expressions import (Add, Const, Expression, Func, Mul, Pow, Var,
                          FUNCTIONS, render_expression)
from .poly import Poly
from .systems import OdeSystem
from .variables import Variable, VarKind

_SECTION_KEYS = ("states", "inputs", "params", "options", "coupling")


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.text!r}@{self.line}:{self.col})"


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            tokens.append(_Token("newline", "\n", line, col))
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(_Token("number", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == "*" and i + 1 < n and text[i + 1] == "*":
            tokens.append(_Token("op", "^", line, start_col))
            i += 2
            col += 2
            continue
        if ch in "+-*/^(),=;:'":
            tokens.append(_Token("op", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.states = []        # names in declaration order
        self.inputs = []        # (name, smooth)
        self.params = []
        self.couplings = []     # (placeholder name, state name)
        self.options = {"laurent": False, "mode": None}
        self.equations = {}     # state name -> Expression
        self.eq_order = []

    # -- token helpers

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind, text=None):
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}",
                             t.line, t.col)
        return self.next()

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    # -- top level

    def parse(self):
        while True:
            self.skip_newlines()
            t = self.peek()
            if t.kind == "eof":
                break
            if t.kind != "name":
                raise ParseError(f"expected a declaration or equation, found "
                                 f"{t.text!r}", t.line, t.col)
            nxt = self.tokens[self.pos + 1]
            if t.text in _SECTION_KEYS and nxt.kind == "op" and nxt.text == ":":
                self.parse_section()
            else:
                self.parse_equation()
        return self.build()

    def parse_section(self):
        head = self.next()
        self.expect("op", ":")
        if head.text == "states":
            for name, _extra in self.name_list():
                self.states.append(name)
        elif head.text == "params":
            for name, _extra in self.name_list():
                self.params.append(name)
        elif head.text == "inputs":
            for name, extra in self.name_list(allow_tag=True):
                if extra not in (None, "smooth", "nonsmooth"):
                    raise SemanticError(f"unknown input tag {extra!r}")
                self.inputs.append((name, extra != "nonsmooth"))
        elif head.text == "coupling":
            while True:
                placeholder = self.expect("name")
                kw = self.expect("name")
                if kw.text != "for":
                    raise ParseError("expected 'for' in coupling declaration",
                                     kw.line, kw.col)
                target = self.expect("name")
                self.couplings.append((placeholder.text, target.text))
                if self.peek().kind == "op" and self.peek().text == ",":
                    self.next()
                    continue
                break
        elif head.text == "options":
            while True:
                opt = self.expect("name")
                if opt.text == "laurent":
                    self.options["laurent"] = True
                elif opt.text == "mode":
                    self.expect("op", "=")
                    val = self.expect("name").text
                    while self.peek().kind == "op" and self.peek().text == "-":
                        self.next()
                        val += "-" + self.expect("name").text
                    self.options["mode"] = val
                else:
                    raise SemanticError(f"unknown option {opt.text!r}")
                if self.peek().kind == "op" and self.peek().text == ",":
                    self.next()
                    continue
                break

    def name_list(self, allow_tag=False):
        out = []
        while True:
            t = self.expect("name")
            extra = None
            if allow_tag and self.peek().kind == "name":
                extra = self.next().text
            out.append((t.text, extra))
            if self.peek().kind == "op" and self.peek().text == ",":
                self.next()
                continue
            break
        return out

    def parse_equation(self):
        name = self.expect("name")
        self.expect("op", "'")
        self.expect("op", "=")
        rhs = self.parse_expr()
        self.expect("op", ";")
        if name.text in self.equations:
            raise SemanticError(f"duplicate equation for {name.text!r}")
        self.equations[name.text] = rhs
        self.eq_order.append(name.text)

    # -- expressions

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.parse_term()
            if op == "-":
                rhs = Mul((Const(Fraction(-1)), rhs))
            node = Add((node, rhs))
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.parse_unary()
            if op == "/":
                rhs = Pow(rhs, Fraction(-1))
            node = Mul((node, rhs))
        return node

    def parse_unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.next()
            return Mul((Const(Fraction(-1)), self.parse_unary()))
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            exponent = self.parse_exponent()
            return Pow(base, exponent)
        return base

    def parse_exponent(self):
        sign = Fraction(1)
        if self.peek().kind == "op" and self.peek().text == "-":
            self.next()
            sign = Fraction(-1)
        t = self.peek()
        if t.kind == "number":
            self.next()
            return sign * Fraction(t.text)
        if t.kind == "op" and t.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("op", ")")
            value = _fold_constant(inner)
            if value is None:
                raise ParseError("exponent must be a rational constant",
                                 t.line, t.col)
            return sign * value
        raise ParseError(f"expected an exponent, found {t.text or t.kind!r}",
                         t.line, t.col)

    def parse_atom(self):
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Const(Fraction(t.text))
        if t.kind == "name":
            self.next()
            if t.text in FUNCTIONS:
                self.expect("op", "(")
                arg = self.parse_expr()
                self.expect("op", ")")
                return Func(t.text, arg)
            return Var(_Placeholder(t.text, t.line, t.col))
        if t.kind == "op" and t.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("op", ")")
            return inner
        raise ParseError(f"expected an expression, found {t.text or t.kind!r}",
                         t.line, t.col)

    # -- assembly

    def build(self):
        if not self.states:
            raise SemanticError("no states declared")
        table = {}
        state_vars = {}
        for i, name in enumerate(self.states):
            v = Variable(name, VarKind.STATE, index=i)
            table[name] = v
            state_vars[name] = v
        input_vars = []
        for i, (name, smooth) in enumerate(self.inputs):
            v = Variable(name, VarKind.INPUT, index=i)
            _check_fresh(table, name)
            table[name] = v
            input_vars.append((v, smooth))
        param_vars = []
        for i, name in enumerate(self.params):
            v = Variable(name, VarKind.PARAMETER, index=i)
            _check_fresh(table, name)
            table[name] = v
            param_vars.append(v)
        coupling_vars = []
        for i, (name, target) in enumerate(self.couplings):
            if target not in state_vars:
                raise SemanticError(
                    f"coupling {name!r} refers to unknown state {target!r}")
            v = Variable(name, VarKind.COUPLING, index=i)
            _check_fresh(table, name)
            table[name] = v
            coupling_vars.append((v, state_vars[target]))

        for name in self.states:
            if name not in self.equations:
                raise SemanticError(f"missing equation for state {name!r}")
        for name in self.eq_order:
            if name not in state_vars:
                raise SemanticError(f"equation for non-state {name!r}")

        equations = []
        for name in self.states:
            expr = _resolve(self.equations[name], table)
            equations.append((state_vars[name], expr))
        system = OdeSystem(equations, inputs=input_vars, parameters=param_vars,
                           couplings=coupling_vars,
                           laurent=self.options["laurent"])
        return system, self.options


class _Placeholder:
    """Unresolved identifier carried inside the tree until assembly."""

    def __init__(self, name, line, col):
        self.name = name
        self.line = line
        self.col = col


def _check_fresh(table, name):
    if name in table:
        raise SemanticError(f"duplicate variable name {name!r}")


def _resolve(expr, table):
    if isinstance(expr, Var):
        ph = expr.var
        if isinstance(ph, _Placeholder):
            v = table.get(ph.name)
            if v is None:
                raise SemanticError(
                    f"{ph.line}:{ph.col}: undeclared symbol {ph.name!r}")
            return Var(v)
        return expr
    if isinstance(expr, Add):
        return Add(tuple(_resolve(a, table) for a in expr.args))
    if isinstance(expr, Mul):
        return Mul(tuple(_resolve(a, table) for a in expr.args))
    if isinstance(expr, Pow):
        return Pow(_resolve(expr.base, table), expr.exponent)
    if isinstance(expr, Func):
        return Func(expr.fn, _resolve(expr.arg, table))
    return expr


def _fold_constant(expr):
    from .normalform import normalize
    gp = normalize(expr)
    p = gp.try_to_poly(laurent=True)
    if p is None:
        return None
    if p.is_zero:
        return Fraction(0)
    if not p.is_constant:
        return None
    c = p.coeff(p.monomials()[0])
    if not c.is_rational:
        return None
    return c.as_fraction()


def parse_problem(text):
    """Parse a problem file into an OdeSystem (+ option dict)."""
    system, options = _Parser(text).parse()
    return _convert_polynomial(system), options


def _convert_polynomial(system):
    """Replace expression right-hand sides by exact polynomials where
    possible; keep the expression form otherwise."""
    from .normalform import normalize
    equations = []
    for v in system.states:
        rhs = system.rhs(v)
        if isinstance(rhs, Expression):
            p = normalize(rhs).try_to_poly(laurent=system.laurent)
            if p is not None:
                rhs = p
        equations.append((v, rhs))
    return system.with_equations(equations)


def parse(text):
    """Problem text -> OdeSystem, or CoupledFamily when couplings are
    declared."""
    system, options = parse_problem(text)
    if system.couplings:
        from .agnostic import extract_family
        return extract_family(system)
    return system


def render_problem(system):
    """Problem text that reparses to an identical system."""
    lines = [f"states: {', '.join(v.name for v in system.states)}"]
    if system.inputs:
        lines.append("inputs: " + ", ".join(
            f"{u.name} {'smooth' if smooth else 'nonsmooth'}"
            for u, smooth in system.inputs))
    if system.parameters:
        lines.append("params: " + ", ".join(p.name for p in system.parameters))
    if system.laurent:
        lines.append("options: laurent")
    for c, target in system.couplings:
        lines.append(f"coupling: {c.name} for {target.name}")
    for v in system.states:
        rhs = system.rhs(v)
        if isinstance(rhs, Poly):
            body = rhs.render(power="^")
        else:
            body = render_expression(rhs, power="^")
        lines.append(f"{v.name}' = {body};")
    return "\n".join(lines) + "\n"
