"""ODE systems, Lie differentiation and quadratic pair decomposition."""

from __future__ import annotations

from .errors import UndeclaredVariable
from .expressions import Expression, expression_variables
from .monomials import Monomial, sorted_monomials
from .poly import Poly
from .variables import Variable, VarKind


class OdeSystem:
    """Ordered equations ``var' = rhs`` plus input/parameter declarations.

    Right-hand sides are :class:`Poly` (possibly Laurent) or, before
    polynomialization, :class:`Expression`. Values are immutable after
    construction; transformations build new systems.
    """

    def __init__(self, equations, inputs=(), parameters=(), couplings=(),
                 laurent=False, validate=True):
        # equations: iterable of (Variable, rhs)
        eqs = []
        rhs_map = {}
        for v, rhs in (equations.items() if isinstance(equations, dict) else equations):
            if v in rhs_map:
                raise ValueError(f"duplicate equation for {v.name}")
            eqs.append(v)
            rhs_map[v] = rhs
        self.states = tuple(eqs)
        self._rhs = rhs_map
        self.inputs = tuple(inputs)          # (Variable, smooth: bool)
        self.parameters = tuple(parameters)
        self.couplings = tuple(couplings)    # (placeholder, target block state)
        self.laurent = bool(laurent)
        if validate:
            self._check()

    def _check(self):
        names = {}
        declared = set(self.states) | set(self.parameters)
        for c, _target in self.couplings:
            declared.add(c)
        for u, _ in self.inputs:
            declared.add(u)
        for v in list(declared):
            if v.name in names:
                raise ValueError(f"duplicate variable name {v.name!r}")
            names[v.name] = v
        base_inputs = {u for u, _ in self.inputs}
        for v in self.states:
            rhs = self._rhs[v]
            for w in (rhs.variables() if isinstance(rhs, Poly)
                      else expression_variables(rhs)):
                if w.kind is VarKind.INPUT:
                    if w.base_input() not in base_inputs:
                        raise UndeclaredVariable(f"undeclared input {w.name!r}")
                elif w not in declared:
                    raise UndeclaredVariable(f"undeclared variable {w.name!r}")
            if not self.laurent and isinstance(rhs, Poly) and rhs.has_negative_exponent():
                raise ValueError("negative exponents require Laurent mode")

    def rhs(self, var):
        return self._rhs[var]

    def equations(self):
        return [(v, self._rhs[v]) for v in self.states]

    @property
    def is_polynomial(self):
        return all(isinstance(self._rhs[v], Poly) for v in self.states)

    def rhs_poly(self, var):
        rhs = self._rhs[var]
        if not isinstance(rhs, Poly):
            raise TypeError(f"right-hand side of {var.name} is not polynomial; "
                            "run polynomialization first")
        return rhs

    def smooth_inputs(self):
        return [u for u, smooth in self.inputs if smooth]

    def input_is_smooth(self, var):
        base = var.base_input()
        for u, smooth in self.inputs:
            if u == base:
                return smooth
        raise UndeclaredVariable(f"undeclared input {var.name!r}")

    def max_input_order(self):
        """Highest input-derivative order appearing in any right-hand side."""
        top = 0
        for v in self.states:
            rhs = self._rhs[v]
            if isinstance(rhs, Poly):
                for w in rhs.variables():
                    if w.kind is VarKind.INPUT:
                        top = max(top, w.order)
        return top

    def with_equations(self, equations, **overrides):
        kw = dict(inputs=self.inputs, parameters=self.parameters,
                  couplings=self.couplings, laurent=self.laurent)
        kw.update(overrides)
        return OdeSystem(equations, **kw)

    def map_rhs(self, fn):
        return self.with_equations([(v, fn(self._rhs[v])) for v in self.states])

    def __eq__(self, other):
        if not isinstance(other, OdeSystem):
            return NotImplemented
        return (self.states == other.states and self._rhs == other._rhs
                and self.inputs == other.inputs
                and self.parameters == other.parameters
                and self.couplings == other.couplings
                and self.laurent == other.laurent)

    def __repr__(self):
        eqs = ", ".join(f"{v.name}' = {self._rhs[v]}" for v in self.states)
        return f"OdeSystem({eqs})"


def lie_derivative(f, system):
    """Derivative of ``f`` along the system's trajectories.

    Sums rhs(v) * df/dv over differential variables and u' * df/du over
    inputs, creating the next-order input derivative on demand.
    """
    declared = set(system.states)
    base_inputs = {u for u, _ in system.inputs}
    out = Poly.zero()
    for v in f.variables():
        if v.is_differential:
            if v not in declared:
                raise UndeclaredVariable(f"undeclared variable {v.name!r}")
            out = out + system.rhs_poly(v) * f.partial(v)
        elif v.kind is VarKind.INPUT:
            if v.base_input() not in base_inputs:
                raise UndeclaredVariable(f"undeclared input {v.name!r}")
            out = out + Poly.of_var(v.derivative()) * f.partial(v)
        # parameters and coupling placeholders are constants
    return out


def decompose_quadratic(m, alphabet):
    """Factor ``m = a*b`` with both factors in ``alphabet + {1}``.

    Returns the pair minimal in canonical order with ``a <= b``, or None.
    The unit monomial is implicitly admissible on either side.
    """
    aset = set(alphabet)
    unit = Monomial.unit()
    if m.is_unit:
        return (unit, unit)
    for a in sorted_monomials(aset | {unit}):
        b = m / a
        if b == unit or b in aset:
            if a <= b:
                return (a, b)
    return None
