"""Emit lifted quadratic(-bilinear) systems and their operator form."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotAQuadratization, UnsupportedNode
from .monomials import Monomial, sorted_monomials
from .poly import Poly
from .systems import OdeSystem
from .variables import Variable, VarKind


@dataclass
class QuadraticSystem:
    """Quadratic lifting of an ODE system.

    ``system`` is the lifted OdeSystem (states, then introduced variables,
    every right-hand side of total degree at most two over the generalized
    alphabet). ``introduced`` maps each new variable to its defining
    monomial in the original variables.
    """

    system: OdeSystem
    introduced: list   # [(Variable, Monomial)]

    def definitions(self):
        return {w: Poly.of_monomial(m) for w, m in self.introduced}

    def contains_input_derivatives(self):
        for v in self.system.states:
            for w in self.system.rhs_poly(v).variables():
                if w.kind is VarKind.INPUT and w.order > 0:
                    return True
        return False

    def render_text(self):
        lines = ["Introduced variables:"]
        if self.introduced:
            lines += [f"{w.name} = {m.render()}" for w, m in self.introduced]
        else:
            lines.append("(none)")
        lines.append("")
        for v in self.system.states:
            lines.append(f"{v.name}' = {self.system.rhs_poly(v).render()}")
        return "\n".join(lines)

    def to_json_dict(self):
        return {
            "introduced": [{"name": w.name, "definition": m.render()}
                           for w, m in self.introduced],
            "equations": {v.name: self.system.rhs_poly(v).render()
                          for v in self.system.states},
        }

    def operator_form(self, param_values=None):
        return extract_operators(self, param_values=param_values)


def _fresh_names(count, taken):
    names = []
    i = 0
    while len(names) < count:
        name = f"w{i}"
        while name in taken:
            name += "_"
        names.append(name)
        taken.add(name)
        i += 1
    return names


def emit_quadratic(system, new_monomials, mode=None, _checked=False):
    """Replace every right-hand-side monomial by its canonical quadratic
    factorization over the alphabet; introduced variables are named w0, w1,
    ... in canonical order of their defining monomials."""
    from .quadratize import _Context, default_mode

    mode = mode or default_mode(system)
    ctx = _Context(system, mode)
    S = sorted_monomials(new_monomials)
    alphabet = ctx.base_alphabet | set(S)
    if not _checked:
        from .quadratize import is_quadratization
        if not is_quadratization(system, S, mode):
            raise NotAQuadratization("the given monomials do not quadratize the system")

    taken = {v.name for v in system.states}
    taken |= {u.name for u, _ in system.inputs}
    taken |= {p.name for p in system.parameters}
    names = _fresh_names(len(S), taken)
    next_index = max((v.index for v in system.states), default=-1) + 1
    wvars = [Variable(nm, VarKind.INTRODUCED, index=next_index + i)
             for i, nm in enumerate(names)]
    symbol = {}
    for m in ctx.base_alphabet:
        (v, _), = m.items()
        symbol[m] = v
    for w, m in zip(wvars, S):
        symbol[m] = w

    ordered = sorted_monomials(alphabet | {Monomial.unit()})

    def decompose(m):
        if m.is_unit:
            return (Monomial.unit(), Monomial.unit())
        td = ctx.top_degree(m)
        if td > 1:
            raise NotAQuadratization(f"monomial {m} is quadratic in top-order "
                                     "input derivatives")
        if td == 1:
            tau = ctx.top_part(m)
            rest = m / tau
            if rest.is_unit or rest in alphabet:
                return (tau, rest) if tau <= rest else (rest, tau)
            raise NotAQuadratization(f"monomial {m} does not decompose")
        for a in ordered:
            b = m / a
            if b.is_unit or b in alphabet:
                if a <= b:
                    return (a, b)
        raise NotAQuadratization(f"monomial {m} does not decompose")

    def lift(p):
        out = Poly.zero()
        for m, c in p.terms():
            a, b = decompose(m)
            lifted = Monomial.unit()
            if not a.is_unit:
                lifted = lifted * Monomial.of(symbol[a])
            if not b.is_unit:
                lifted = lifted * Monomial.of(symbol[b])
            out = out + Poly({lifted: c})
        return out

    equations = [(v, lift(system.rhs_poly(v))) for v in system.states]
    equations += [(w, lift(ctx.lie(m))) for w, m in zip(wvars, S)]
    lifted_system = OdeSystem(equations, inputs=system.inputs,
                              parameters=system.parameters, laurent=False)
    return QuadraticSystem(system=lifted_system,
                           introduced=list(zip(wvars, S)))


# ---------------------------------------------------------------------------
# Operator form


@dataclass
class OperatorForm:
    """Matrices of ``z' = A z + H (z (x)' z) + sum_i N_i z u_i + B u + c``
    with H over the compact Kronecker product (row-major upper-triangular
    pair order). The constant vector c extends the classical form, since
    emitted systems may carry constant terms."""

    state_names: list
    input_names: list
    A: np.ndarray
    H: np.ndarray
    N: list
    B: np.ndarray
    c: np.ndarray

    def pair_index(self, i, j):
        n = len(self.state_names)
        if i > j:
            i, j = j, i
        return i * n - (i * (i - 1)) // 2 + (j - i)

    def evaluate(self, z, u):
        n = len(self.state_names)
        quad = np.empty(n * (n + 1) // 2)
        k = 0
        for i in range(n):
            for j in range(i, n):
                quad[k] = z[i] * z[j]
                k += 1
        out = self.A @ z + self.H @ quad + self.c
        for i, ui in enumerate(u):
            out = out + ui * (self.N[i] @ z) + ui * self.B[:, i]
        return out

    def to_json_dict(self):
        n = len(self.state_names)
        entries = [[int(r), int(cidx), float(self.H[r, cidx])]
                   for r, cidx in zip(*np.nonzero(self.H))]
        return {
            "states": self.state_names,
            "inputs": self.input_names,
            "A": self.A.tolist(),
            "H": {"indexing": "compact-upper",
                  "shape": [n, n * (n + 1) // 2],
                  "entries": entries},
            "N": [m.tolist() for m in self.N],
            "B": self.B.tolist(),
            "c": self.c.tolist(),
        }


def extract_operators(qsystem, param_values=None):
    """Assemble the numeric operator form of an emitted system.

    Requires quadratic-bilinear shape: no input derivatives, inputs at most
    linear per term. Parameters must be bound through ``param_values``.
    """
    sysm = qsystem.system
    z = list(sysm.states)
    zidx = {v: i for i, v in enumerate(z)}
    inputs = [u for u, _ in sysm.inputs]
    uidx = {u: i for i, u in enumerate(inputs)}
    n = len(z)
    r = len(inputs)
    A = np.zeros((n, n))
    H = np.zeros((n, n * (n + 1) // 2))
    N = [np.zeros((n, n)) for _ in range(r)]
    B = np.zeros((n, r))
    c = np.zeros(n)

    def value(coeff):
        if coeff.is_rational:
            return float(coeff.as_fraction())
        if param_values is None:
            raise UnsupportedNode("parameters block numeric operator assembly; "
                                  "pass param_values")
        return coeff.evaluate(param_values)

    def pair_col(i, j):
        if i > j:
            i, j = j, i
        return i * n - (i * (i - 1)) // 2 + (j - i)

    for row, v in enumerate(z):
        for m, coeff in sysm.rhs_poly(v).terms():
            zpart = []
            upart = []
            for w, e in m.items():
                if w in zidx:
                    zpart += [zidx[w]] * e
                elif w.kind is VarKind.INPUT:
                    if w.order > 0:
                        raise UnsupportedNode(
                            "input derivatives block the quadratic-bilinear "
                            "operator form")
                    upart += [uidx[w]] * e
                else:
                    raise UnsupportedNode(f"unexpected symbol {w.name} in "
                                          "emitted system")
            val = value(coeff)
            if len(upart) == 0:
                if len(zpart) == 0:
                    c[row] += val
                elif len(zpart) == 1:
                    A[row, zpart[0]] += val
                elif len(zpart) == 2:
                    H[row, pair_col(zpart[0], zpart[1])] += val
                else:
                    raise NotAQuadratization("cubic term in emitted system")
            elif len(upart) == 1:
                if len(zpart) == 0:
                    B[row, upart[0]] += val
                elif len(zpart) == 1:
                    N[upart[0]][row, zpart[0]] += val
                else:
                    raise NotAQuadratization("term of degree > 2 in emitted system")
            else:
                raise UnsupportedNode("input-quadratic term blocks the "
                                      "quadratic-bilinear operator form")
    return OperatorForm(state_names=[v.name for v in z],
                        input_names=[u.name for u in inputs],
                        A=A, H=H, N=N, B=B, c=c)
