"""Symbolic verification of candidate liftings.

Everything here is exact: a candidate passes only if the defining
substitution identities hold coefficient-for-coefficient. The polynomial
candidate checker solves, for each generator's Lie derivative, an exact
rational linear system over the basis of at-most-quadratic alphabet
products.
"""

from __future__ import annotations

from fractions import Fraction

from .coeffs import Coeff
from .errors import UndefinedIntroducedVariable
from .monomials import Monomial, sorted_monomials
from .poly import Poly
from .systems import OdeSystem, lie_derivative
from .variables import Variable, VarKind


def verify_symbolic(original, lifted, definitions):
    """Exact check that a lifted system reproduces the original.

    ``lifted`` is a QuadraticSystem or an OdeSystem whose extra states are
    the introduced variables; ``definitions`` maps each introduced variable
    to its defining polynomial in the original variables. True iff
    substituting the definitions into the lifted state equations yields the
    original right-hand sides exactly, and the chain-rule derivative of each
    definition along the original system equals the substituted right-hand
    side of the corresponding new variable.
    """
    lifted_system = getattr(lifted, "system", lifted)
    subs = dict(definitions)
    for v in lifted_system.states:
        if v not in original.states and v not in subs:
            raise UndefinedIntroducedVariable(f"no definition for {v.name}")
    for v in original.states:
        got = lifted_system.rhs_poly(v).substitute(subs)
        if got != original.rhs_poly(v):
            return False
    for w in lifted_system.states:
        if w in original.states:
            continue
        expected = lie_derivative(subs[w], original)
        got = lifted_system.rhs_poly(w).substitute(subs)
        if got != expected:
            return False
    return True


def verify_polynomial_candidate(system, candidates):
    """Decide whether polynomial ``candidates`` quadratize the system.

    Returns the emitted QuadraticSystem on success and None on failure. For
    each generator, the Lie derivative must be an exact rational combination
    of products of at most two alphabet elements; when the linear system is
    underdetermined, the solution supported on the canonically earliest
    basis elements is chosen (free coordinates are zero).
    """
    from .emit import QuadraticSystem, _fresh_names
    from .quadratize import _Context, default_mode

    mode = default_mode(system)
    ctx = _Context(system, mode)

    taken = {v.name for v in system.states}
    taken |= {u.name for u, _ in system.inputs}
    taken |= {p.name for p in system.parameters}
    names = _fresh_names(len(candidates), taken)
    next_index = max((v.index for v in system.states), default=-1) + 1
    wvars = [Variable(nm, VarKind.INTRODUCED, index=next_index + i)
             for i, nm in enumerate(names)]

    # alphabet symbols with their expansions in the original variables
    symbols = [(Monomial.unit(), Poly.constant(1))]
    for m in sorted_monomials(ctx.base_alphabet):
        symbols.append((m, Poly.of_monomial(m)))
    for w, p in zip(wvars, candidates):
        symbols.append((Monomial.of(w), p))

    basis = []
    seen = set()
    for i in range(len(symbols)):
        for j in range(i, len(symbols)):
            lifted = symbols[i][0] * symbols[j][0]
            if lifted in seen:
                continue
            seen.add(lifted)
            basis.append((lifted, symbols[i][1] * symbols[j][1]))
    basis.sort(key=lambda item: item[0].struct_key())

    targets = [(v, lie_derivative(Poly.of_var(v), system)) for v in system.states]
    targets += [(w, lie_derivative(p, system)) for w, p in zip(wvars, candidates)]

    # parameter monomials that scalar multipliers may carry
    sigmas = {Monomial.unit()}
    for _, t in targets:
        for _, c in t.terms():
            sigmas.update(c.param_monomials())
    sigmas = sorted(sigmas, key=Monomial.struct_key)

    columns = []
    for mono, expansion in basis:
        for sigma in sigmas:
            scaled = expansion if sigma.is_unit else \
                expansion.scale(Coeff({sigma: Fraction(1)}))
            columns.append(((mono, sigma), _flatten(scaled)))

    equations = []
    for v, target in targets:
        sol = _solve_minimal(columns, _flatten(target))
        if sol is None:
            return None
        rhs = Poly.zero()
        for ((mono, sigma), _), lam in zip(columns, sol):
            if lam:
                rhs = rhs + Poly.of_monomial(mono).scale(Coeff({sigma: lam}))
        equations.append((v, rhs))

    lifted_system = OdeSystem(equations, inputs=system.inputs,
                              parameters=system.parameters, laurent=False)
    qs = QuadraticSystem(system=lifted_system,
                         introduced=list(zip(wvars, candidates)))
    # defense in depth: the assembled system must pass the exact identity
    assert verify_symbolic(system, qs, dict(zip(wvars, candidates)))
    return qs


def _flatten(p):
    """Polynomial -> {(monomial, parameter monomial): Fraction}."""
    out = {}
    for m, c in p.terms():
        for pm, q in c.items():
            key = (m, pm)
            out[key] = out.get(key, Fraction(0)) + q
    return {k: v for k, v in out.items() if v}


def _solve_minimal(columns, target):
    """Least-support exact solution of sum(lam_j * col_j) = target.

    Gaussian elimination processing columns in their given (canonical)
    order; free variables stay zero. Returns the list of lambdas or None
    when no exact solution exists.
    """
    coord_list = []
    seen = set()
    for _, vec in columns:
        for k in vec:
            if k not in seen:
                seen.add(k)
                coord_list.append(k)
    for k in target:
        if k not in seen:
            seen.add(k)
            coord_list.append(k)
    coord_list.sort(key=lambda k: (k[0].struct_key(), k[1].struct_key()))
    index = {k: i for i, k in enumerate(coord_list)}
    nrows = len(coord_list)
    ncols = len(columns)
    rows = [[Fraction(0)] * (ncols + 1) for _ in range(nrows)]
    for j, (_, vec) in enumerate(columns):
        for k, q in vec.items():
            rows[index[k]][j] = q
    for k, q in target.items():
        rows[index[k]][ncols] = q

    pivot_of_col = {}
    pivot_row = 0
    for j in range(ncols):
        if pivot_row == nrows:
            break
        sel = None
        for i in range(pivot_row, nrows):
            if rows[i][j]:
                sel = i
                break
        if sel is None:
            continue
        rows[pivot_row], rows[sel] = rows[sel], rows[pivot_row]
        inv = Fraction(1) / rows[pivot_row][j]
        rows[pivot_row] = [x * inv for x in rows[pivot_row]]
        pr = rows[pivot_row]
        for i in range(nrows):
            if i != pivot_row and rows[i][j]:
                f = rows[i][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
        pivot_of_col[j] = pivot_row
        pivot_row += 1

    sol = [Fraction(0)] * ncols
    for j, i in pivot_of_col.items():
        sol[j] = rows[i][ncols]

    residual = dict(target)
    for j, (_, vec) in enumerate(columns):
        if sol[j]:
            for k, q in vec.items():
                residual[k] = residual.get(k, Fraction(0)) - sol[j] * q
    if any(residual.values()):
        return None
    return sol
