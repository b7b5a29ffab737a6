"""Branch-and-bound polynomialization of elementary-function systems.

Each non-polynomial factor of a right-hand side (an exponential with
polynomial argument, a non-integer power of a variable, a log/sin/cos or a
reciprocal) is a substitution candidate. Introducing a variable for one
factor closes its chain-rule derivative into the system, which may expose
further factors; the search explores different substitution sequences and
keeps the shortest, rather than committing to a fixed per-term strategy.
Powers of exponentials merge exactly, so a single ``w = exp(-x)`` covers
``exp(-2*x)`` as ``w**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded, UnsupportedNode
from .expressions import Expression, Pow, Var, poly_to_expression, render_expression
from .monomials import Monomial
from .normalform import (Atom, GenPoly, GTerm, genpoly_lie, normalize,
                         poly_substitute_gen)
from .poly import Poly
from .systems import OdeSystem
from .variables import Variable, VarKind


@dataclass(frozen=True)
class Unit:
    """A substitutable non-polynomial factor."""

    kind: str                 # exp | rpow | invvar | atom
    poly: Poly = None         # exp: the exponential argument
    var: Variable = None      # rpow/invvar: base variable
    alpha: Fraction = None    # rpow: full exponent
    atom: Atom = None

    def gterm(self):
        if self.kind == "exp":
            return GTerm(exparg=self.poly)
        if self.kind == "rpow":
            fl = math.floor(self.alpha)
            rem = self.alpha - fl
            mono = Monomial.of(self.var, fl) if fl else Monomial.unit()
            fexps = ((self.var, rem),) if rem else ()
            return GTerm(mono, fexps)
        if self.kind == "invvar":
            return GTerm(Monomial.of(self.var, -1))
        return GTerm(atoms=((self.atom, 1),))

    def genpoly(self):
        return GenPoly.of_term(self.gterm())

    def to_expression(self):
        if self.kind == "exp":
            from .expressions import Func
            return Func("exp", poly_to_expression(self.poly))
        if self.kind == "rpow":
            return Pow(Var(self.var), self.alpha)
        if self.kind == "invvar":
            return Pow(Var(self.var), Fraction(-1))
        return self.atom.to_expression()

    def size(self):
        return _expr_size(self.to_expression())

    def sort_key(self):
        rank = {"exp": 0, "rpow": 1, "invvar": 2, "atom": 3}[self.kind]
        if self.kind == "exp":
            return (rank, _poly_abs_key(self.poly))
        if self.kind == "rpow":
            return (rank, self.var.sort_key, self.alpha)
        if self.kind == "invvar":
            return (rank, self.var.sort_key, Fraction(-1))
        return (rank, self.atom.struct_key())

    def variables(self):
        if self.kind == "exp":
            return self.poly.variables()
        if self.kind in ("rpow", "invvar"):
            return [self.var]
        arg = self.atom.arg
        if isinstance(arg, Poly):
            return arg.variables()
        out = {}
        for t, _ in arg.terms():
            for v in t.mono.variables():
                out[v] = True
            for v, _ in t.fexps:
                out[v] = True
        return list(out)


def _expr_size(e):
    from .expressions import Add, Const, Func, Mul, Pow as PowNode, Var as VarNode
    if isinstance(e, (Const, VarNode)):
        return 1
    if isinstance(e, (Add, Mul)):
        return 1 + sum(_expr_size(a) for a in e.args)
    if isinstance(e, PowNode):
        return 1 + _expr_size(e.base)
    if isinstance(e, Func):
        return 1 + _expr_size(e.arg)
    return 1


def _poly_abs_key(p):
    out = []
    for m, c in p.terms():
        ckey = tuple(sorted((pm.struct_key(), (abs(q), q)) for pm, q in c.items()))
        out.append((m.struct_key(), ckey))
    return tuple(sorted(out))


@dataclass
class Substitution:
    variable: Variable
    defining_expression: Expression
    derivative_rhs: Expression
    unit: Unit = None

    def __repr__(self):
        return (f"{self.variable.name} = "
                f"{render_expression(self.defining_expression)}")


# ---------------------------------------------------------------------------
# Unit detection and rewriting


def units_of(gp, laurent):
    """Distinct non-polynomial factors of a normal form, in stable order."""
    found = {}
    for t, _ in gp.sorted_terms():
        if not t.exparg.is_zero:
            u = Unit("exp", poly=t.exparg)
            found.setdefault(u.sort_key(), u)
        for v, _f in t.fexps:
            u = Unit("rpow", var=v, alpha=t.full_exponent(v))
            found.setdefault(u.sort_key(), u)
        for a, _k in t.atoms:
            u = Unit("atom", atom=a)
            found.setdefault(u.sort_key(), u)
        if not laurent:
            for v, e in t.mono.items():
                if e < 0 and v.kind is not VarKind.PARAMETER:
                    u = Unit("invvar", var=v)
                    found.setdefault(u.sort_key(), u)
    return [found[k] for k in sorted(found)]


def _system_units(eqs, laurent):
    found = {}
    for _v, gp in eqs:
        for u in units_of(gp, laurent):
            found.setdefault(u.sort_key(), u)
    return [found[k] for k in sorted(found)]


def rewrite(gp, subs, laurent):
    """Express substituted factors through their variables wherever an exact
    integer combination exists; anything unmatched is left in place."""
    exp_subs = [(w, u.poly) for w, u in subs if u.kind == "exp"]
    rpow_subs = [(w, u.var, u.alpha) for w, u in subs if u.kind == "rpow"]
    atom_subs = {u.atom: w for w, u in subs if u.kind == "atom"}
    inv_vars = {u.var: w for w, u in subs if u.kind == "invvar"}

    out = GenPoly.zero()
    for t, q in gp.terms():
        factor = GenPoly.constant(q)
        # exponential part
        exparg = t.exparg
        if not exparg.is_zero and exp_subs:
            combo = _exp_combo(exparg, [p for _, p in exp_subs], laurent)
            if combo is not None:
                for (w, _), k in zip(exp_subs, combo):
                    if k:
                        factor = factor * GenPoly.of_var(w, k)
                exparg = Poly.zero()
        # fractional powers
        mono_exps = {v: Fraction(e) for v, e in t.mono.items()}
        for v, _f in t.fexps:
            mono_exps[v] = t.full_exponent(v)
        new_fexps = []
        for v in list(mono_exps):
            e = mono_exps[v]
            if e.denominator == 1:
                continue
            matched = False
            for w, base, alpha in rpow_subs:
                if base != v:
                    continue
                k = _frac_multiple(e, alpha)
                if k is not None:
                    factor = factor * GenPoly.of_var(w, k)
                    mono_exps[v] = e - k * alpha
                    matched = True
                    break
            if not matched:
                fl = math.floor(e)
                new_fexps.append((v, e - fl))
                mono_exps[v] = Fraction(fl)
        # atoms
        atoms = []
        for a, k in t.atoms:
            w = atom_subs.get(a)
            if w is not None:
                factor = factor * GenPoly.of_var(w, k)
            else:
                atoms.append((a, k))
        # negative integer exponents via reciprocal substitutions
        if not laurent and inv_vars:
            for v in list(mono_exps):
                e = mono_exps[v]
                if e < 0 and e.denominator == 1 and v in inv_vars:
                    factor = factor * GenPoly.of_var(inv_vars[v], int(-e))
                    mono_exps[v] = Fraction(0)
        mono = Monomial({v: int(e) for v, e in mono_exps.items()
                         if e.denominator == 1 and e})
        base = GTerm(mono, new_fexps, atoms, exparg)
        out = out + factor * GenPoly.of_term(base)
    return out


def _frac_multiple(e, alpha, limit=64):
    """Smallest k >= 1 with e - k*alpha integral, or None."""
    for k in range(1, limit + 1):
        r = e - k * alpha
        if r.denominator == 1:
            return k
    return None


def _exp_combo(target, args, laurent):
    """Integer coefficients k with sum(k_i * args_i) == target, or None."""
    # exact single match first: keeps rewrites faithful to the substitution
    for i, p in enumerate(args):
        if p == target:
            combo = [0] * len(args)
            combo[i] = 1
            return combo
    coords = {}
    vectors = []
    for p in args + [target]:
        vec = {}
        for m, c in p.terms():
            for pm, q in c.items():
                key = (m, pm)
                coords[key] = True
                vec[key] = vec.get(key, Fraction(0)) + q
        vectors.append(vec)
    keys = sorted(coords, key=lambda k: (k[0].struct_key(), k[1].struct_key()))
    n = len(args)
    rows = [[vectors[j].get(k, Fraction(0)) for j in range(n)]
            + [vectors[n].get(k, Fraction(0))] for k in keys]
    pivots = {}
    rank = 0
    for j in range(n):
        sel = next((i for i in range(rank, len(rows)) if rows[i][j]), None)
        if sel is None:
            continue
        rows[rank], rows[sel] = rows[sel], rows[rank]
        inv = Fraction(1) / rows[rank][j]
        rows[rank] = [x * inv for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][j]:
                f = rows[i][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        pivots[j] = rank
        rank += 1
    free = [j for j in range(n) if j not in pivots]
    choices = [0, 1, -1, 2, -2, 3, -3]
    import itertools as _it
    for assign in _it.product(choices, repeat=len(free)):
        combo = [Fraction(0)] * n
        for j, val in zip(free, assign):
            combo[j] = Fraction(val)
        ok = True
        for j, i in pivots.items():
            val = rows[i][n] - sum(rows[i][f] * combo[f] for f in free)
            if val.denominator != 1:
                ok = False
                break
            combo[j] = val
        if not ok:
            continue
        if not laurent and any(k < 0 for k in combo):
            continue
        # verify exactly
        residual = dict(vectors[n])
        for j, k in enumerate(combo):
            if k:
                for key, q in vectors[j].items():
                    residual[key] = residual.get(key, Fraction(0)) - k * q
        if not any(residual.values()):
            return [int(k) for k in combo]
    return None


# ---------------------------------------------------------------------------
# Public operations


def detect_nonpolynomial_nodes(system):
    """Maximal non-polynomial subtrees of the right-hand sides, deduplicated
    structurally; empty iff the system already converts to polynomials."""
    eqs = _normalized_equations(system)
    units = _system_units(eqs, system.laurent)
    return [u.to_expression() for u in units]


def _normalized_equations(system):
    eqs = []
    for v in system.states:
        rhs = system.rhs(v)
        gp = GenPoly.of_poly(rhs) if isinstance(rhs, Poly) else normalize(rhs)
        eqs.append((v, gp))
    return eqs


class _PolyState:
    """One node of the substitution search."""

    def __init__(self, eqs, subs):
        self.eqs = eqs      # tuple[(Variable, GenPoly)]
        self.subs = subs    # tuple[(Variable, Unit)]


def polynomialize(system, budget=None):
    """Rewrite the system with polynomial right-hand sides.

    Returns ``(polynomial_system, substitutions)`` where the number of
    substitutions is minimal among the sequences the branch-and-bound
    explores (no global optimality guarantee). Raises BudgetExceeded when
    no sequence within ``budget`` new variables exists.
    """
    eqs0 = tuple(_normalized_equations(system))
    if not _system_units(eqs0, system.laurent):
        poly_system = system.map_rhs(
            lambda r: r if isinstance(r, Poly)
            else normalize(r).to_poly(laurent=system.laurent))
        return poly_system, []

    searcher = _Searcher(system, budget)
    greedy = searcher.greedy(eqs0)
    if greedy is not None:
        searcher.best = greedy
        searcher.cut = len(greedy.subs)
    searcher.explore(_PolyState(eqs0, ()))
    if searcher.best is None:
        raise BudgetExceeded(
            f"no polynomialization with at most {budget} new variables found")
    if budget is not None and len(searcher.best.subs) > budget:
        raise BudgetExceeded(
            f"best polynomialization needs {len(searcher.best.subs)} variables, "
            f"budget is {budget}")
    return searcher.finish(searcher.best)


def greedy_order(system):
    """Size of the per-factor greedy polynomialization (baseline)."""
    eqs0 = tuple(_normalized_equations(system))
    searcher = _Searcher(system, None)
    result = searcher.greedy(eqs0)
    return len(result.subs) if result is not None else math.inf


class _Searcher:
    def __init__(self, system, budget):
        self.system = system
        self.laurent = system.laurent
        self.budget = budget
        self.best = None
        self.cut = math.inf if budget is None else budget + 1
        self.memo = set()
        self.taken_names = {v.name for v in system.states}
        self.taken_names |= {u.name for u, _ in system.inputs}
        self.taken_names |= {p.name for p in system.parameters}
        self.next_index = max((v.index for v in system.states), default=-1) + 1

    # -- variable plumbing

    def _fresh_var(self, existing):
        i = 0
        taken = self.taken_names | {w.name for w, _ in existing}
        while True:
            name = f"w{i}"
            if name not in taken:
                return Variable(name, VarKind.INTRODUCED,
                                index=self.next_index + len(existing))
            i += 1

    def _rhs_lookup(self, eqs):
        table = {v: gp for v, gp in eqs}

        def rhs_of(v):
            return table.get(v)

        return rhs_of

    def _deriv_of(self, v):
        if not self.system.input_is_smooth(v):
            raise UnsupportedNode(
                f"derivative of non-differentiable input {v.name} required; "
                "tag it smooth or search input-free")
        return v.derivative()

    # -- node expansion

    def _apply(self, state, units):
        """Introduce substitutions for the given units and rewrite."""
        subs = list(state.subs)
        eqs = list(state.eqs)
        rhs_of = self._rhs_lookup(eqs)
        new_pairs = []
        for unit in units:
            for v in unit.variables():
                if v.kind is VarKind.INPUT and v.order > 0:
                    raise UnsupportedNode(
                        "substitutions may not depend on input derivatives")
            w = self._fresh_var(subs + new_pairs)
            new_pairs.append((w, unit))
            dynamics = genpoly_lie(unit.genpoly(), rhs_of, self._deriv_of)
            eqs.append((w, dynamics))
        subs_all = subs + new_pairs
        rewritten = tuple((v, rewrite(gp, subs_all, self.laurent))
                          for v, gp in eqs)
        return _PolyState(rewritten, tuple(subs_all))

    def _actions(self, state):
        """Candidate substitution steps: each unit itself, smaller units of
        its derivative; sin and cos come as a pair."""
        units = _system_units(state.eqs, self.laurent)
        rhs_of = self._rhs_lookup(state.eqs)
        introduced = {u.sort_key() for _, u in state.subs}
        candidates = {}
        for u in units:
            for cand in [u] + self._derivative_units(u, rhs_of, u.size()):
                if cand.sort_key() in introduced:
                    continue
                candidates.setdefault(cand.sort_key(), cand)
        actions = []
        seen = set()
        for key in sorted(candidates):
            cand = candidates[key]
            group = self._pair_group(cand)
            gkey = tuple(sorted(u.sort_key() for u in group))
            if gkey not in seen:
                seen.add(gkey)
                actions.append(group)
        return actions

    def _derivative_units(self, unit, rhs_of, limit):
        try:
            d = genpoly_lie(unit.genpoly(), rhs_of, self._deriv_of)
        except UnsupportedNode:
            return []
        return [u for u in units_of(d, self.laurent) if u.size() < limit]

    def _pair_group(self, unit):
        if unit.kind == "atom" and unit.atom.kind in ("sin", "cos"):
            other = Atom("cos" if unit.atom.kind == "sin" else "sin",
                         unit.atom.arg)
            return [unit, Unit("atom", atom=other)]
        return [unit]

    # -- search

    def explore(self, state):
        units = _system_units(state.eqs, self.laurent)
        if not units:
            if len(state.subs) < self.cut:
                self.best = state
                self.cut = len(state.subs)
            return
        if len(state.subs) + 1 >= self.cut:
            return
        for group in self._actions(state):
            if len(state.subs) + len(group) >= self.cut:
                continue
            key = frozenset(u.sort_key() for _, u in state.subs) | \
                frozenset(u.sort_key() for u in group)
            if key in self.memo:
                continue
            self.memo.add(key)
            try:
                child = self._apply(state, group)
            except UnsupportedNode:
                continue
            self.explore(child)

    def greedy(self, eqs0):
        """Introduce a variable per distinct factor until polynomial."""
        state = _PolyState(eqs0, ())
        for _ in range(64):
            units = _system_units(state.eqs, self.laurent)
            if not units:
                return state
            fresh = []
            introduced = {u.sort_key() for _, u in state.subs}
            for u in units:
                if u.sort_key() not in introduced:
                    for g in self._pair_group(u):
                        if g.sort_key() not in introduced and \
                                all(g.sort_key() != f.sort_key() for f in fresh):
                            fresh.append(g)
            if not fresh:
                return None
            try:
                state = self._apply(state, fresh)
            except UnsupportedNode:
                return None
        return None

    # -- result assembly

    def finish(self, state):
        equations = []
        for v, gp in state.eqs:
            equations.append((v, gp.to_poly(laurent=self.laurent)))
        poly_system = OdeSystem(equations, inputs=self.system.inputs,
                                parameters=self.system.parameters,
                                laurent=self.laurent)
        substitutions = []
        rhs_final = {v: p for v, p in equations}
        for w, unit in state.subs:
            substitutions.append(Substitution(
                variable=w,
                defining_expression=unit.to_expression(),
                derivative_rhs=poly_to_expression(rhs_final[w]),
                unit=unit))
        return poly_system, substitutions


def verify_polynomialization(original, poly_system, substitutions):
    """Exact back-substitution check of a polynomialization result."""
    defs = {s.variable: s.unit.genpoly() for s in substitutions}
    eqs0 = dict(_normalized_equations(original))
    rhs_of = lambda v: eqs0.get(v)  # noqa: E731
    searcher = _Searcher(original, None)
    for v in original.states:
        got = poly_substitute_gen(poly_system.rhs_poly(v), defs)
        if got != eqs0[v]:
            return False
    for s in substitutions:
        expected = genpoly_lie(defs[s.variable], rhs_of, searcher._deriv_of)
        got = poly_substitute_gen(poly_system.rhs_poly(s.variable), defs)
        if got != expected:
            return False
    return True
