"""Dimension-agnostic quadratization of linearly coupled ODE families.

A family is given by block polynomial vectors: one placeholder-free part
and one coefficient vector per coupling placeholder, each in the block
variables. The search runs on the four-node instance whose coupling
matrices have the fixed sparsity pattern (diagonal plus entries (1,2),
(1,4), (2,3) with symbolic parameters); a quadratization of that instance
that is closed under the node orbits transfers to every dimension and every
choice of coupling matrices. Extensions are therefore restricted to
templates: an uncoupled template instantiates at all four nodes at once, a
coupled template (linear in the neighbor block) at the three coupled pairs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .coeffs import Coeff
from .errors import (DimensionMismatch, NotAffineInCoupling,
                     NotFoundWithinBound, SearchTimeout)
from .monomials import Monomial, sorted_monomials
from .poly import Poly
from .quadratize import (AUTONOMOUS, WITH_INPUTS, SearchMode, _Context,
                         is_quadratization)
from .systems import OdeSystem
from .variables import Variable, VarKind

_COUPLED_PAIRS = ((1, 2), (1, 4), (2, 3))

_DSTAR_ROWS = {1: ((1, "a"), (2, "b"), (4, "c")),
               2: ((2, "d"), (3, "e")),
               3: ((3, "f"),),
               4: ((4, "g"),)}


@dataclass
class CoupledFamily:
    """Block vectors defining a family ``x_i' = p0(x_i) + sum_j pj(x_i) *
    (D_j x_{*,j})_i`` over any dimension and coupling matrices."""

    block_vars: tuple            # per-node block variables
    placeholders: tuple          # (coupling Variable, target block Variable)
    p0: dict                     # block var -> Poly
    p_coupling: dict             # coupling var -> {block var -> Poly}
    inputs: tuple = ()
    parameters: tuple = ()
    laurent: bool = False

    @property
    def block_dim(self):
        return len(self.block_vars)

    @property
    def degree(self):
        """Max total degree of the block vectors in the block variables
        (positive parts for Laurent families)."""
        best = 0
        for p in list(self.p0.values()) + [q for ps in self.p_coupling.values()
                                           for q in ps.values()]:
            for m in p.monomials():
                best = max(best, sum(max(e, 0) for v, e in m.items()
                                     if v in self.block_vars))
        return best

    def tilde_var(self, v):
        return Variable(v.name + "~", VarKind.COUPLING, index=v.index)

    def reassemble(self):
        """Placeholder form of the family as an OdeSystem."""
        eqs = []
        for v in self.block_vars:
            rhs = self.p0[v]
            for c, _target in self.placeholders:
                rhs = rhs + self.p_coupling[c][v] * Poly.of_var(c)
            eqs.append((v, rhs))
        return OdeSystem(eqs, inputs=self.inputs, parameters=self.parameters,
                         couplings=self.placeholders, laurent=self.laurent)


def extract_family(system):
    """Split placeholder-form right-hand sides into block vectors.

    Every placeholder must appear affinely (degree one, never multiplied by
    another placeholder); raises NotAffineInCoupling otherwise.
    """
    if not system.couplings:
        raise NotAffineInCoupling("the system declares no coupling placeholders")
    placeholders = tuple(system.couplings)
    cvars = [c for c, _ in placeholders]
    p0 = {}
    p_coupling = {c: {} for c in cvars}
    for v in system.states:
        p0[v] = Poly.zero()
        for c in cvars:
            p_coupling[c][v] = Poly.zero()
        for m, coeff in system.rhs_poly(v).terms():
            content = [(w, e) for w, e in m.items() if w.kind is VarKind.COUPLING]
            if not content:
                p0[v] = p0[v] + Poly({m: coeff})
            elif len(content) == 1 and content[0][1] == 1:
                c = content[0][0]
                p_coupling[c][v] = p_coupling[c][v] + \
                    Poly({m / Monomial.of(c): coeff})
            else:
                raise NotAffineInCoupling(
                    f"term {m} of {v.name}' is not affine in the coupling "
                    "placeholders")
    return CoupledFamily(block_vars=tuple(system.states),
                         placeholders=placeholders, p0=p0,
                         p_coupling=p_coupling, inputs=system.inputs,
                         parameters=system.parameters, laurent=system.laurent)


@dataclass
class AgnosticQuadratization:
    """Templates quadratizing every member of the family: ``w1`` in the
    block variables, ``w2`` additionally linear in the neighbor (tilde)
    block. ``certificate`` is the verified four-node instance."""

    family: CoupledFamily
    w1: list                     # uncoupled template monomials
    w2: list                     # coupled template monomials, tilde-degree 1
    certificate: object          # (OdeSystem, concrete monomials, SearchMode)
    nodes_visited: int = 0
    wall_time: float = 0.0

    def total_added(self, n, coupled_pairs):
        return sum(1 if _is_global(m, self.family) else n for m in self.w1) \
            + coupled_pairs * len(self.w2)

    def render_text(self):
        lines = ["The family is quadratized, for every dimension and choice "
                 "of coupling matrices, by:"]
        lines.append("* at every node i, the variables")
        if self.w1:
            lines += [f"    {m.render()}" for m in self.w1]
        else:
            lines.append("    (none)")
        lines.append("* for every ordered pair (i, j) with a nonzero coupling "
                     "entry, the variables (~ marks node j)")
        if self.w2:
            lines += [f"    {m.render()}" for m in self.w2]
        else:
            lines.append("    (none)")
        return "\n".join(lines)


def _is_global(m, family):
    return all(v not in family.block_vars for v in m.variables())


# ---------------------------------------------------------------------------
# Family instantiation


class _NodeSpace:
    """Concrete variables for an n-node instance of a family."""

    def __init__(self, family, n):
        self.family = family
        self.n = n
        self.var = {}
        self.node_of = {}
        idx = 0
        for i in range(1, n + 1):
            for s in family.block_vars:
                v = Variable(f"{s.name}_{i}", VarKind.STATE, index=idx)
                self.var[(i, s)] = v
                self.node_of[v] = (i, s)
                idx += 1

    def rename(self, poly, node):
        mapping = {s: Poly.of_var(self.var[(node, s)])
                   for s in self.family.block_vars}
        return poly.substitute(mapping)

    def monomial(self, template, node, neighbor=None):
        exps = {}
        for v, e in template.items():
            if v in self.family.block_vars:
                exps[self.var[(node, v)]] = e
            elif v.kind is VarKind.COUPLING:
                base = next(s for s in self.family.block_vars
                            if self.family.tilde_var(s) == v)
                exps[self.var[(neighbor, base)]] = e
            else:
                exps[v] = e
        return Monomial(exps)


def build_instance(family, n, entries):
    """n-node system with coupling weights ``entries(cvar, i, j) -> Coeff``
    (1-based node indices; zero/None entries are skipped)."""
    space = _NodeSpace(family, n)
    eqs = []
    for i in range(1, n + 1):
        for s in family.block_vars:
            rhs = space.rename(family.p0[s], i)
            for c, target in family.placeholders:
                coupled = Poly.zero()
                for j in range(1, n + 1):
                    w = entries(c, i, j)
                    if w is None or (isinstance(w, Coeff) and w.is_zero):
                        continue
                    coupled = coupled + Poly.of_var(space.var[(j, target)]).scale(w)
                if not coupled.is_zero:
                    rhs = rhs + space.rename(family.p_coupling[c][s], i) * coupled
            eqs.append((space.var[(i, s)], rhs))
    system = OdeSystem(eqs, inputs=family.inputs, parameters=family.parameters,
                       laurent=family.laurent)
    return system, space


def instantiate_F4(family):
    """Four-node instance with the fixed-pattern symbolic coupling matrices."""
    taken = {v.name for v in family.block_vars}
    taken |= {u.name for u, _ in family.inputs}
    taken |= {p.name for p in family.parameters}
    dstar_params = {}
    new_params = []
    for k, (c, _t) in enumerate(family.placeholders):
        for letter in "abcdefg":
            name = letter if len(family.placeholders) == 1 else f"{letter}{k + 1}"
            while name in taken:
                name += "_"
            taken.add(name)
            p = Variable(name, VarKind.PARAMETER, index=1000 + 7 * k + "abcdefg".index(letter))
            dstar_params[(c, letter)] = p
            new_params.append(p)

    def entries(cvar, i, j):
        for jj, letter in _DSTAR_ROWS[i]:
            if jj == j:
                return Coeff.of_param(dstar_params[(cvar, letter)])
        return None

    system, space = build_instance(family, 4, entries)
    system = OdeSystem(system.equations(), inputs=family.inputs,
                       parameters=tuple(family.parameters) + tuple(new_params),
                       laurent=family.laurent)
    return system, space


def specialize(aq, n, matrices):
    """Concrete system and variable set for an n-node member.

    ``matrices`` maps each placeholder (Variable or name) to an n-by-n
    matrix of rational/Coeff entries. Coupled templates are placed at every
    ordered pair (i, j), i != j, with a nonzero entry in some matrix.
    """
    family = aq.family
    lookup = {}
    for key, mat in matrices.items():
        name = key.name if isinstance(key, Variable) else key
        lookup[name] = mat
    mats = {}
    for c, _t in family.placeholders:
        if c.name not in lookup:
            raise DimensionMismatch(f"no matrix given for placeholder {c.name}")
        mat = lookup[c.name]
        if len(mat) != n or any(len(row) != n for row in mat):
            raise DimensionMismatch(
                f"matrix for {c.name} must be {n}x{n}")
        mats[c] = mat

    def to_coeff(x):
        if isinstance(x, Coeff):
            return x
        return Coeff.rational(Fraction(x))

    def entries(cvar, i, j):
        val = to_coeff(mats[cvar][i - 1][j - 1])
        return None if val.is_zero else val

    system, space = build_instance(family, n, entries)
    monomials = set()
    for m in aq.w1:
        if _is_global(m, family):
            monomials.add(m)
        else:
            for i in range(1, n + 1):
                monomials.add(space.monomial(m, i))
    coupled_pairs = sorted({(i, j) for c in mats
                            for i in range(1, n + 1) for j in range(1, n + 1)
                            if i != j and not to_coeff(mats[c][i - 1][j - 1]).is_zero})
    for m in aq.w2:
        for i, j in coupled_pairs:
            monomials.add(space.monomial(m, i, neighbor=j))
    return system, sorted_monomials(monomials)


# ---------------------------------------------------------------------------
# Template-restricted search on the four-node instance


def _template_of(family, space, d):
    """Classify a concrete divisor as a template, or None if it violates
    the orbit restriction (three or more nodes, an uncoupled pair, or a
    neighbor degree other than one)."""
    node_deg = {}
    exps = {}
    for v, e in d.items():
        hit = space.node_of.get(v)
        if hit is None:
            exps[v] = e  # input or other global symbol
            continue
        i, s = hit
        node_deg[i] = node_deg.get(i, 0) + abs(e)
        exps[(i, s)] = e
    nodes = sorted(i for i in node_deg if node_deg[i])
    if len(nodes) == 0:
        mono = Monomial({v: e for v, e in exps.items() if not isinstance(v, tuple)})
        return ("u", mono)
    if len(nodes) == 1:
        i0 = nodes[0]
        out = {}
        for key, e in exps.items():
            out[key[1] if isinstance(key, tuple) else key] = e
        return ("u", Monomial(out))
    if len(nodes) == 2:
        i0, i1 = nodes
        if (i0, i1) in _COUPLED_PAIRS:
            main, tilde = i0, i1
        elif (i1, i0) in _COUPLED_PAIRS:
            main, tilde = i1, i0
        else:
            return None
        tilde_deg = sum(e for key, e in exps.items()
                        if isinstance(key, tuple) and key[0] == tilde)
        if tilde_deg != 1:
            return None
        out = {}
        for key, e in exps.items():
            if not isinstance(key, tuple):
                out[key] = e
            elif key[0] == main:
                out[key[1]] = e
            else:
                out[family.tilde_var(key[1])] = e
        return ("c", Monomial(out))
    return None


def _instantiate(family, space, kind, template):
    if kind == "u":
        if _is_global(template, family):
            return [space.monomial(template, 1)]
        out = []
        for i in range(1, 5):
            out.append(space.monomial(template, i))
        return out
    return [space.monomial(template, i, neighbor=j) for i, j in _COUPLED_PAIRS]


def agnostic_bound(family):
    """Initial concrete-variable bound for the four-node search."""
    b = family.block_dim
    d = family.degree
    base = math.comb(b + d, d)
    npl = len(family.placeholders)
    bound = (3 * npl + 4) * base
    f4, _ = instantiate_F4(family)
    for u, _smooth in family.inputs:
        du = max(f4.rhs_poly(v).degree_in(u) for v in f4.states)
        bound *= du + 1
    return bound


def search_agnostic(family, mode=None, progress=None):
    """Template-restricted search on the four-node instance.

    Returns an :class:`AgnosticQuadratization` whose certificate passed the
    concrete quadratization check. The concrete variable count on the
    four-node instance is minimized; as with any dimension-agnostic result,
    optimality for every member of the family is not claimed.
    """
    f4, space = instantiate_F4(family)
    if mode is None:
        kind = WITH_INPUTS if family.inputs else AUTONOMOUS
        if family.laurent:
            mode = SearchMode(kind=kind, laurent=True, max_order=40,
                              max_laurent_degree=6)
        else:
            mode = SearchMode(kind=kind)
    ctx = _Context(f4, mode)
    t0 = time.monotonic()
    deadline = t0 + mode.timeout if mode.timeout else None

    # the binomial bound certifies termination only for polynomial families
    cut = math.inf if mode.laurent else agnostic_bound(family) + 1
    if mode.max_order is not None:
        cut = min(cut, mode.max_order + 1)

    state = {"best": None, "cut": cut, "nodes": 0, "memo": set()}
    tpl_cache = {}
    inst_cache = {}

    def tkey(kind_tpl):
        kind, tpl = kind_tpl
        return (0 if kind == "u" else 1, tpl.struct_key())

    def template_for(d):
        t = tpl_cache.get(d, False)
        if t is False:
            t = _template_of(family, space, d)
            tpl_cache[d] = t
        return t

    def instantiation(kind, tpl):
        key = tkey((kind, tpl))
        out = inst_cache.get(key)
        if out is None:
            out = _instantiate(family, space, kind, tpl)
            inst_cache[key] = out
        return out

    def explore(S, concrete, alphabet, undec):
        state["nodes"] += 1
        if deadline is not None and time.monotonic() > deadline:
            raise _AgnosticDeadline()
        if progress is not None and state["nodes"] % 256 == 0:
            progress(state["nodes"],
                     len(state["best"][1]) if state["best"] else None)
        if not undec:
            if len(concrete) < state["cut"]:
                state["best"] = (S, tuple(concrete))
                state["cut"] = len(concrete)
            return
        if len(concrete) + 1 >= state["cut"]:
            return
        cand_map = {}
        for m in undec:
            tpls = {}
            for dvs in ctx.candidates_for(m, alphabet):
                t = template_for(dvs)
                if t is not None:
                    tpls.setdefault(tkey(t), t)
            if not tpls:
                return
            cand_map[m] = [tpls[k] for k in sorted(tpls)]
        # disjoint-candidate groups each force a distinct template; orbits of
        # distinct templates never overlap, so their sizes add up
        chosen = []
        lb = 0
        for m in cand_map:
            keys = {tkey(t) for t in cand_map[m]}
            if all(keys.isdisjoint(other) for other in chosen):
                lb += min(len(instantiation(k, t)) for k, t in cand_map[m])
                chosen.append(keys)
        if len(concrete) + max(lb, 1) >= state["cut"]:
            return
        target = min(cand_map, key=lambda m: (len(cand_map[m]), m.struct_key()))
        for kind, tpl in cand_map[target]:
            key = frozenset({tkey(t) for t in S} | {tkey((kind, tpl))})
            if key in state["memo"]:
                continue
            state["memo"].add(key)
            fresh = [mm for mm in instantiation(kind, tpl)
                     if mm not in alphabet]
            if not fresh or len(concrete) + len(fresh) >= state["cut"]:
                continue
            new_alphabet = alphabet | set(fresh)
            fresh_set = set(fresh)
            new_undec = {}
            for m in undec:
                if _repaired(ctx, m, fresh_set, new_alphabet):
                    continue
                new_undec[m] = True
            for mm in fresh:
                for m, _ in ctx.lie(mm).sorted_terms():
                    if m not in new_undec and not ctx.decomposable(m, new_alphabet):
                        new_undec[m] = True
            explore(S + ((kind, tpl),), concrete + fresh, new_alphabet,
                    new_undec)

    base_undec = ctx.initial_undecomposable(ctx.base_alphabet)
    timed_out = False
    try:
        explore((), [], ctx.base_alphabet, base_undec)
    except _AgnosticDeadline:
        timed_out = True
    wall = time.monotonic() - t0
    if state["best"] is None:
        if timed_out:
            raise SearchTimeout(f"no dimension-agnostic quadratization found "
                                f"within {mode.timeout}s")
        raise NotFoundWithinBound(
            "no dimension-agnostic quadratization found within the limits "
            f"(four-node variable count < {cut})")
    S, concrete = state["best"]
    w1 = sorted_monomials([tpl for kind, tpl in S if kind == "u"])
    w2 = sorted_monomials([tpl for kind, tpl in S if kind == "c"])
    assert is_quadratization(f4, list(concrete), mode)
    return AgnosticQuadratization(
        family=family, w1=w1, w2=w2,
        certificate=(f4, sorted_monomials(concrete), mode),
        nodes_visited=state["nodes"], wall_time=wall)


class _AgnosticDeadline(Exception):
    pass


def _repaired(ctx, m, fresh_set, new_alphabet):
    """Did any of the freshly added monomials make m decomposable?"""
    if ctx.top_degree(m) == 1:
        return (m / ctx.top_part(m)) in fresh_set
    for f in fresh_set:
        b = m / f
        if b.is_unit or b in new_alphabet:
            return True
    return False
