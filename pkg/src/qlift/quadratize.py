"""Branch-and-bound search for optimal monomial quadratizations.

The search state is a set S of candidate new monomials. A node is a leaf
when every generator (each state and each element of S) has a Lie derivative
whose monomials all factor into two alphabet elements. Otherwise the
undecomposable monomial with the fewest admissible divisors is selected and
one child per divisor is explored, depth-first, under a monotone shared
upper bound on the achievable order.

Pruning beyond the plain order cutoff:

* a sound lower bound: undecomposable monomials whose admissible divisor
  sets are pairwise disjoint each require a distinct new variable;
* memoization of visited variable sets across branches.

Non-autonomous systems treat input derivatives as alphabet symbols one
order above the highest derivative present in the input system; extensions
never involve that top order, matching the convention that inputs are
formally linear (second derivatives vanish). When the input system itself
contains first derivatives (a polynomialization can produce them) the top
order grows by one and the emitted system is no longer quadratic-bilinear.
"""

from __future__ import annotations

import itertools
import math
import queue
import threading
import time
from dataclasses import dataclass

from .errors import (NotFoundWithinBound, NotInputAffine,
                     NotPolynomialBilinear, SearchTimeout)
from .monomials import Monomial, sorted_monomials
from .poly import Poly
from .systems import lie_derivative
from .variables import VarKind

AUTONOMOUS = "autonomous"
WITH_INPUTS = "with-inputs"
INPUT_FREE = "input-free"

_DEFAULT_INPUT_FREE_DEPTH = 20


@dataclass(frozen=True)
class SearchMode:
    kind: str = AUTONOMOUS
    laurent: bool = False
    max_order: int | None = None
    max_laurent_degree: int | None = None
    timeout: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in (AUTONOMOUS, WITH_INPUTS, INPUT_FREE):
            raise ValueError(f"unknown search kind {self.kind!r}")
        if self.laurent and (self.max_order is None or self.max_laurent_degree is None):
            raise ValueError("Laurent mode requires max_order and max_laurent_degree; "
                             "termination is not guaranteed otherwise")


def default_mode(system, laurent=None, **kw):
    """Infer the search kind: inputs present means with-inputs, unless some
    input is non-smooth, which forces input-free."""
    laurent = system.laurent if laurent is None else laurent
    if not system.inputs:
        kind = AUTONOMOUS
    elif all(smooth for _, smooth in system.inputs):
        kind = WITH_INPUTS
    else:
        kind = INPUT_FREE
    if laurent:
        kw.setdefault("max_order", 20)
        kw.setdefault("max_laurent_degree", 6)
    return SearchMode(kind=kind, laurent=laurent, **kw)


@dataclass
class QuadratizationResult:
    new_variables: list          # [(Variable, Monomial)] in canonical order
    order: int
    quadratic_system: object     # emit.QuadraticSystem
    optimal: bool
    mode: SearchMode
    bound_used: float
    nodes_visited: int = 0
    wall_time: float = 0.0
    timed_out: bool = False

    def monomials(self):
        return [m for _, m in self.new_variables]


def _derivative_of(u, order):
    v = u
    for _ in range(order):
        v = v.derivative()
    return v


class _Context:
    """Per-search immutable data: alphabet skeleton and Lie cache."""

    def __init__(self, system, mode):
        if not system.is_polynomial:
            raise TypeError("quadratization requires polynomial right-hand sides; "
                            "run polynomialization first")
        if system.laurent and not mode.laurent:
            raise ValueError("system is Laurent but the search mode is not")
        if mode.kind == AUTONOMOUS and system.inputs:
            raise ValueError("autonomous search on a system with inputs")
        if mode.kind in (WITH_INPUTS, INPUT_FREE) and not system.inputs:
            raise ValueError(f"{mode.kind} search requires at least one input")
        self.system = system
        self.mode = mode
        self.diff_vars = list(system.states)
        self.top_order = system.max_input_order() + 1
        inputs = [u for u, _ in system.inputs]
        self.input_symbols = []
        self.top_symbols = []
        if mode.kind == WITH_INPUTS:
            for u in inputs:
                for k in range(self.top_order):
                    self.input_symbols.append(u if k == 0 else _derivative_of(u, k))
            self.top_symbols = [_derivative_of(u, self.top_order) for u in inputs]
        elif mode.kind == INPUT_FREE:
            self.input_symbols = list(inputs)
        self.top_set = set(self.top_symbols)
        base = [Monomial.of(v) for v in self.diff_vars]
        base += [Monomial.of(u) for u in self.input_symbols]
        base += [Monomial.of(t) for t in self.top_symbols]
        self.base_alphabet = set(base)
        self._lie = {}
        self._divisors = {}

    def lie(self, m):
        out = self._lie.get(m)
        if out is None:
            out = lie_derivative(Poly.of_monomial(m), self.system)
            self._lie[m] = out
        return out

    def top_degree(self, m):
        return sum(e for v, e in m.items() if v in self.top_set)

    def top_part(self, m):
        return next(Monomial.of(v) for v, e in m.items() if v in self.top_set)

    def decomposable(self, m, alphabet):
        td = self.top_degree(m)
        if td > 1:
            return False
        if td == 1:
            rest = m / self.top_part(m)
            return rest.is_unit or rest in alphabet
        if m.is_unit or m in alphabet:
            return True
        for a in alphabet:
            b = m / a
            if b.is_unit or b in alphabet:
                return True
        return False

    def candidate_ok(self, d, alphabet):
        return d not in alphabet and self._candidate_shape_ok(d)

    def _candidate_shape_ok(self, d):
        if d.is_unit or d in self.base_alphabet:
            return False
        for v, _ in d.items():
            if v in self.top_set:
                return False
            if self.mode.kind == INPUT_FREE and v.kind is VarKind.INPUT:
                return False
        if self.mode.laurent:
            if self.mode.max_laurent_degree is not None and \
                    d.max_abs_exponent() > self.mode.max_laurent_degree:
                return False
        else:
            if d.degree < 2:
                return False
        return True

    def _raw_candidates(self, m):
        """Mode-legal divisors of m, independent of the current alphabet."""
        out = self._divisors.get(m)
        if out is None:
            td = self.top_degree(m)
            if td > 1:
                out = []
            elif td == 1:
                d = m / self.top_part(m)
                out = [d] if self._candidate_shape_ok(d) else []
            else:
                out = sorted_monomials(d for d in m.divisors()
                                       if self._candidate_shape_ok(d))
                # mild Laurent exponents first; ordering is a heuristic only
                out.sort(key=Monomial.max_abs_exponent)
            self._divisors[m] = out
        return out

    def candidates_for(self, m, alphabet):
        return [d for d in self._raw_candidates(m) if d not in alphabet]

    def initial_undecomposable(self, alphabet, extra_generators=()):
        undec = {}
        for v in self.diff_vars:
            for m, _ in self.system.rhs_poly(v).sorted_terms():
                if m not in undec and not self.decomposable(m, alphabet):
                    undec[m] = True
        for g in extra_generators:
            for m, _ in self.lie(g).sorted_terms():
                if m not in undec and not self.decomposable(m, alphabet):
                    undec[m] = True
        return undec


# ---------------------------------------------------------------------------
# Public operations


def upper_bound(system, mode):
    """Initial order bound.

    Autonomous and with-inputs polynomial systems use the product of
    (per-variable degree + 1); input-free uses the monomial count of the
    bilinear construction when available and infinity otherwise; Laurent
    systems fall back to the count of right-hand-side monomials.
    """
    if mode.laurent:
        monos = set()
        for v in system.states:
            monos.update(system.rhs_poly(v).monomials())
        return len(monos)
    if mode.kind == INPUT_FREE:
        try:
            p0, _ = input_affine_parts(system)
            bilinear_construct(system)
        except (NotInputAffine, NotPolynomialBilinear):
            return math.inf
        d = max((p.degree() for p in p0.values()), default=0)
        n = len(system.states)
        return math.comb(n + d, d)
    bound = 1
    for v in _bound_variables(system, mode):
        d = max(system.rhs_poly(s).degree_in(v) for s in system.states)
        bound *= d + 1
    return bound


def _bound_variables(system, mode):
    out = list(system.states)
    if mode.kind == WITH_INPUTS:
        top = system.max_input_order()
        for u, _ in system.inputs:
            for k in range(top + 1):
                out.append(u if k == 0 else _derivative_of(u, k))
    return out


def _degree_capped_monomials(system, mode):
    """Non-unit monomials within per-variable degree caps with deg >= 2:
    the constructive fallback quadratization behind the product bound."""
    caps = []
    for v in _bound_variables(system, mode):
        d = max(system.rhs_poly(s).degree_in(v) for s in system.states)
        if d:
            caps.append((v, d))
    out = []
    for combo in itertools.product(*[range(d + 1) for _, d in caps]):
        if sum(combo) >= 2:
            out.append(Monomial({v: e for (v, _), e in zip(caps, combo)}))
    return sorted_monomials(out)


def is_quadratization(system, new_monomials, mode=None):
    """True iff every generator's Lie derivative is quadratic over the
    alphabet formed by the bare variables and ``new_monomials``."""
    mode = mode or default_mode(system)
    ctx = _Context(system, mode)
    S = list(new_monomials)
    alphabet = ctx.base_alphabet | set(S)
    return not ctx.initial_undecomposable(alphabet, extra_generators=S)


def generate_extensions(system, new_monomials, mode=None):
    """Candidate extensions of a non-quadratizing set, per the branching rule."""
    mode = mode or default_mode(system)
    ctx = _Context(system, mode)
    S = list(new_monomials)
    alphabet = ctx.base_alphabet | set(S)
    undec = ctx.initial_undecomposable(alphabet, extra_generators=S)
    if not undec:
        raise ValueError("the set is already a quadratization")
    cand_map = {m: ctx.candidates_for(m, alphabet) for m in sorted_monomials(undec)}
    target = min(cand_map, key=lambda m: (len(cand_map[m]), m.struct_key()))
    return [sorted_monomials(set(S) | {d}) for d in cand_map[target]]


def input_affine_parts(system):
    """Split ``rhs = p0 + sum_i p_i * u_i``; raises NotInputAffine."""
    p0 = {}
    p_in = {u: {} for u, _ in system.inputs}
    for v in system.states:
        p0[v] = Poly.zero()
        for u in p_in:
            p_in[u][v] = Poly.zero()
        for m, c in system.rhs_poly(v).terms():
            content = [(w, e) for w, e in m.items() if w.kind is VarKind.INPUT]
            if not content:
                p0[v] = p0[v] + Poly({m: c})
            elif len(content) == 1 and content[0][1] == 1 and content[0][0].order == 0:
                u = content[0][0]
                p_in[u][v] = p_in[u][v] + Poly({m / Monomial.of(u): c})
            else:
                raise NotInputAffine(
                    f"term {m} of {v.name}' is not affine in the inputs")
    return p0, p_in


def check_triangular_coupling(system):
    """Literal triangularity verdict for the input coupling: some ordering
    of the states makes every input-coefficient polynomial depend only on
    strictly earlier states. Sufficient for input-free termination; not an
    existence test."""
    _, p_in = input_affine_parts(system)
    remaining = list(system.states)
    placed = set()
    while remaining:
        progressed = False
        for v in list(remaining):
            deps = set()
            for u in p_in:
                deps.update(w for w in p_in[u][v].variables() if w.is_differential)
            if deps <= placed:
                placed.add(v)
                remaining.remove(v)
                progressed = True
        if not progressed:
            return False
    return True


def bilinear_construct(system):
    """Input-free quadratization for polynomial-bilinear systems: all
    monomials in the states of total degree between 1 and deg(p0)."""
    p0, p_in = input_affine_parts(system)
    for u, parts in p_in.items():
        for v, p in parts.items():
            if p.degree() > 1:
                raise NotPolynomialBilinear(
                    f"coefficient of {u.name} in {v.name}' has degree {p.degree()}")
    d = max((p.degree() for p in p0.values()), default=0)
    n = len(system.states)
    out = []
    for combo in itertools.product(*[range(d + 1)] * n):
        if 1 <= sum(combo) <= d:
            out.append(Monomial({v: e for v, e in zip(system.states, combo)}))
    return sorted_monomials(out)


# ---------------------------------------------------------------------------
# Search machinery


class _Deadline(Exception):
    pass


class _Shared:
    """Best-so-far bound and memo, shared across workers.

    ``cut`` is exclusive: only strictly smaller sets are recorded, except
    that an equal-order set that is canonically smaller replaces the best
    (keeps multi-worker results stable)."""

    def __init__(self, best, cut, lock_needed):
        self.best_set = tuple(best) if best is not None else None
        self.improved = False
        self.cut = cut
        self.nodes = 0
        self.truncated = False
        self.memo = set()
        self.lock = threading.Lock() if lock_needed else None

    def record(self, S):
        if self.lock:
            with self.lock:
                self._record(S)
        else:
            self._record(S)

    def _record(self, S):
        key = tuple(sorted_monomials(S))
        better = len(key) < self.cut
        tie = (self.best_set is not None and len(key) == len(self.best_set)
               and _set_key(key) < _set_key(self.best_set))
        if better or tie:
            self.best_set = key
            self.cut = min(self.cut, len(key))
            self.improved = True

    def seen(self, key):
        if self.lock:
            with self.lock:
                if key in self.memo:
                    return True
                self.memo.add(key)
                return False
        if key in self.memo:
            return True
        self.memo.add(key)
        return False


def _set_key(monos):
    return tuple(m.struct_key() for m in monos)


def search(system, mode=None, progress=None):
    """Search for a monomial quadratization, optimal in guaranteed modes.

    Returns a :class:`QuadratizationResult` with the emitted quadratic
    system attached. Raises NotFoundWithinBound when the limits exhaust the
    space without any result and SearchTimeout when the deadline passes
    before anything was found.
    """
    from .emit import emit_quadratic

    mode = mode or default_mode(system)
    ctx = _Context(system, mode)
    t0 = time.monotonic()
    deadline = t0 + mode.timeout if mode.timeout else None

    fallback = None
    if not mode.laurent:
        if mode.kind in (AUTONOMOUS, WITH_INPUTS):
            fallback = _degree_capped_monomials(system, mode)
        else:
            try:
                fallback = [m for m in bilinear_construct(system) if m.degree >= 2]
            except (NotInputAffine, NotPolynomialBilinear):
                fallback = None

    max_order = mode.max_order
    if max_order is None and mode.kind == INPUT_FREE:
        max_order = _DEFAULT_INPUT_FREE_DEPTH

    cut = len(fallback) if fallback is not None else math.inf
    if max_order is not None:
        cut = min(cut, max_order + 1)
    bound_used = upper_bound(system, mode)

    shared = _Shared(fallback, cut, lock_needed=mode.workers > 1)
    base_undec = ctx.initial_undecomposable(ctx.base_alphabet)
    timed_out = False
    try:
        _explore(ctx, shared, (), ctx.base_alphabet, base_undec,
                 max_order, deadline, progress, mode.workers)
    except _Deadline:
        timed_out = True

    wall = time.monotonic() - t0
    if shared.best_set is None:
        if timed_out:
            raise SearchTimeout(f"no quadratization found within {mode.timeout}s")
        raise NotFoundWithinBound(
            f"no quadratization found within the given limits (order < {cut})")

    best = list(shared.best_set)
    qsystem = emit_quadratic(system, best, mode, _checked=True)
    # max-order pruning only discards solutions above the limit, so a result
    # within the limit stays optimal even when pruning fired
    beyond_limit = max_order is not None and len(best) > max_order
    optimal = ((not mode.laurent) and (not timed_out)
               and not (shared.truncated and beyond_limit))
    return QuadratizationResult(
        new_variables=qsystem.introduced, order=len(best),
        quadratic_system=qsystem, optimal=optimal, mode=mode,
        bound_used=bound_used, nodes_visited=shared.nodes, wall_time=wall,
        timed_out=timed_out)


def _explore(ctx, shared, S, alphabet, undec, max_order, deadline, progress,
             workers=1):
    shared.nodes += 1
    if deadline is not None and time.monotonic() > deadline:
        raise _Deadline()
    if progress is not None and shared.nodes % 512 == 0:
        best = len(shared.best_set) if shared.best_set is not None else None
        progress(shared.nodes, best)
    if not undec:
        shared.record(S)
        return
    if len(S) + 1 >= shared.cut:
        return
    cand_map = {}
    for m in undec:
        cands = ctx.candidates_for(m, alphabet)
        if not cands:
            return  # monomial can never be repaired: dead branch
        cand_map[m] = cands
    lb = _lower_bound(cand_map)
    if len(S) + lb >= shared.cut:
        return
    if max_order is not None and len(S) + lb > max_order:
        shared.truncated = True
        return
    target = min(cand_map, key=lambda m: (len(cand_map[m]), m.struct_key()))
    children = cand_map[target]
    if workers > 1:
        _explore_parallel(ctx, shared, S, alphabet, undec, children,
                          max_order, deadline, progress, workers)
        return
    for d in children:
        _descend(ctx, shared, S, alphabet, undec, d, max_order, deadline,
                 progress)


def _descend(ctx, shared, S, alphabet, undec, d, max_order, deadline, progress):
    new_S = S + (d,)
    if shared.seen(frozenset(new_S)):
        return
    new_alphabet = alphabet | {d}
    new_undec = {}
    for m in undec:
        if ctx.top_degree(m) == 1:
            rest = m / ctx.top_part(m)
            if rest == d:
                continue
        else:
            b = m / d
            if b.is_unit or b in new_alphabet:
                continue
        new_undec[m] = True
    for m, _ in ctx.lie(d).sorted_terms():
        if m not in new_undec and not ctx.decomposable(m, new_alphabet):
            new_undec[m] = True
    _explore(ctx, shared, new_S, new_alphabet, new_undec, max_order, deadline,
             progress)


def _explore_parallel(ctx, shared, S, alphabet, undec, children, max_order,
                      deadline, progress, workers):
    jobs = queue.SimpleQueue()
    for d in children:
        jobs.put(d)
    errors = []

    def run():
        while True:
            try:
                d = jobs.get_nowait()
            except queue.Empty:
                return
            try:
                _descend(ctx, shared, S, alphabet, undec, d, max_order,
                         deadline, progress)
            except _Deadline as e:
                errors.append(e)
                return

    threads = [threading.Thread(target=run) for _ in range(min(workers, len(children)))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


def _lower_bound(cand_map):
    """Disjoint-divisor-set bound: pairwise-independent undecomposable
    monomials each force a distinct new variable."""
    chosen = []
    lb = 0
    for m in cand_map:
        fix = set(cand_map[m])
        if all(fix.isdisjoint(f) for f in chosen):
            lb += 1
            chosen.append(fix)
    return max(lb, 1)
