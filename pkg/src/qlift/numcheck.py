"""Numeric cross-check of liftings by fixed-step RK4 integration.

Both the original and the lifted system are compiled to flat term arrays
(exponent matrix, coefficient vector, equation index) and integrated with
the classical fourth-order Runge-Kutta scheme. Inputs are sampled
analytically on the half-step grid, derivatives included, so no finite
differencing enters the comparison. The hot loop runs through a numba
kernel by default; set ``QLIFT_NO_NUMBA=1`` to select the pure-numpy path
(the benchmark script compares the two).
"""

from __future__ import annotations

import math
import os
from fractions import Fraction

import numpy as np

from .errors import NonFiniteState, SingularityEncountered
from .expressions import (Add, Const, Expression, Func, Mul, Pow, Var)
from .poly import Poly
from .variables import Variable, VarKind

_TINY = 1e-13


def differentiate(expr, var):
    """Symbolic derivative of a closed-form expression tree."""
    if isinstance(expr, Const):
        return Const(Fraction(0))
    if isinstance(expr, Var):
        return Const(Fraction(1 if expr.var == var else 0))
    if isinstance(expr, Add):
        return Add(tuple(differentiate(a, var) for a in expr.args))
    if isinstance(expr, Mul):
        terms = []
        for i, a in enumerate(expr.args):
            rest = expr.args[:i] + expr.args[i + 1:]
            terms.append(Mul((differentiate(a, var),) + rest))
        return Add(tuple(terms))
    if isinstance(expr, Pow):
        dbase = differentiate(expr.base, var)
        return Mul((Const(expr.exponent), Pow(expr.base, expr.exponent - 1), dbase))
    if isinstance(expr, Func):
        darg = differentiate(expr.arg, var)
        if expr.fn == "exp":
            return Mul((expr, darg))
        if expr.fn == "log":
            return Mul((darg, Pow(expr.arg, Fraction(-1))))
        if expr.fn == "sin":
            return Mul((Func("cos", expr.arg), darg))
        if expr.fn == "cos":
            return Mul((Const(Fraction(-1)), Func("sin", expr.arg), darg))
    raise TypeError(f"cannot differentiate {expr!r}")


def eval_expression(expr, values):
    """Float evaluation of a closed-form expression."""
    if isinstance(expr, Const):
        return float(expr.value)
    if isinstance(expr, Var):
        return float(values[expr.var.name])
    if isinstance(expr, Add):
        return sum(eval_expression(a, values) for a in expr.args)
    if isinstance(expr, Mul):
        out = 1.0
        for a in expr.args:
            out *= eval_expression(a, values)
        return out
    if isinstance(expr, Pow):
        return eval_expression(expr.base, values) ** float(expr.exponent)
    if isinstance(expr, Func):
        fn = {"exp": math.exp, "log": math.log,
              "sin": math.sin, "cos": math.cos}[expr.fn]
        return fn(eval_expression(expr.arg, values))
    raise TypeError(f"cannot evaluate {expr!r}")


class CompiledSystem:
    """Flat-array form of a polynomial ODE system for numeric integration."""

    def __init__(self, system, param_values=None):
        param_values = param_values or {}
        self.states = list(system.states)
        input_cols = []
        for v in self.states:
            for w in system.rhs_poly(v).variables():
                if w.kind is VarKind.INPUT and w not in input_cols:
                    input_cols.append(w)
        input_cols.sort(key=lambda w: w.sort_key)
        self.input_cols = input_cols
        cols = {v: i for i, v in enumerate(self.states)}
        for k, w in enumerate(input_cols):
            cols[w] = len(self.states) + k
        nv = len(cols)
        exps, coeffs, rows = [], [], []
        for r, v in enumerate(self.states):
            for m, c in system.rhs_poly(v).sorted_terms():
                row = [0] * nv
                for w, e in m.items():
                    if w.kind is VarKind.PARAMETER:
                        raise ValueError("unexpanded parameter in monomial")
                    row[cols[w]] = e
                exps.append(row)
                coeffs.append(c.evaluate(param_values) if not c.is_rational
                              else float(c.as_fraction()))
                rows.append(r)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(coeffs), nv)
        self.coeffs = np.array(coeffs, dtype=np.float64)
        self.rows = np.array(rows, dtype=np.int64)
        self.neq = len(self.states)
        neg = np.zeros(nv, dtype=np.bool_)
        for row in self.exps:
            neg |= row < 0
        self.negative_cols = neg


def _input_grid(compiled, input_functions, tvar, t0, horizon, steps):
    """Sample inputs (all derivative orders used) on the half-step grid."""
    npts = 2 * steps + 1
    grid = np.zeros((npts, len(compiled.input_cols)))
    exprs = {}
    for w in compiled.input_cols:
        base = w.base_input()
        if base.name not in input_functions:
            raise ValueError(f"no closed form supplied for input {base.name}")
        e = input_functions[base.name]
        for _ in range(w.order):
            e = differentiate(e, tvar)
        exprs[w] = e
    ts = t0 + (horizon - t0) * np.arange(npts) / (npts - 1) if steps else [t0]
    for k, w in enumerate(compiled.input_cols):
        for i in range(npts):
            grid[i, k] = eval_expression(exprs[w], {tvar.name: ts[i]})
    return grid


# ---------------------------------------------------------------------------
# Integration kernels

_USE_NUMBA = os.environ.get("QLIFT_NO_NUMBA", "") not in ("1", "true", "yes")
_numba_kernel = None


def _get_numba_kernel():
    global _numba_kernel
    if _numba_kernel is not None:
        return _numba_kernel
    from numba import njit

    @njit(cache=False)
    def eval_rhs(exps, coeffs, rows, xf, out):
        out[:] = 0.0
        nt, nv = exps.shape
        for t in range(nt):
            p = coeffs[t]
            for j in range(nv):
                e = exps[t, j]
                if e != 0:
                    p *= xf[j] ** e
            out[rows[t]] += p

    @njit(cache=False)
    def run(exps, coeffs, rows, neq, grid, x0, h, steps, neg_cols, tiny):
        nv = exps.shape[1]
        nin = grid.shape[1]
        traj = np.empty((steps + 1, neq))
        traj[0] = x0
        x = x0.copy()
        xf = np.empty(nv)
        k1 = np.empty(neq)
        k2 = np.empty(neq)
        k3 = np.empty(neq)
        k4 = np.empty(neq)
        signs = np.sign(x0)
        for i in range(steps):
            for stage in range(4):
                gi = 2 * i + (0 if stage == 0 else (1 if stage < 3 else 2))
                if stage == 0:
                    xs = x
                elif stage == 1:
                    xs = x + 0.5 * h * k1
                elif stage == 2:
                    xs = x + 0.5 * h * k2
                else:
                    xs = x + h * k3
                for j in range(neq):
                    xf[j] = xs[j]
                for j in range(nin):
                    xf[neq + j] = grid[gi, j]
                for j in range(nv):
                    if neg_cols[j] and (xf[j] == 0.0 or abs(xf[j]) < tiny):
                        return traj, 1
                if stage == 0:
                    eval_rhs(exps, coeffs, rows, xf, k1)
                elif stage == 1:
                    eval_rhs(exps, coeffs, rows, xf, k2)
                elif stage == 2:
                    eval_rhs(exps, coeffs, rows, xf, k3)
                else:
                    eval_rhs(exps, coeffs, rows, xf, k4)
            for j in range(neq):
                x[j] = x[j] + (h / 6.0) * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j])
                if not np.isfinite(x[j]):
                    return traj, 2
            for j in range(neq):
                if neg_cols[j]:
                    if x[j] == 0.0 or abs(x[j]) < tiny or \
                            (signs[j] != 0 and np.sign(x[j]) != signs[j]):
                        return traj, 1
            traj[i + 1] = x
        return traj, 0

    _numba_kernel = run
    return run


def _run_numpy(exps, coeffs, rows, neq, grid, x0, h, steps, neg_cols, tiny):
    nv = exps.shape[1]
    nin = grid.shape[1]
    traj = np.empty((steps + 1, neq))
    traj[0] = x0
    x = x0.copy()
    signs = np.sign(x0)

    def rhs(xs, gi):
        xf = np.concatenate([xs, grid[gi]]) if nin else xs
        if np.any(neg_cols & ((xf == 0.0) | (np.abs(xf) < tiny))):
            raise SingularityEncountered("state hit a pole of a Laurent term")
        powers = np.prod(np.power(xf[None, :], exps), axis=1)
        return np.bincount(rows, weights=coeffs * powers, minlength=neq)

    for i in range(steps):
        k1 = rhs(x, 2 * i)
        k2 = rhs(x + 0.5 * h * k1, 2 * i + 1)
        k3 = rhs(x + 0.5 * h * k2, 2 * i + 1)
        k4 = rhs(x + h * k3, 2 * i + 2)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite state at step {i + 1}")
        guard = neg_cols[:neq]
        if np.any(guard & ((x == 0.0) | (np.abs(x) < tiny)
                           | ((signs != 0) & (np.sign(x) != signs)))):
            raise SingularityEncountered(
                f"state crossed a Laurent pole at step {i + 1}")
        traj[i + 1] = x
    return traj


def integrate(system, x0, horizon, steps, param_values=None,
              input_functions=None, t0=0.0, tvar=None):
    """Fixed-step RK4 trajectory of a polynomial (possibly Laurent) system.

    Returns an array of shape (steps+1, len(states)). Raises
    SingularityEncountered when a component with a negative exponent hits or
    crosses zero, NonFiniteState on overflow.
    """
    tvar = tvar or Variable("t", VarKind.INPUT)
    compiled = CompiledSystem(system, param_values)
    grid = _input_grid(compiled, input_functions or {}, tvar, t0, horizon, steps)
    # pre-check sampled inputs against poles
    nin = len(compiled.input_cols)
    for k in range(nin):
        if compiled.negative_cols[compiled.neq + k] and \
                np.any(np.abs(grid[:, k]) < _TINY):
            raise SingularityEncountered(
                f"input {compiled.input_cols[k].name} hits a pole on the grid")
    x0 = np.array([float(v) for v in x0], dtype=np.float64)
    h = (horizon - t0) / steps
    if _USE_NUMBA:
        run = _get_numba_kernel()
        traj, status = run(compiled.exps, compiled.coeffs, compiled.rows,
                           compiled.neq, grid, x0, h, steps,
                           compiled.negative_cols, _TINY)
        if status == 1:
            raise SingularityEncountered("state hit a pole of a Laurent term")
        if status == 2:
            raise NonFiniteState("non-finite state during integration")
        return traj
    return _run_numpy(compiled.exps, compiled.coeffs, compiled.rows,
                      compiled.neq, grid, x0, h, steps,
                      compiled.negative_cols, _TINY)


def numeric_check(original, lifted, definitions, x0, horizon, steps,
                  param_values=None, input_functions=None):
    """Integrate original and lifted systems side by side.

    The lifted trajectory starts from ``w(0) = w(x(0))`` computed exactly
    from the definitions. Returns the max over time and original state
    components of ``|x_lifted - x_original| / (1 + |x_original|)``.
    """
    lifted_system = getattr(lifted, "system", lifted)
    tvar = Variable("t", VarKind.INPUT)
    traj_o = integrate(original, x0, horizon, steps, param_values,
                       input_functions, tvar=tvar)

    values = {v.name: float(x) for v, x in zip(original.states, x0)}
    for name, val in (param_values or {}).items():
        values[name] = float(val)
    if input_functions:
        for name, expr in input_functions.items():
            values[name] = eval_expression(expr, {tvar.name: 0.0})
            d = differentiate(expr, tvar)
            values[name + "'"] = eval_expression(d, {tvar.name: 0.0})
            values[name + "''"] = eval_expression(
                differentiate(d, tvar), {tvar.name: 0.0})
    z0 = []
    for v in lifted_system.states:
        if v in original.states:
            z0.append(values[v.name])
        else:
            z0.append(definitions[v].evaluate(values))
    traj_l = integrate(lifted_system, z0, horizon, steps, param_values,
                       input_functions, tvar=tvar)

    deviation = 0.0
    for j, v in enumerate(original.states):
        jl = lifted_system.states.index(v)
        num = np.abs(traj_l[:, jl] - traj_o[:, j])
        den = 1.0 + np.abs(traj_o[:, j])
        deviation = max(deviation, float(np.max(num / den)))
    return deviation
