"""Numeric trajectory cross-checks and the RK4 kernels."""

import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from qlift import (Monomial, OdeSystem, Poly, SearchMode, SingularityEncountered,
                   integrate, numeric_check, search)
from qlift.expressions import Func, Var
from qlift.numcheck import differentiate, eval_expression
from qlift.quadratize import INPUT_FREE
from qlift.variables import VarKind, Variable

from conftest import P, input_var, state


def test_identity_lifting_deviation_is_zero():
    x1, x2 = state("x1", 0), state("x2", 1)
    s = OdeSystem([(x1, P(x2)), (x2, -(P(x1)))])
    r = search(s)
    assert r.order == 0
    assert numeric_check(s, r.quadratic_system, {}, [1, 0], 5.0, 500) == 0.0


def test_cubic_shift_deviation_small(cubic_shift_system):
    r = search(cubic_shift_system)
    dev = numeric_check(cubic_shift_system, r.quadratic_system,
                        r.quadratic_system.definitions(),
                        [Fraction(1, 10), Fraction(1, 5)], 0.25, 1000)
    assert dev < 1e-6


def test_reference_refinement_agrees(cubic_shift_system):
    r = search(cubic_shift_system)
    defs = r.quadratic_system.definitions()
    coarse = numeric_check(cubic_shift_system, r.quadratic_system, defs,
                           [Fraction(1, 10), Fraction(1, 5)], 0.25, 500)
    fine = numeric_check(cubic_shift_system, r.quadratic_system, defs,
                         [Fraction(1, 10), Fraction(1, 5)], 0.25, 20000)
    assert fine < coarse


def test_rk4_fourth_order_convergence(cubic_shift_system):
    r = search(cubic_shift_system)
    defs = r.quadratic_system.definitions()
    devs = [numeric_check(cubic_shift_system, r.quadratic_system, defs,
                          [Fraction(1, 10), Fraction(1, 5)], 0.25, N)
            for N in (100, 200, 400)]
    # halving the step shrinks the deviation by roughly 2^4
    assert devs[0] / devs[1] > 8
    assert devs[1] / devs[2] > 8


def test_duffing_with_sine_input(duffing_system):
    r = search(duffing_system, SearchMode(kind=INPUT_FREE))
    t = Var(input_var("t"))
    dev = numeric_check(duffing_system, r.quadratic_system,
                        r.quadratic_system.definitions(),
                        [Fraction(1, 2), 0], 5.0, 1000,
                        param_values={"alpha": 1.0, "beta": 1.0, "delta": 0.1},
                        input_functions={"u": Func("sin", t)})
    assert dev < 1e-6


def test_laurent_singularity_guard(laurent_pair_system):
    mode = SearchMode(laurent=True, max_order=6, max_laurent_degree=4)
    r = search(laurent_pair_system, mode)
    defs = r.quadratic_system.definitions()
    dev = numeric_check(laurent_pair_system, r.quadratic_system, defs,
                        [1.0, 1.0], 1.0, 2000)
    assert dev < 1e-6
    with pytest.raises(SingularityEncountered):
        numeric_check(laurent_pair_system, r.quadratic_system, defs,
                      [1.0, 0.0], 1.0, 100)


def test_integrate_matches_closed_form():
    # x' = -x: x(t) = exp(-t)
    x = state("x", 0)
    s = OdeSystem([(x, -(P(x)))])
    traj = integrate(s, [1.0], 1.0, 1000)
    assert abs(traj[-1, 0] - np.exp(-1.0)) < 1e-10


def test_differentiate_and_eval():
    t = input_var("t")
    expr = Func("sin", Var(t))
    d = differentiate(expr, t)
    for val in (0.0, 0.3, 1.7):
        assert abs(eval_expression(d, {"t": val}) - np.cos(val)) < 1e-12


def test_numpy_fallback_matches_numba(cubic_shift_system, tmp_path):
    r = search(cubic_shift_system)
    defs = r.quadratic_system.definitions()
    dev = numeric_check(cubic_shift_system, r.quadratic_system, defs,
                        [Fraction(1, 10), Fraction(1, 5)], 0.25, 400)
    script = tmp_path / "fallback.py"
    script.write_text(
        "import os\n"
        "os.environ['QLIFT_NO_NUMBA'] = '1'\n"
        "from fractions import Fraction\n"
        "import sys\n"
        "sys.path.insert(0, 'tests')\n"
        "from conftest import P, state\n"
        "from qlift import OdeSystem, Poly, search, numeric_check\n"
        "x1, x2 = state('x1', 0), state('x2', 1)\n"
        "s = OdeSystem([(x1, (P(x1) + Poly.constant(1)) ** 3 + P(x2)),\n"
        "               (x2, P(x1) + P(x2))])\n"
        "r = search(s)\n"
        "dev = numeric_check(s, r.quadratic_system,\n"
        "                    r.quadratic_system.definitions(),\n"
        "                    [Fraction(1, 10), Fraction(1, 5)], 0.25, 400)\n"
        "print(repr(dev))\n")
    out = subprocess.run([sys.executable, str(script)], cwd=os.getcwd(),
                         capture_output=True, text=True, check=True)
    fallback_dev = float(out.stdout.strip())
    assert abs(fallback_dev - dev) <= 1e-14 * max(1.0, abs(dev))
