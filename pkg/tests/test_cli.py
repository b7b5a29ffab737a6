"""Command-line contract: output blocks, JSON schema, exit codes."""

import json

import pytest

from qlift.cli import main

P51 = "states: x1, x2\nx1' = x1^3 + x2^2;\nx2' = x1 + x2;\n"
E39 = "states: x\ninputs: u smooth\nx' = x^2 * u;\n"
E56 = "states: x\nx' = exp(-x) + exp(-2*x);\n"
DUFF = ("states: x1, x2\ninputs: u nonsmooth\nparams: alpha, beta, delta\n"
        "x1' = x2;\nx2' = -alpha*x1 - delta*x2 - beta*x1^3 + u;\n")
TRAFFIC = "states: x\ncoupling: xD for x\nx' = x + x^2*xD;\n"


@pytest.fixture
def problem(tmp_path):
    def write(text, name="problem.ode"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def test_quadratize_text_block(problem, capsys):
    assert main(["quadratize", problem(P51)]) == 0
    out = capsys.readouterr().out
    assert "Introduced variables:" in out
    assert "w0 = x1**2" in out and "w1 = x2**2" in out
    assert "x1' = x1*w0 + w1" in out
    assert "w0' = 2*x1*w1 + 2*w0**2" in out
    assert "w1' = 2*x1*x2 + 2*w1" in out


def test_quadratize_json_contract(problem, capsys):
    assert main(["quadratize", problem(P51), "--emit", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["order"] == 2 and data["optimal"] is True
    assert data["mode"] == "autonomous"
    assert set(data) >= {"order", "optimal", "mode", "nodes_visited",
                         "wall_time_ms", "introduced", "equations"}


def test_quadratize_operators_emission(problem, capsys):
    assert main(["quadratize", problem(P51), "--emit", "operators"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["operators"]["H"]["indexing"] == "compact-upper"


def test_input_free_not_found_exits_2(problem, capsys):
    code = main(["quadratize", problem(E39), "--input-free",
                 "--max-order", "6"])
    assert code == 2


def test_nonsmooth_forces_input_free(problem, capsys):
    assert main(["quadratize", problem(DUFF)]) == 0
    out = capsys.readouterr().out
    assert "w0 = x1**2" in out
    assert "u'" not in out  # input-free was forced by the nonsmooth tag
    assert main(["quadratize", problem(DUFF), "--input-free"]) == 0
    assert "w0 = x1**2" in capsys.readouterr().out


def test_parse_error_exits_1(problem, capsys):
    assert main(["quadratize", problem("states: x\nx' = ;\n")]) == 1
    assert "2:6" in capsys.readouterr().err


def test_polynomialize_command(problem, capsys):
    assert main(["polynomialize", problem(E56)]) == 0
    out = capsys.readouterr().out
    assert "w0 = exp(-x)" in out
    assert "x' = w0**2 + w0" in out


def test_timeout_exit_code(problem):
    code = main(["quadratize", problem(E39), "--input-free",
                 "--max-order", "60", "--timeout", "0.02"])
    assert code in (2, 3)  # timeout, or exhausted just before the deadline


def test_agnostic_with_specialization(problem, tmp_path, capsys):
    matrices = {
        "n": 4,
        "matrices": [{
            "placeholder": "xD",
            "coo": [[0, 0, "4"], [1, 0, "-4"], [1, 1, "4"],
                    [2, 1, "-4"], [2, 2, "4"], [3, 2, "-4"], [3, 3, "4"]],
        }],
    }
    mpath = tmp_path / "matrices.json"
    mpath.write_text(json.dumps(matrices))
    code = main(["agnostic", problem(TRAFFIC), "--specialize", str(mpath),
                 "--n", "4"])
    assert code == 0
    out = capsys.readouterr().out
    assert "x**2" in out and "x*x~" in out
    assert "verified: True" in out


def test_verify_command(problem, tmp_path, capsys):
    defs = tmp_path / "defs.ode"
    defs.write_text("w = x1^2;\n")
    code = main(["verify", problem(P51.replace("x2^2", "x2")), str(defs)])
    assert code == 0
    out = capsys.readouterr().out
    assert "Introduced variables:" in out
    # a wrong candidate fails with exit 2
    bad = tmp_path / "bad.ode"
    bad.write_text("w = x1^4;\n")
    assert main(["verify", problem(P51), str(bad)]) == 2


def test_simulate_check_command(problem, capsys):
    code = main(["simulate-check", problem(P51), "--x0", "1/10,1/5",
                 "--T", "0.2", "--steps", "400"])
    assert code == 0
    assert "max relative deviation" in capsys.readouterr().out


def test_simulate_check_with_input(problem, capsys):
    duff_smooth = DUFF.replace("nonsmooth", "smooth")
    code = main(["simulate-check", problem(duff_smooth), "--input-free",
                 "--x0", "1/2,0", "--T", "2.0", "--steps", "500",
                 "--params", "alpha=1,beta=1,delta=1/10",
                 "--u", "sin(t)"])
    assert code == 0
    out = capsys.readouterr().out
    assert "max relative deviation" in out
    dev = float(out.split(":")[-1])
    assert dev < 1e-6
