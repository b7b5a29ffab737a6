"""Command-line front end.

Exit codes are part of the machine contract: 0 success, 1 usage/parse
errors, 2 no result within the given bounds (or failed verification),
3 timeout with nothing found. Text layout may change; the JSON schema and
exit codes do not.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .agnostic import extract_family, search_agnostic, specialize
from .coeffs import Coeff
from .errors import (NotFoundWithinBound, ParseError, QliftError, SearchTimeout,
                     SemanticError)
from .numcheck import numeric_check
from .parser import parse_problem, render_problem
from .polynomialize import polynomialize
from .quadratize import (AUTONOMOUS, INPUT_FREE, WITH_INPUTS, SearchMode,
                         default_mode, is_quadratization, search)
from .verify import verify_polynomial_candidate, verify_symbolic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_FOUND = 2
EXIT_TIMEOUT = 3


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _search_mode(system, args):
    kind = None
    if getattr(args, "input_free", False):
        kind = INPUT_FREE
    laurent = system.laurent or getattr(args, "laurent", False)
    default = default_mode(system)
    if kind is None:
        kind = default.kind
    if kind != INPUT_FREE and default.kind == INPUT_FREE:
        raise SemanticError("non-smooth inputs force input-free mode; "
                            "pass --input-free or tag the inputs smooth")
    workers = getattr(args, "workers", None) or \
        int(os.environ.get("QLIFT_WORKERS", "1"))
    kw = dict(kind=kind, laurent=laurent, timeout=args.timeout,
              workers=workers, max_order=args.max_order,
              max_laurent_degree=args.max_laurent_degree)
    if laurent:
        if kw["max_order"] is None:
            kw["max_order"] = 20
        if kw["max_laurent_degree"] is None:
            kw["max_laurent_degree"] = 6
    return SearchMode(**kw)


def _result_json(result, emit_operators=False, param_values=None):
    out = {
        "order": result.order,
        "optimal": result.optimal,
        "mode": result.mode.kind + ("-laurent" if result.mode.laurent else ""),
        "nodes_visited": result.nodes_visited,
        "wall_time_ms": round(result.wall_time * 1000.0, 3),
    }
    out.update(result.quadratic_system.to_json_dict())
    if emit_operators:
        out["operators"] = result.quadratic_system.operator_form(
            param_values).to_json_dict()
    return out


def _cmd_polynomialize(args):
    system, _opts = parse_problem(_read_text(args.file))
    poly_system, subs = polynomialize(system, budget=args.budget)
    print("Introduced variables:")
    if subs:
        for s in subs:
            from .expressions import render_expression
            print(f"{s.variable.name} = {render_expression(s.defining_expression)}")
    else:
        print("(none)")
    print()
    for v in poly_system.states:
        print(f"{v.name}' = {poly_system.rhs_poly(v).render()}")
    return EXIT_OK


def _cmd_quadratize(args):
    system, _opts = parse_problem(_read_text(args.file))
    if not system.is_polynomial:
        system, subs = polynomialize(system)
        if subs:
            print(f"(polynomialized first: {len(subs)} new variables)",
                  file=sys.stderr)
    mode = _search_mode(system, args)
    result = search(system, mode)
    if args.emit == "json":
        print(json.dumps(_result_json(result), indent=2))
    elif args.emit == "operators":
        print(json.dumps(_result_json(result, emit_operators=True,
                                      param_values=_parse_params(args.params)),
                         indent=2))
    else:
        print(result.quadratic_system.render_text())
        print()
        print(f"order {result.order}"
              + (" (optimal)" if result.optimal else " (best found)"))
    return EXIT_OK


def _cmd_agnostic(args):
    system, _opts = parse_problem(_read_text(args.file))
    family = extract_family(system)
    mode = None
    if args.laurent or system.laurent or args.max_order or args.max_laurent_degree:
        kind = WITH_INPUTS if family.inputs else AUTONOMOUS
        laurent = args.laurent or system.laurent
        mode = SearchMode(kind=kind, laurent=laurent,
                          max_order=args.max_order or (40 if laurent else None),
                          max_laurent_degree=args.max_laurent_degree
                          or (6 if laurent else None),
                          timeout=args.timeout)
    aq = search_agnostic(family, mode)
    print(aq.render_text())
    if args.specialize:
        with open(args.specialize, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        n = args.n or payload.get("n")
        if not n:
            raise SemanticError("--n (or an 'n' field) is required to specialize")
        matrices = _load_matrices(payload, int(n))
        spec_system, monomials = specialize(aq, int(n), matrices)
        ok = is_quadratization(spec_system, monomials,
                               default_mode(spec_system))
        print()
        print(f"Specialized to n={n}: {len(monomials)} variables; "
              f"verified: {ok}")
        for m in monomials:
            print(f"  {m.render()}")
        if not ok:
            return EXIT_NOT_FOUND
    return EXIT_OK


def _load_matrices(payload, n):
    matrices = {}
    for entry in payload.get("matrices", []):
        name = entry["placeholder"]
        if "dense" in entry:
            mat = [[Fraction(str(x)) for x in row] for row in entry["dense"]]
        elif "coo" in entry:
            mat = [[Fraction(0)] * n for _ in range(n)]
            for i, j, val in entry["coo"]:
                mat[int(i)][int(j)] = Fraction(str(val))
        else:
            raise SemanticError(f"matrix {name!r} needs 'dense' or 'coo'")
        matrices[name] = mat
    return matrices


def _cmd_verify(args):
    from .normalform import normalize
    from .parser import _Parser
    system, _opts = parse_problem(_read_text(args.file))
    defs_text = _read_text(args.definitions)
    candidates = _parse_definitions(defs_text, system)
    qs = verify_polynomial_candidate(system, candidates)
    if qs is None:
        print("not a quadratization")
        return EXIT_NOT_FOUND
    print(qs.render_text())
    return EXIT_OK


def _parse_definitions(text, system):
    """Definition file: one `name = expression;` per line."""
    from .normalform import normalize
    from .parser import _Parser, _resolve
    parser = _Parser(text + "\n")
    table = {v.name: v for v in system.states}
    table.update({u.name: u for u, _ in system.inputs})
    table.update({p.name: p for p in system.parameters})
    candidates = []
    while True:
        parser.skip_newlines()
        if parser.peek().kind == "eof":
            break
        parser.expect("name")
        parser.expect("op", "=")
        rhs = parser.parse_expr()
        parser.expect("op", ";")
        resolved = _resolve(rhs, table)
        candidates.append(normalize(resolved).to_poly(laurent=system.laurent))
    return candidates


def _parse_params(spec):
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        if not item.strip():
            continue
        name, _, val = item.partition("=")
        out[name.strip()] = float(Fraction(val.strip()))
    return out


def _parse_inputs(specs, system):
    from .parser import _Parser, _resolve
    from .variables import Variable, VarKind
    if not specs:
        return {}
    tvar = Variable("t", VarKind.INPUT)
    table = {"t": tvar}
    table.update({p.name: p for p in system.parameters})
    out = {}
    names = [u.name for u, _ in system.inputs]
    for spec in specs:
        name, sep, body = spec.partition("=")
        if not sep:
            if len(names) != 1:
                raise SemanticError("use NAME=EXPR with several inputs")
            name, body = names[0], spec
        parser = _Parser(body + "\n")
        expr = parser.parse_expr()
        out[name.strip()] = _resolve(expr, table)
    return out


def _cmd_simulate_check(args):
    system, _opts = parse_problem(_read_text(args.file))
    if not system.is_polynomial:
        system, _subs = polynomialize(system)
    mode = _search_mode(system, args)
    result = search(system, mode)
    x0 = [Fraction(v.strip()) for v in args.x0.split(",")]
    params = _parse_params(args.params)
    inputs = _parse_inputs(args.u, system)
    dev = numeric_check(system, result.quadratic_system,
                        result.quadratic_system.definitions(), x0,
                        args.T, args.steps, param_values=params,
                        input_functions=inputs)
    print(f"max relative deviation over [0, {args.T}] "
          f"({args.steps} steps): {dev:.6e}")
    return EXIT_OK


def build_arg_parser():
    ap = argparse.ArgumentParser(
        prog="qlift",
        description="Quadratization and polynomialization of ODE systems")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_search_flags(p):
        p.add_argument("--input-free", action="store_true",
                       help="search for an input-free quadratization")
        p.add_argument("--laurent", action="store_true",
                       help="allow Laurent monomials as new variables")
        p.add_argument("--max-order", type=int, default=None, metavar="K")
        p.add_argument("--max-laurent-degree", type=int, default=None,
                       metavar="D")
        p.add_argument("--timeout", type=float, default=None, metavar="S")
        p.add_argument("--workers", type=int, default=None, metavar="W")

    p = sub.add_parser("polynomialize", help="rewrite with polynomial "
                       "right-hand sides")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=None,
                   help="max new variables")
    p.set_defaults(func=_cmd_polynomialize)

    p = sub.add_parser("quadratize", help="find an optimal monomial "
                       "quadratization")
    p.add_argument("file")
    add_search_flags(p)
    p.add_argument("--emit", choices=("text", "json", "operators"),
                   default="text")
    p.add_argument("--params", default=None,
                   help="parameter values for operator assembly, k=v,...")
    p.set_defaults(func=_cmd_quadratize)

    p = sub.add_parser("agnostic", help="dimension-agnostic quadratization "
                       "of a coupled family")
    p.add_argument("file")
    add_search_flags(p)
    p.add_argument("--specialize", metavar="MATRICES.JSON", default=None)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=_cmd_agnostic)

    p = sub.add_parser("verify", help="check hand-supplied polynomial "
                       "candidate variables")
    p.add_argument("file")
    p.add_argument("definitions", help="file of `name = expression;` lines")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("simulate-check", help="numeric trajectory cross-check "
                       "of the emitted lifting")
    p.add_argument("file")
    add_search_flags(p)
    p.add_argument("--x0", required=True, help="initial state, comma separated")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--params", default=None, help="k=v,...")
    p.add_argument("--u", action="append", default=None,
                   help="input as a closed-form expression in t "
                        "(NAME=EXPR with several inputs)")
    p.set_defaults(func=_cmd_simulate_check)
    return ap


def main(argv=None):
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, SemanticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NotFoundWithinBound as e:
        print(f"no result: {e}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except SearchTimeout as e:
        print(f"timeout: {e}", file=sys.stderr)
        return EXIT_TIMEOUT
    except QliftError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
