"""Quadratization and polynomialization of ODE systems.

Transforms (possibly non-polynomial, possibly non-autonomous) ODE systems
into equivalent quadratic or quadratic-bilinear systems by introducing few
auxiliary variables, with exact symbolic verification of every lifting and
a numeric trajectory cross-check.
"""

from .agnostic import (AgnosticQuadratization, CoupledFamily, extract_family,
                       instantiate_F4, search_agnostic, specialize)
from .coeffs import Coeff
from .emit import OperatorForm, QuadraticSystem, emit_quadratic, extract_operators
from .errors import (BudgetExceeded, DimensionMismatch, NonFiniteState,
                     NotAQuadratization, NotAffineInCoupling, NotFoundWithinBound,
                     NotInputAffine, NotPolynomialBilinear, ParseError, QliftError,
                     SearchTimeout, SemanticError, SingularityEncountered,
                     UndeclaredVariable, UndefinedIntroducedVariable,
                     UnsupportedNode)
from .expressions import (Add, Const, Expression, Func, Mul, Pow, Var,
                          expression_to_poly, poly_to_expression,
                          render_expression)
from .monomials import Monomial
from .numcheck import integrate, numeric_check
from .parser import parse, parse_problem, render_problem
from .poly import Poly, poly_add, poly_mul
from .polynomialize import (Substitution, detect_nonpolynomial_nodes,
                            greedy_order, polynomialize,
                            verify_polynomialization)
from .quadratize import (AUTONOMOUS, INPUT_FREE, WITH_INPUTS,
                         QuadratizationResult, SearchMode, bilinear_construct,
                         check_triangular_coupling, default_mode,
                         generate_extensions, input_affine_parts,
                         is_quadratization, search, upper_bound)
from .systems import OdeSystem, decompose_quadratic, lie_derivative
from .variables import Variable, VarKind
from .verify import verify_polynomial_candidate, verify_symbolic

__version__ = "0.1.0"

__all__ = [
    "AgnosticQuadratization", "CoupledFamily", "extract_family",
    "instantiate_F4", "search_agnostic", "specialize",
    "Coeff", "Monomial", "Poly", "poly_add", "poly_mul",
    "OperatorForm", "QuadraticSystem", "emit_quadratic", "extract_operators",
    "Add", "Const", "Expression", "Func", "Mul", "Pow", "Var",
    "expression_to_poly", "poly_to_expression", "render_expression",
    "integrate", "numeric_check",
    "parse", "parse_problem", "render_problem",
    "Substitution", "detect_nonpolynomial_nodes", "greedy_order",
    "polynomialize", "verify_polynomialization",
    "AUTONOMOUS", "INPUT_FREE", "WITH_INPUTS", "QuadratizationResult",
    "SearchMode", "bilinear_construct", "check_triangular_coupling",
    "default_mode", "generate_extensions", "input_affine_parts",
    "is_quadratization", "search", "upper_bound",
    "OdeSystem", "decompose_quadratic", "lie_derivative",
    "Variable", "VarKind",
    "verify_polynomial_candidate", "verify_symbolic",
    "QliftError", "UndeclaredVariable", "UnsupportedNode", "BudgetExceeded",
    "NotFoundWithinBound", "SearchTimeout", "NotInputAffine",
    "NotPolynomialBilinear", "NotAffineInCoupling", "DimensionMismatch",
    "NotAQuadratization", "UndefinedIntroducedVariable",
    "SingularityEncountered", "NonFiniteState", "ParseError", "SemanticError",
]
