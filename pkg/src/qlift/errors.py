"""Exception types raised across the package."""


class QliftError(Exception):
    """Base class for all library errors."""


class UndeclaredVariable(QliftError):
    pass


class UnsupportedNode(QliftError):
    pass


class BudgetExceeded(QliftError):
    pass


class NotFoundWithinBound(QliftError):
    pass


class SearchTimeout(QliftError):
    """Search hit its wall-clock limit before finding any result."""


class NotInputAffine(QliftError):
    pass


class NotPolynomialBilinear(QliftError):
    pass


class NotAffineInCoupling(QliftError):
    pass


class DimensionMismatch(QliftError):
    pass


class NotAQuadratization(QliftError):
    pass


class UndefinedIntroducedVariable(QliftError):
    pass


class SingularityEncountered(QliftError):
    pass


class NonFiniteState(QliftError):
    pass


class ParseError(QliftError):
    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SemanticError(QliftError):
    pass
