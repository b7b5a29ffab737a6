"""Variable symbols and their canonical ordering.

Every symbol that may appear in a monomial is a :class:`Variable`. The
canonical order (states, then introduced variables, then inputs, then input
derivatives, then coupling placeholders, then parameters, each by declaration
index) is total and fixed; it drives monomial ordering and therefore the
determinism of search and emission.
"""

from __future__ import annotations

import enum


class VarKind(enum.Enum):
    STATE = "state"
    INTRODUCED = "introduced"
    INPUT = "input"
    COUPLING = "coupling"
    PARAMETER = "parameter"


def _rank(kind, order):
    if kind is VarKind.STATE:
        return 0
    if kind is VarKind.INTRODUCED:
        return 1
    if kind is VarKind.INPUT:
        return 2 if order == 0 else 3
    if kind is VarKind.COUPLING:
        return 4
    return 5


class Variable:
    """Named symbol with a kind and a stable declaration index.

    ``order`` is the derivative order and only nonzero for inputs: ``u`` has
    order 0, ``u'`` order 1 and so on. Equality is structural, so derivative
    variables created on demand in different places compare equal.
    """

    __slots__ = ("name", "kind", "order", "index", "sort_key", "_hash")

    def __init__(self, name, kind, index=0, order=0):
        if order and kind is not VarKind.INPUT:
            raise ValueError("only inputs carry a derivative order")
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        self.name = name
        self.kind = kind
        self.order = order
        self.index = index
        self.sort_key = (_rank(kind, order), order, index, name)
        self._hash = hash((name, kind, order, index))

    def derivative(self):
        """Next-order derivative symbol (inputs only)."""
        if self.kind is not VarKind.INPUT:
            raise ValueError(f"{self.name} is not an input")
        return Variable(self.name + "'", VarKind.INPUT, index=self.index,
                        order=self.order + 1)

    def base_input(self):
        """Strip derivative primes: the order-0 input this derives from."""
        if self.kind is not VarKind.INPUT:
            raise ValueError(f"{self.name} is not an input")
        return Variable(self.name.rstrip("'"), VarKind.INPUT, index=self.index)

    @property
    def is_differential(self):
        """True for variables that carry their own ODE (states and introduced)."""
        return self.kind in (VarKind.STATE, VarKind.INTRODUCED)

    def __eq__(self, other):
        if not isinstance(other, Variable):
            return NotImplemented
        return (self.name == other.name and self.kind is other.kind
                and self.order == other.order and self.index == other.index)

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.sort_key < other.sort_key

    def __repr__(self):
        return f"Variable({self.name!r}, {self.kind.value})"

    def __str__(self):
        return self.name


def state(name, index=0):
    return Variable(name, VarKind.STATE, index=index)


def introduced(name, index=0):
    return Variable(name, VarKind.INTRODUCED, index=index)


def input_var(name, index=0, order=0):
    return Variable(name, VarKind.INPUT, index=index, order=order)


def parameter(name, index=0):
    return Variable(name, VarKind.PARAMETER, index=index)


def coupling(name, index=0):
    return Variable(name, VarKind.COUPLING, index=index)
