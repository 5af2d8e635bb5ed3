"""Exact arithmetic for trivial-weight quaternionic modular forms.

The package computes right ideal classes of maximal orders in definite
rational quaternion algebras of squarefree discriminant, Brandt matrices,
Hecke eigenforms over their rationality fields, the signed-graph
classification of trivial zeroes, closed-form dimension biases, toric
periods against imaginary quadratic class groups, and batch censuses of
all of the above.  Every number produced is exact (integers, rationals,
number-field elements) unless explicitly marked as an interval.
"""

__version__ = "0.1.0"


class PreconditionError(ValueError):
    """Input violates a documented precondition (CLI exit code 2)."""


class BudgetExceeded(RuntimeError):
    """A configured work budget ran out before the result was certified (exit 3)."""


class InternalDefect(AssertionError):
    """An internal certificate failed; indicates a bug, never bad input (exit 4)."""
