"""Exception types shared across the library.

DomainError marks invalid inputs (bad parameters, violated preconditions);
NumericsError marks failures of a numerical procedure (no convergence,
rank-deficient fit, step underflow).  The CLI maps them to exit codes 1
and 2 respectively.
"""


class DomainError(ValueError):
    """Input outside the admissible domain of an operation."""


class NumericsError(RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""
