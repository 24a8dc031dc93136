"""Shared exception types."""


class BudgetError(RuntimeError):
    """A configured resource cap (memory, pieces, primes, denominators) was hit.

    Raised instead of silently degrading to floating point or to partial
    results.  The CLI maps this to exit status 3.
    """


class UsageError(ValueError):
    """Invalid arguments at the CLI boundary.  Maps to exit status 2."""
