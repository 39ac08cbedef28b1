"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError to 2, NumericsError to 3.
Principled refusals are not exceptions; they travel in report objects.
"""


class InputError(ValueError):
    """Malformed user input: bad JSON, unknown labels, inconsistent dims."""


class NumericsError(RuntimeError):
    """A numerical assertion failed: a tolerance was exceeded where the
    mathematics says the quantity must vanish, or an algebraic hypothesis
    that was supposed to hold did not survive the numerics."""


class BorderlineToleranceWarning(UserWarning):
    """A decision quantity landed within a factor of ten of its threshold."""
