"""Exception hierarchy shared by all besovlab modules.

The CLI maps :class:`ValidationError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class BesovlabError(Exception):
    """Base class for all errors raised by besovlab."""


class ValidationError(BesovlabError, ValueError):
    """Bad input: out-of-range parameter, malformed config, unmet precondition."""


class TheoremPreconditionError(ValidationError):
    """The experiment requests a regime where the regularity theorem does not apply."""


class UnsupportedError(ValidationError):
    """The operation is not available for this process or dimension."""


class ResourceError(ValidationError):
    """The requested discretization would exceed the memory budget."""


class NumericalError(BesovlabError, ArithmeticError):
    """A numerical procedure failed (factorization, blow-up, ...)."""
