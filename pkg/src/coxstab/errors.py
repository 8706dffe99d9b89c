"""Exception classes shared across the package.

The CLI maps each class onto a fixed exit code, so library code raises
these rather than bare ``ValueError``.
"""


class CoxStabError(Exception):
    """Base class for all package errors."""


class ParseError(CoxStabError, ValueError):
    """Malformed or inconsistent input file."""


class ContractError(CoxStabError, ValueError):
    """A precondition of an operation was violated by the caller."""


class NumericalError(CoxStabError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""
