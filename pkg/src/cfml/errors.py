"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class CfmlError(Exception):
    """Base class for all library errors."""


class DomainError(CfmlError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapExceeded(CfmlError):
    """A size/memory budget (sieve limit, enumeration cap) would be exceeded."""


class NumericalFailure(CfmlError, ArithmeticError):
    """Root bracketing failed, a denominator vanished or a result is not finite."""
