"""
isoprofile - Exceptions
Error types raised by the numerical modules and mapped to CLI exit codes.
"""


class IsoprofileError(Exception):
    """Base class for every error raised by isoprofile"""


class DomainError(IsoprofileError, ValueError):
    """Argument outside the mathematical domain of an operation"""


class NumericError(IsoprofileError, ArithmeticError):
    """A numerical routine failed to converge"""


class InputError(IsoprofileError, ValueError):
    """Malformed file, configuration or mismatched inputs"""
