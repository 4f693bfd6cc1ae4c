"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the code it should
produce when it escapes a subcommand.
"""


class NLTError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ConfigError(NLTError, ValueError):
    exit_code = 2


class NotPrimitive(NLTError, ValueError):
    """Transition matrix is not primitive (the shift would not be mixing)."""

    exit_code = 2


class CapExceeded(NLTError):
    exit_code = 4


class LengthMismatch(NLTError, ValueError):
    pass


class DepthMismatch(NLTError, ValueError):
    pass


class NoConvergence(NLTError, ArithmeticError):
    pass


class OutsideRotationSet(NLTError, ValueError):
    pass


class BoundaryUnsupported(NLTError, ValueError):
    pass


class ExprError(NLTError, ValueError):
    """Problems with an F expression found while parsing it."""

    exit_code = 2

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class ArityError(ExprError):
    pass


class DomainError(NLTError, ArithmeticError):
    """F left its domain (log of a nonpositive value, division by zero, ...).

    ``node`` is the printed sub-expression that failed and ``z`` the point
    at which it was evaluated, when known.
    """

    def __init__(self, message, node=None, z=None):
        self.node = node
        self.z = z
        if node is not None:
            message = f"{message} in '{node}'"
        if z is not None:
            message = f"{message} at z={list(z)}"
        super().__init__(message)
