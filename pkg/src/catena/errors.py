"""Exception hierarchy.

Domain errors (exit code 3 in the CLI) signal that the requested physical
configuration does not exist or leaves the admissible set. Numerical errors
(exit code 4) signal that an algorithm failed to deliver its postcondition.
"""


class CatenaError(Exception):
    exit_code = 1


class DomainError(CatenaError):
    exit_code = 3


class NumericalError(CatenaError):
    exit_code = 4


class NoSolution(DomainError):
    """No catenoid exists for the requested aspect ratio."""


class SingularGap(DomainError):
    """Film profile touches the axis (u + 1 <= eps_gap) or the cylinder."""


class Touchdown(SingularGap):
    """Time step drove the film onto the axis."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class CeilingContact(SingularGap):
    """Time step drove the film onto the cylinder."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NoConvergence(NumericalError):
    pass


class NotBracketed(NumericalError):
    pass


class SingularOperator(NumericalError):
    """Tridiagonal solve met a (near) zero pivot."""


# the Newton solvers report fold proximity under this name
SingularJacobian = SingularOperator


class InsufficientDecay(NumericalError):
    pass


class CriterionViolated(NumericalError):
    """The anti-maximum implication failed; indicates a bug, not physics."""


class InvalidConfig(CatenaError):
    exit_code = 2

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
