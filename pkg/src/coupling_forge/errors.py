"""Exception hierarchy shared by every module."""


class CouplingForgeError(Exception):
    """Base class for all library errors."""


class ParameterError(CouplingForgeError, ValueError):
    """An argument lies outside its valid domain."""


class EmptySupportError(CouplingForgeError):
    """The structure has no elements of the requested size."""


class NumericalConsistencyError(CouplingForgeError, ArithmeticError):
    """A floating-point result left its mathematically admissible range."""


class SearchExhaustedError(CouplingForgeError):
    """Threshold search ran out of probe points.

    ``best_x`` and ``best_mass`` carry the best probe found.
    """

    def __init__(self, message, best_x, best_mass):
        super().__init__(message)
        self.best_x = best_x
        self.best_mass = best_mass


class SizeLimitError(CouplingForgeError):
    """The row-class reduction would exceed the configured size guard."""


class UnverifiedTableError(CouplingForgeError):
    """A coupling table was used before passing verification."""


class FlowSolverError(CouplingForgeError):
    """The max-flow solve produced an inconsistent result."""


class CouplingViolationError(CouplingForgeError):
    """A sampled pair broke the no-pivot constraint."""
