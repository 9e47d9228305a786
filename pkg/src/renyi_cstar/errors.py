"""Exception hierarchy shared by all modules."""


class RenyiError(Exception):
    """Base class for every error raised by this package."""


class InvalidDistribution(RenyiError, ValueError):
    pass


class InvalidAlpha(RenyiError, ValueError):
    pass


class InvalidCode(RenyiError, ValueError):
    pass


class StateValidationError(RenyiError, ValueError):
    """A matrix failed one of the density-matrix invariants."""


class NotHermitian(StateValidationError):
    pass


class NotPositive(StateValidationError):
    pass


class TraceNotOne(StateValidationError):
    pass


class BlockStructureViolated(StateValidationError):
    pass


class EigenSolverError(RenyiError, ArithmeticError):
    """Jacobi iteration cap exceeded."""


class DecompositionError(RenyiError, ValueError):
    pass


class DynamicsError(RenyiError, ValueError):
    pass


class NotInvariant(RenyiError, ValueError):
    """The state is not in the invariant-state reference system."""


class NotKMS(RenyiError, ValueError):
    """The state is not a KMS state for the given dynamics and beta."""


class ProblemError(RenyiError, ValueError):
    """Problem file failed to parse; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
