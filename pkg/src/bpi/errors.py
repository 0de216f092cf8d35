"""Exception types shared across the package."""


class BPIError(Exception):
    """Base class for all package errors."""


class DegenerateDenominator(BPIError):
    pass


class ToleranceNotMet(BPIError):
    pass


class DomainError(BPIError):
    pass


class PreconditionViolated(BPIError):
    pass


class RegimeError(BPIError):
    """Raised when a computation needs varsigma <= 0 and gets varsigma > 0."""


class AssumptionEViolated(BPIError):
    pass


class EventCapExceeded(BPIError):
    pass


class ZeroState(BPIError):
    pass


class SolverDiverged(BPIError):
    pass


class StiffnessFailure(BPIError):
    pass


class WorkerPanic(BPIError):
    def __init__(self, index, cause):
        super().__init__(f"task failed at path index {index}: {cause!r}")
        self.index = index
        self.cause = cause
