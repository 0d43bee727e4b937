"""Exception hierarchy shared across the package."""


class DatalyapError(Exception):
    """Base class for every error raised by this package."""


# geometry
class DegenerateInput(DatalyapError):
    pass


class HoleNotContained(DatalyapError):
    pass


class OutsideRegion(DatalyapError):
    pass


# dataset
class ParseError(DatalyapError):
    pass


class InvalidM(DatalyapError):
    pass


class InconsistentData(DatalyapError):
    pass


# program
class EmptyRelevance(DatalyapError):
    pass


class DimensionMismatch(DatalyapError):
    pass


# solver
class NumericalBreakdown(DatalyapError):
    pass


class ExternalSolverFailure(DatalyapError):
    pass


class NotRegistered(DatalyapError):
    pass


# lyapunov
class NotOptimal(DatalyapError):
    pass


class ContinuityViolated(DatalyapError):
    pass


class EmptyRoa(DatalyapError):
    pass


class CoveringFailed(DatalyapError):
    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = list(uncovered)


class StageFailed(DatalyapError):
    def __init__(self, stage, reason):
        super().__init__(f"stage {stage} failed: {reason}")
        self.stage = stage
        self.reason = reason


# verify
class NumericalBlowup(DatalyapError):
    pass
