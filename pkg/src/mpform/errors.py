"""Exception hierarchy shared by all modules."""


class MpformError(Exception):
    """Base class for every error raised by the package."""


# problem
class NonFiniteCoefficient(MpformError):
    pass


class ShapeMismatch(MpformError):
    pass


class RankDeficient(MpformError):
    pass


class MissingDerivative(MpformError):
    pass


class NonCoercive(MpformError):
    pass


class AssumptionViolation(MpformError):
    """Raised by :meth:`ValidationReport.raise_if_failed`."""


# discretize
class InvalidSize(MpformError):
    pass


class ConstraintInconsistent(MpformError):
    pass


class SingularWeight(MpformError):
    pass


# evolve
class SingularSystem(MpformError):
    pass


class GridMisaligned(MpformError):
    pass


# opsandbox
class SingularGram(MpformError):
    pass


class NotSelfAdjoint(MpformError):
    pass


class NotPositive(MpformError):
    pass


class IntegratorFailure(MpformError):
    pass


# analysis
class IncompatibleBoundary(MpformError):
    pass


# cli
class UnknownPreset(MpformError):
    pass


class ParseError(MpformError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SemanticError(MpformError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
