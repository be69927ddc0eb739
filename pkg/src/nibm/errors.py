"""Error taxonomy shared by the library and the CLI."""


class NibmError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ConfigError(NibmError):
    exit_code = 2


class GraphError(NibmError):
    exit_code = 2


class NotConnected(GraphError):
    pass


class AntiDiagonalClash(GraphError):
    pass


class ZeroRowOrColumn(GraphError):
    pass


class NonIntegerCounts(NibmError):
    exit_code = 2


class MaxIterationsExceeded(NibmError):
    exit_code = 4

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SupportSplitDetected(NibmError):
    exit_code = 3


class MissingArtifact(NibmError):
    exit_code = 5


class InsufficientResolution(NibmError):
    exit_code = 6


class OnCutWithoutSide(NibmError):
    exit_code = 6


class ContourIntersectsSupport(NibmError):
    exit_code = 6


class ResolutionTooCoarse(NibmError):
    exit_code = 6


class SingularTreeSystem(NibmError):
    exit_code = 6


class IllConditioned(NibmError):
    exit_code = 7


class QuadratureBudgetExhausted(NibmError):
    exit_code = 7


class RejectionBudgetExhausted(NibmError):
    exit_code = 8
