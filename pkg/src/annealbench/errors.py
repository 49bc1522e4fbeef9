"""Exception types raised across the benchmark toolkit."""


class AnnealBenchError(Exception):
    """Base class for all toolkit errors."""


class InstanceInfeasible(AnnealBenchError):
    """Requested edge count exceeds the available cross-class vertex pairs."""


class SizeTooLarge(AnnealBenchError):
    """Exhaustive routine refused because the problem is too large."""


class LengthMismatch(AnnealBenchError, ValueError):
    pass


class EmbeddingNotFound(AnnealBenchError):
    pass


class RangeViolation(AnnealBenchError, ValueError):
    """A coefficient falls outside the hardware coupling range."""


class HashMismatch(AnnealBenchError):
    """Replayed samples were recorded for a different problem."""


class FormatError(AnnealBenchError, ValueError):
    pass


class InsufficientData(AnnealBenchError, ValueError):
    pass


class InvalidPlan(AnnealBenchError, ValueError):
    pass
