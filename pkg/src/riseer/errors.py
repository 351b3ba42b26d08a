"""Exception types shared across the engine."""


class RiseerError(Exception):
    """Base class for engine errors."""


class DegenerateDataset(RiseerError):
    """Too few usable records/points for the requested operation."""


class UnstableParameters(RiseerError):
    """The density-parameter sweep never saw the same cluster count three times in a row."""


class UnsplittableSegment(RiseerError):
    """A segment of one or two points cannot be split further."""


class EmptyCluster(RiseerError):
    """An indicator was requested for a cluster with no members."""


class UndefinedCV(RiseerError):
    """Coefficient of variation is undefined (zero mean)."""


class InsufficientHistory(RiseerError):
    """The snapshot series is too short for the requested window."""


class MapeUndefined(RiseerError):
    """Every actual value was zero, so MAPE cannot be computed."""


class InvalidScenario(RiseerError):
    """A synthetic scenario configuration is internally inconsistent."""


class PipelineStageError(RiseerError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
