"""Exception types shared across the package."""


class PolicyTuneError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(PolicyTuneError, ValueError):
    """A vector had the wrong length for the operation."""

    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(f"{what}: expected length {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class CheckpointError(PolicyTuneError, ValueError):
    """Base class for checkpoint load/save problems."""


class CheckpointNotFoundError(CheckpointError):
    pass


class CheckpointFormatError(CheckpointError):
    """File is not a structurally valid checkpoint."""


class CheckpointVersionError(CheckpointError):
    """format_version is not one this code understands."""


class NonFiniteParameterError(CheckpointError):
    """Checkpoint contains NaN or infinite values."""


class DimensionChainError(CheckpointError):
    """Consecutive layer shapes do not chain, or bounds/normalizer disagree."""


class EpisodeFinishedError(PolicyTuneError, RuntimeError):
    """step() was called on an environment whose episode is already done."""


class RolloutNumericsError(PolicyTuneError, RuntimeError):
    """A rollout produced a non-finite observation or reward."""


class NonPositiveReturnError(PolicyTuneError, ValueError):
    """dim_ratio shaping was asked to divide a non-positive return."""


class PairEvaluationError(PolicyTuneError, RuntimeError):
    """A paired rollout failed; carries the offending pair index."""

    def __init__(self, pair_index: int, original: BaseException):
        super().__init__(f"pair {pair_index}: {original}")
        self.pair_index = pair_index
        self.original = original

    def __reduce__(self):  # keep the two-argument form picklable across workers
        return (type(self), (self.pair_index, self.original))
