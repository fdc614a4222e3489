"""Exception and warning types shared across the package."""


class WarpscoreError(Exception):
    """Base class for all errors raised by this package."""


class LengthMismatch(WarpscoreError):
    """Two series (or a series and an envelope) differ in length where equal length is required."""


class DimensionMismatch(WarpscoreError):
    """Two samples or series differ in variable count."""


class InfeasibleBand(WarpscoreError):
    """A global path constraint excludes every warping path for the given lengths."""


class EmptyCluster(WarpscoreError):
    """A prototype was requested for an empty collection of series."""


class EmptySet(WarpscoreError):
    """An envelope combination was requested for an empty collection of envelopes."""


class NonFiniteObjective(WarpscoreError):
    """Barycenter descent produced a non-finite objective even after step halving."""


class EmptyTrainingSet(WarpscoreError):
    """A classifier was queried with no training examples."""


class MissingPrototype(WarpscoreError):
    """Nearest-centroid classification is missing a prototype for some label."""


class DegenerateFold(WarpscoreError):
    """A cross-validation fold lacks a label required to build per-label prototypes."""


class SingletonOnly(WarpscoreError):
    """A validity index is undefined because every cluster is a singleton."""


class InsufficientData(WarpscoreError):
    """A dataset cannot satisfy a requested participant/skill layout."""

    def __init__(self, missing_skill, message=None):
        self.missing_skill = missing_skill
        super().__init__(message or f"not enough eligible participants with skill {missing_skill!r}")


class TooShort(WarpscoreError):
    """A partial series is too short for phase estimation."""


class NonFiniteSample(WarpscoreError):
    """A streamed sample contains NaN or infinity."""


class InvalidWeight(WarpscoreError):
    """A blending weight is outside the open interval (0, 1)."""


class SeriesTooLong(WarpscoreError):
    """Full cost matrices were requested for series whose product of lengths exceeds the cap."""


class ParseError(WarpscoreError):
    """A recording or manifest file failed to parse."""

    def __init__(self, path, line, column, reason):
        self.path = str(path)
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"{self.path}:{line}:{column}: {reason}")


class ValidationError(WarpscoreError):
    """A parsed file violates a dataset invariant (labels, shapes, finiteness)."""


class ConstantChannelWarning(UserWarning):
    """A variable had zero variance; its normalized channel was set to all zeros."""
