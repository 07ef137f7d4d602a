"""Exception taxonomy shared across the toolkit.

Errors are grouped by the CLI exit code they map to: I/O problems (exit 2),
content validation failures (exit 3), and degenerate-data conditions (exit 4).
"""


class DsaDetectError(Exception):
    """Base class for all toolkit errors."""


# --- I/O (exit code 2) ---------------------------------------------------


class IoError(DsaDetectError):
    """File missing, unreadable, or unwritable."""


class MissingFileError(IoError):
    """A referenced input file does not exist."""


# --- validation (exit code 3) --------------------------------------------


class ValidationError(DsaDetectError):
    """Input content violates a structural contract."""


class TraceFormatError(ValidationError):
    """A trace or label file does not conform to its binary/CSV format."""


class BadMagicError(TraceFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(TraceFormatError):
    """File carries a format version this build cannot read."""


class TruncatedPayloadError(TraceFormatError):
    """File ends before the header-declared payload is complete."""


class DimensionMismatchError(ValidationError):
    """Array shapes are inconsistent (ragged rows, wrong width, zero size)."""


class NonFiniteValueError(ValidationError):
    """A NaN or infinity was found where only finite values are admitted."""


class CountMismatchError(ValidationError):
    """Sample counts of two aligned inputs disagree."""


class LabelRangeError(ValidationError):
    """A class label falls outside [0, n_classes)."""


class ZeroDenominatorError(ValidationError):
    """Strict score policy hit a zero same-to-other-class distance."""


class TrainingDivergedError(ValidationError):
    """Demo network training produced a non-finite loss."""


class UnknownTapError(ValidationError):
    """A requested activation tap name does not exist on the network."""


# --- degenerate data (exit code 4) ----------------------------------------


class DegenerateDataError(DsaDetectError):
    """The data cannot support the requested computation."""


class EmptyClassError(DegenerateDataError):
    """A class has no eligible member rows."""


class EmptyComplementError(DegenerateDataError):
    """No training rows exist outside the queried class."""


class EmptyNeighborhoodError(DegenerateDataError):
    """A radius neighborhood contains no rows (anchor excluded by config)."""


class NoCornerCasesError(DegenerateDataError):
    """The evaluated set contains no corner-case samples."""


class DegenerateLabelsError(DegenerateDataError):
    """ROC needs at least one corner and one normal sample."""
