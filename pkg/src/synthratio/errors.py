"""Exception hierarchy shared across the package.

Two broad families matter to callers (and to the CLI exit-code mapping):
``InputError`` for anything wrong with user-supplied data, and
``NumericError`` for failures of the numerical routines themselves.
"""


class SynthRatioError(Exception):
    """Base class for all package errors."""


class InputError(SynthRatioError):
    """Invalid user input: files, schemas, labels, missing values."""


class ParseError(InputError):
    """Malformed CSV content (ragged rows, failed numeric parse, empty file)."""


class SchemaError(InputError):
    """Two tables that should share a schema do not."""


class MissingValueError(InputError):
    """A missing cell was consumed by an operation that requires complete data."""


class UnseenLabelError(InputError):
    """A categorical label absent from the reference table was encountered."""


class NumericError(SynthRatioError):
    """Numerical failure: singular systems, degenerate statistics."""


class RankDeficientError(NumericError):
    """Design matrix is rank deficient after zero-variance pruning."""


class DegenerateNullError(NumericError):
    """A resampled null expectation collapsed to zero."""


class UninformativeFitError(NumericError):
    """All importance weights were truncated to zero."""
