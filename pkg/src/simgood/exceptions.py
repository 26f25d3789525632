"""Exception hierarchy.

Errors are grouped so the command line can map them onto exit codes:
``DataError`` subclasses exit with 2, ``NumericalError`` subclasses with 3,
and ``InvalidParameter`` (a usage problem) with 1.
"""


class SimGoodError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(SimGoodError, ValueError):
    pass


class InvalidK(InvalidParameter):
    pass


class DataError(SimGoodError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LabelError(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class TooSmall(DataError):
    pass


class DegenerateData(DataError):
    pass


class FormatError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VersionError(DataError):
    pass


class NumericalError(SimGoodError):
    pass


class NonSymmetric(NumericalError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


NonConvergence = NoConvergence


class DegenerateReasonableSet(UserWarning):
    """Issued when the label-weighted mean of the reasonable points vanishes.

    The goodness loss is then constant in the similarity matrix and the
    solvers return the zero matrix instead of raising.
    """
