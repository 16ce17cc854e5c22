"""Exception hierarchy.

Three top-level families map onto the CLI exit codes: configuration
problems (exit 2), data problems (exit 3) and numerical problems (exit 4).
"""


class QuadConcordError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QuadConcordError):
    """Invalid parameter or configuration value (CLI exit code 2)."""


class DataError(QuadConcordError):
    """Invalid or inconsistent input data (CLI exit code 3)."""


class ParseError(DataError):
    """Malformed input file; carries a line number where possible."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateRecordError(DataError):
    """The same (subject, time, method) cell appears more than once."""


class IncompleteSeriesError(DataError):
    """A (subject, method) series has gaps or a length mismatch."""

    def __init__(self, message, subjects=()):
        super().__init__(message)
        self.subjects = tuple(subjects)


class EstimationError(DataError):
    """Too little data to estimate the Gaussian model."""


class DegenerateLabelsError(DataError):
    """ROC input contains only one class."""


class NumericalError(QuadConcordError):
    """Numerical failure (CLI exit code 4)."""


class CholeskyError(NumericalError):
    """Matrix is not positive definite; reports the failing pivot (1-based)."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DegenerateModelError(NumericalError):
    """Sample covariance is singular or indefinite; carries its eigenvalues."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class UndefinedRateError(NumericalError):
    """A count-based estimator has an empty denominator."""


class AllMassExcludedError(NumericalError):
    """The exclusion zone swallows (almost) all probability mass or data."""


class NumericalInconsistencyError(NumericalError):
    """A computed probability falls outside [0, 1] by more than its error bound."""
