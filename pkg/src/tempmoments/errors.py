"""Exception hierarchy.

Input/format problems derive from :class:`InputError`; everything else is a
computational failure. The command line maps the two groups to exit codes 2
and 1 respectively.
"""


class TempMomentsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TempMomentsError, ValueError):
    """Invalid arguments or malformed input data."""


class FormatError(InputError):
    """A file does not follow the expected layout.

    Parameters
    ----------
    path : str
        Offending file.
    line : int, optional
        1-based line number, when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class SupportError(InputError):
    """Data outside the support of a distribution (e.g. non-positive moments)."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ParameterError(InputError):
    """Invalid distribution parameters (e.g. covariance not positive definite)."""


class ComputationError(TempMomentsError):
    """Base class for numerical failures."""


class DegenerateSignalError(ComputationError):
    """All-zero signal, so log moments are undefined."""


class NumericalInconsistencyError(ComputationError):
    """Moments violate m0*m2 >= m1**2 beyond round-off."""


class DegenerateDataError(ComputationError):
    """Rank-deficient sample covariance."""

    def __init__(self, message, min_eigenvalue=None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


class FitFailureError(ComputationError):
    """Iterative estimator did not converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class SingularInformationError(ComputationError):
    """Fisher information matrix cannot be inverted."""


class UndefinedCorrelationError(ComputationError):
    """Pearson correlation of a constant sample."""


class ModelInconsistencyError(ComputationError):
    """Too many simulated rows violate the standardized-moment domain."""


class EmptyComparisonError(ComputationError):
    """No candidate family could be fitted to the data."""


class RealizationError(TempMomentsError):
    """Wraps a per-realization failure with its index in a batch."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"realization {index}: {cause}")
