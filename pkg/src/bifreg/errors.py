"""Exception hierarchy shared by the whole package.

Three broad classes map onto CLI exit codes: invalid arguments or
configuration (2), malformed or inconsistent data (3), and numerical
failures during fitting (4).
"""


class BifregError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class ValidationError(BifregError):
    """Invalid argument, configuration value, or contract violation."""

    exit_code = 2


class DataError(BifregError):
    """Malformed input data: parse failures, shape mismatches, bad files."""

    exit_code = 3


class NumericalError(BifregError):
    """Numerical failure while fitting (non-finite values, no valid cell)."""

    exit_code = 4


class GridMismatchError(ValidationError):
    """Two curves or datasets do not share the required grid."""


class DomainError(ValidationError):
    """A point lies outside the domain of a basis or grid."""


class BandwidthError(ValidationError):
    """Non-positive or otherwise unusable bandwidth."""


class ReductionError(ValidationError):
    """Invalid reduction request, e.g. more blocks than grid points."""


class EnumerationCapError(ValidationError):
    """Candidate-direction enumeration would exceed the configured cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"enumerating {required} seed tuples exceeds the cap of {cap}; "
            f"raise the cap to at least {required} to proceed"
        )
