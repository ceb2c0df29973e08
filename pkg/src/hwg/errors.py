"""Exception types shared across the package."""


class HWGError(Exception):
    """Base class for every error raised by hwg."""


class InvalidArgument(HWGError, ValueError):
    pass


class CapacityError(HWGError):
    """Problem size exceeds a documented desk-scale cap."""


class AmbiguityError(HWGError):
    """A geodesic is requested between points joined by several shortest paths."""

    def __init__(self, message, n_paths):
        super().__init__(message)
        self.n_paths = n_paths


class PreconditionError(HWGError):
    pass


class AdmissibilityError(HWGError):
    """A reconstructed mirror-descent signal leaves the simplex."""

    def __init__(self, message, index, min_t):
        super().__init__(message)
        self.index = index
        self.min_t = min_t


class ConsistencyError(HWGError):
    """Two routes that must agree (e.g. slow vs fast projection) disagree."""
