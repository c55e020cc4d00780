"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DomainError -> 3,
AccuracyError -> 4.
"""


class NetbathError(Exception):
    """Base class for all package errors."""


class ConfigError(NetbathError):
    """Invalid configuration, flags, or input file."""


class DomainError(NetbathError):
    """Requested quantity is undefined for these parameters.

    Carries optional context, e.g. the onset frequency below which the
    uniform fixed point ceases to exist.
    """

    def __init__(self, message, lambda_star=None):
        super().__init__(message)
        self.lambda_star = lambda_star


class SingularTransformError(DomainError):
    """Single-edge update hit the pole of the rational map."""


class ShapeError(NetbathError):
    """Incompatible grids or kernel metadata."""


class SizeError(NetbathError):
    """Requested structure exceeds the configured size cap."""


class AccuracyError(NetbathError):
    """Requested discretization cannot meet the stated accuracy."""


class InstabilityError(NetbathError):
    """A mode frequency left the stable (positive stiffness) region."""
