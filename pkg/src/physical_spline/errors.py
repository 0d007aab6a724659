class PhysicalSplineError(Exception):
    """Base class for errors raised by this package."""


class UnanchoredProblemError(PhysicalSplineError, ValueError):
    """No position-type measurement: the constant (initial position) mode is free."""


class SingularSystemError(PhysicalSplineError, ArithmeticError):
    """The normal equations could not be factorised."""


class MeasurementRangeError(PhysicalSplineError, ValueError):
    """Measurements lie outside the time span covered by the grid."""


class UndefinedHeadingError(PhysicalSplineError, ValueError):
    """The heading splines are too close to the origin to define an angle."""


class TrackFormatError(PhysicalSplineError, ValueError):
    """A measurement or state CSV could not be parsed."""


class ModelFormatError(PhysicalSplineError, ValueError):
    """A model file is malformed or truncated."""


class ModelVersionError(ModelFormatError):
    """A model file declares an unsupported format version."""
