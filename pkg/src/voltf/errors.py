"""Exception types shared across the toolkit."""


class VoltfError(Exception):
    """Base class for all toolkit errors."""


class BadHeader(VoltfError):
    """Volume header is malformed: bad dims, unknown dtype, ..."""


class SizeMismatch(VoltfError):
    """Raw byte stream length disagrees with the header."""


class DimsMismatch(VoltfError):
    """Two volumes that must share a grid do not."""


class OutOfBounds(VoltfError):
    """Sample position outside the volume domain."""


class DegenerateCamera(VoltfError):
    """Camera cannot form a view (eye == lookat, bad fov, ...)."""


class InvalidFilter(VoltfError):
    """A transfer-function filter violates its invariants.

    `field` names the offending field so callers (e.g. the HTTP
    service) can produce field-level messages.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ShapeMismatch(VoltfError):
    """Vector length does not match the network layer it feeds."""


class BadFormat(VoltfError):
    """Serialized model/sample bytes cannot be parsed."""


class UnsupportedVersion(VoltfError):
    """Serialized model declares a version this code does not read."""


class EmptyTrainingSet(VoltfError):
    """train() called with no samples."""


class TargetOutOfRange(VoltfError):
    """Training target outside [0,1], unreachable for logistic outputs."""


class WrongFilterCount(VoltfError):
    """Exactly two filters are required to build a training sample."""


class InsufficientData(VoltfError):
    """Learning-curve experiment needs at least 12 samples."""
