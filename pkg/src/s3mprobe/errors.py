"""Exception types shared across the toolkit."""


class ProbeError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ProbeError):
    """A file does not conform to its declared on-disk format."""


class TruncationError(FormatError):
    """A binary payload is shorter than its header promises."""


class DataError(ProbeError):
    """Numeric payload violates an invariant (NaN/Inf, bad shape or metadata)."""


class ValidationError(ProbeError):
    """A record is well-formed but semantically invalid."""


class ConfigurationError(ProbeError):
    """A requested run cannot be satisfied with the given inputs."""


class InsufficientDataError(ProbeError):
    """Not enough samples for the requested estimate."""


class ConditioningError(ProbeError):
    """A covariance matrix is numerically singular; retry with ridge > 0."""


class DegenerateInputError(ProbeError):
    """Input carries no usable signal (zero vector, zero total weight)."""


class UndefinedMetricError(ProbeError):
    """The metric is undefined for this input (no positive pairs, zero rank variance)."""


class OutOfRangeError(ProbeError):
    """A span or index lies outside the available frames."""


class TooShortError(ProbeError):
    """A sequence is too short for the requested operation."""
