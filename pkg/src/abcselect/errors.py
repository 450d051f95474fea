"""Shared exception types."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the distribution's or model's domain."""


class ShapeError(ValueError):
    """Input arrays have incompatible shapes or lengths."""


class InsufficientSampleError(ValueError):
    """Too few observations for the requested estimator."""


class DegenerateNormalizationError(ValueError):
    """A normalizing quantity (max, MAD, bandwidth) is zero."""


class PolicyError(ValueError):
    """A threshold policy cannot be satisfied by the run."""


class ConfigError(ValueError):
    """An experiment configuration is malformed."""
