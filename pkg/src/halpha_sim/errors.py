"""Shared exception types."""


class ConfigurationError(ValueError):
    """Raised for invalid simulation parameters."""


class DataError(ValueError):
    """Raised for structurally inconsistent simulation output data."""
