"""Exception types raised across the package."""


class HtsError(Exception):
    """Base class for all package-specific errors."""


class DataParseError(HtsError):
    """A CSV cell could not be parsed, or an observation is missing."""


class RaggedDataError(HtsError):
    """Bottom series do not all share the same length."""


class SchemaError(HtsError):
    """Group schema is malformed or does not match the data."""


class UndefinedScaleError(HtsError):
    """MASE denominator is zero (constant training series)."""


class SingularReconciliationError(HtsError):
    """The GLS reconciliation system is singular."""


class ConfigError(HtsError):
    """Experiment configuration is invalid."""
