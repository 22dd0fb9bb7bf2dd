"""Exception hierarchy raised by the forecasting pipeline."""

from typing import Final


class JacForecastError(ValueError):
    """Base class for every error raised by the pipeline."""


class ConfigError(JacForecastError):
    """A configuration object violates its invariants."""


class DataError(JacForecastError):
    """Input data is malformed, violates an invariant, or references unknown records."""


class ForecastError(JacForecastError):
    """A series does not meet the preconditions of a forecasting method."""


class ModelError(JacForecastError):
    """A model, feature matrix, or gradient set has mismatched dimensions or cannot be read."""


class ShortSeriesError(ForecastError):
    """A series has fewer values than a forecasting method needs."""


__all__: Final[tuple[str, ...]] = (
    "ConfigError",
    "DataError",
    "ForecastError",
    "JacForecastError",
    "ModelError",
    "ShortSeriesError",
)
