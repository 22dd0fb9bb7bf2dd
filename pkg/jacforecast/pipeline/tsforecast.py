"""
Feature-agnostic time-series baselines over per-job count series.

Level methods (SES, the Croston family, TSB, ADIDA, IMAPA, window average) return flat forecasts; the
autoregressive method forecasts recursively. Every forecaster is a pure function of its series and parameters.
"""

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import partial
from types import MappingProxyType
from typing import Any, Final, NamedTuple

import numpy as np

from jacforecast.cli.types import ErrorReporter
from .datamodel import Dataset, Observation
from .errors import ConfigError, ForecastError, ShortSeriesError
from .evalreport import Prediction

#: Smoothing grid searched by the optimized Croston variant.
CROSTON_ALPHA_GRID: Final[tuple[float, ...]] = tuple(round(0.05 * step, 2) for step in range(1, 20))

type SeriesLike = Sequence[float] | np.ndarray


class CrostonVariant(StrEnum):
    """Croston estimators."""
    CLASSIC = "classic"
    SBA = "sba"
    OPTIMIZED = "optimized"


class HistoryMode(StrEnum):
    """How a job's history before the target day becomes a series."""
    DAILY = "daily"
    OBSERVED = "observed"


class SeriesTransform(StrEnum):
    """Whether cumulative counts or their daily increments are forecast."""
    CUMULATIVE = "cumulative"
    INCREMENTS = "increments"


class ShortHistory(StrEnum):
    """What happens to a job whose series is too short for the method."""
    SKIP = "skip"
    SES = "ses"


@dataclass(frozen=True, slots=True)
class CountSeries:
    """Ordered non-negative counts of one job with no missing interior periods."""
    job_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        """Enforce a non-empty, finite, non-negative series."""
        _as_values(self.values)


@dataclass(frozen=True, slots=True)
class Forecast:
    """
    Per-step predictions for ``horizon`` steps.

    Attributes:
        horizon: Number of steps ahead.
        values: Prediction per step (all equal for level methods).
        method: Method name.
        parameters: Parameters actually used.
    """
    horizon: int
    values: tuple[float, ...]
    method: str
    parameters: Mapping[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> float:
        """Return the prediction ``horizon`` steps ahead."""
        return self.values[-1]


class ArFit(NamedTuple):
    """Intercept and one coefficient per lag of a fitted autoregression."""
    intercept: float
    coefficients: tuple[float, ...]
    lags: tuple[int, ...]

    def predict(self, history: Sequence[float]) -> float:
        """Return the next value after ``history``."""
        return self.intercept + sum(phi * history[-lag] for phi, lag in zip(self.coefficients, self.lags))


class JobSeries(NamedTuple):
    """A job's history series, the steps to the target day, and its last cumulative count."""
    series: CountSeries
    horizon: int
    last_value: float


class ForecastMethod(NamedTuple):
    """A registered forecaster with its default parameters."""
    function: Callable[..., Forecast]
    defaults: Mapping[str, Any]


class CorpusForecast(NamedTuple):
    """Clamped per-job predictions at the target day, the jobs that were skipped, and those forecast with SES."""
    predictions: tuple[Prediction, ...]
    skipped: tuple[str, ...]
    fallbacks: tuple[str, ...] = ()


def adida(series: SeriesLike, bucket_size: int | None = None, alpha: float = 0.1, h: int = 1) -> Forecast:
    """
    Return the aggregate-disaggregate forecast.

    - The series is summed into non-overlapping buckets of ``bucket_size`` (the oldest remainder is dropped),
      smoothed with SES, and the bucket forecast is divided by ``bucket_size``.
    - ``bucket_size=None`` uses the mean inter-demand interval, rounded (``1`` when there is no demand).
    - Raises ``ForecastError`` when the series is shorter than one bucket.
    """
    values = _as_values(series)
    size = aggregation_level(values) if bucket_size is None else bucket_size

    if size < 1:
        raise ForecastError("bucket_size must be >= 1")

    if values.size < size:
        raise ShortSeriesError(f"series of length {values.size} is shorter than one bucket of {size}")

    buckets = values[values.size % size:].reshape(-1, size).sum(axis=1)
    level = _ses_level(buckets, _check_alpha(alpha, "alpha")) / size

    return _flat(level, h, "adida", bucket_size=size, alpha=alpha)


def aggregation_level(series: SeriesLike) -> int:
    """Return the mean inter-demand interval rounded half up, capped at the series length (``1`` without demand)."""
    values = _as_values(series)
    intervals = _demand_intervals(values)

    if not intervals.size:
        return 1

    return int(min(values.size, max(1, math.floor(intervals.mean() + 0.5))))


def autoregressive(series: SeriesLike, lags: Sequence[int] = (2,), h: int = 1) -> Forecast:
    """Return a recursive ``h``-step forecast from an autoregression fitted by least squares."""
    values = _as_values(series)
    fit = fit_autoregression(values, lags)
    history = list(values)
    forecasts = []

    for _ in range(_check_horizon(h)):
        history.append(fit.predict(history))
        forecasts.append(history[-1])

    return Forecast(h, tuple(forecasts), "ar", {"lags": list(fit.lags), "intercept": fit.intercept,
                                                "coefficients": list(fit.coefficients)})


def build_series(job_id: str, observations: Iterable[Observation], target_day: int,
                 history: HistoryMode = HistoryMode.OBSERVED,
                 transform: SeriesTransform = SeriesTransform.CUMULATIVE) -> JobSeries:
    """
    Return the history of one job before ``target_day``.

    - ``DAILY``: days ``1..k`` must all be present; the horizon is ``target_day - k``.
    - ``OBSERVED``: observed days are taken as consecutive steps; the horizon is ``1``.
    - ``INCREMENTS`` forecasts per-step increases instead of cumulative counts.
    - Raises ``ForecastError`` when there is no history or a daily history has a gap.
    """
    past = sorted((o for o in observations if o.job_id == job_id and o.t < target_day), key=lambda o: o.t)

    if not past:
        raise ForecastError(f"job {job_id!r}: no history before day {target_day}")

    if history is HistoryMode.DAILY:
        for expected, observation in enumerate(past, start=1):
            if observation.t != expected:
                raise ForecastError(f"job {job_id!r}: gap in daily history (missing day {expected})")

        horizon = target_day - past[-1].t
    else:
        horizon = 1

    cumulative = np.array([o.jac for o in past], dtype=np.float64)
    values = np.diff(cumulative, prepend=0.0) if transform is SeriesTransform.INCREMENTS else cumulative

    return JobSeries(CountSeries(job_id, values), horizon, float(cumulative[-1]))


def croston(series: SeriesLike, alpha: float = 0.1, variant: CrostonVariant | str = CrostonVariant.CLASSIC,
            h: int = 1) -> Forecast:
    """
    Return Croston's demand-rate forecast: smoothed demand size over smoothed inter-demand interval.

    - Sizes and intervals are smoothed with SES from their first values; the first interval is the 1-based index
      of the first demand. A series without demand forecasts ``0``.
    - ``SBA`` multiplies the classic forecast by ``1 - alpha / 2``.
    - ``OPTIMIZED`` ignores ``alpha`` and picks the grid value minimizing the in-sample one-step squared error
      (ties go to the smaller value).
    """
    values = _as_values(series)
    variant = CrostonVariant(variant)

    if variant is CrostonVariant.OPTIMIZED:
        alpha = min(CROSTON_ALPHA_GRID, key=lambda candidate: (_croston_in_sample_error(values, candidate), candidate))
    else:
        _check_alpha(alpha, "alpha")

    level = _croston_level(values, alpha)

    if variant is CrostonVariant.SBA:
        level *= 1.0 - alpha / 2.0

    return _flat(level, h, f"croston-{variant.value}", alpha=alpha)


def fit_autoregression(series: SeriesLike, lags: Sequence[int]) -> ArFit:
    """
    Fit ``y_t = c + sum_j phi_j * y_{t - lag_j}`` by ordinary least squares over every valid ``t``.

    - Singular systems take the least-norm solution.
    - Raises ``ForecastError`` unless the series is longer than ``max(lags) + 1``.
    """
    values = _as_values(series)
    lags = tuple(int(lag) for lag in lags)

    if not lags or any(lag < 1 for lag in lags) or len(set(lags)) != len(lags):
        raise ForecastError("lags must be unique integers >= 1")

    max_lag = max(lags)

    if values.size <= max_lag + 1:
        raise ShortSeriesError(f"too few observations ({values.size}) for lags {list(lags)}: "
                               f"need more than {max_lag + 1}")

    rows = range(max_lag, values.size)
    design = np.array([[1.0, *(values[t - lag] for lag in lags)] for t in rows])
    solution, *_ = np.linalg.lstsq(design, values[max_lag:], rcond=None)

    return ArFit(float(solution[0]), tuple(float(phi) for phi in solution[1:]), lags)


def forecast_corpus(dataset: Dataset, method: str, target_day: int, *, parameters: Mapping[str, Any] | None = None,
                    history: HistoryMode = HistoryMode.OBSERVED,
                    transform: SeriesTransform = SeriesTransform.CUMULATIVE,
                    short_history: ShortHistory = ShortHistory.SKIP, job_ids: Iterable[str] | None = None,
                    on_skip: ErrorReporter, on_fallback: ErrorReporter | None = None,
                    on_job: Callable[[str], None] | None = None) -> CorpusForecast:
    """
    Forecast the count at ``target_day`` for each job from its own history only.

    - Predictions are clamped at ``0``; jobs whose history is missing or unusable are reported through ``on_skip``
      and skipped.
    - A series too short for the method is skipped too, unless ``short_history`` is ``SES``: the job is then
      forecast with ``ses`` at its default rate and reported through ``on_fallback``.
    - ``job_ids`` restricts and orders the jobs (default: every job, in load order).
    """
    by_job: dict[str, list[Observation]] = {}

    for observation in dataset.observations:
        by_job.setdefault(observation.job_id, []).append(observation)

    predictions, skipped, fallbacks = [], [], []

    for job_id in (job_ids if job_ids is not None else dataset.jobs):
        try:
            job_series = build_series(job_id, by_job.get(job_id, ()), target_day, history, transform)

            try:
                forecast = run_forecaster(method, job_series.series.values, job_series.horizon, parameters)
            except ShortSeriesError as error:
                if short_history is ShortHistory.SKIP:
                    raise

                forecast = run_forecaster("ses", job_series.series.values, job_series.horizon)
                fallbacks.append(job_id)

                if on_fallback:
                    on_fallback(f"{_job_message(job_id, error)}; forecast with ses instead")
        except ForecastError as error:
            on_skip(_job_message(job_id, error))
            skipped.append(job_id)
        else:
            if transform is SeriesTransform.INCREMENTS:
                value = job_series.last_value + sum(forecast.values)
            else:
                value = forecast.final

            predictions.append(Prediction(job_id, target_day, max(0.0, value)))

        if on_job:
            on_job(job_id)

    return CorpusForecast(tuple(predictions), tuple(skipped), tuple(fallbacks))


def imapa(series: SeriesLike, alpha: float = 0.1, h: int = 1) -> Forecast:
    """Return the mean of the ADIDA forecasts at every aggregation level ``1..max(1, T // 2)``."""
    values = _as_values(series)
    levels = range(1, max(1, values.size // 2) + 1)
    level = float(np.mean([adida(values, size, alpha).final for size in levels]))

    return _flat(level, h, "imapa", alpha=alpha, levels=len(levels))


def run_forecaster(method: str, series: SeriesLike, h: int, parameters: Mapping[str, Any] | None = None) -> Forecast:
    """Run a registered method with its defaults overridden by ``parameters`` (``None`` values keep the default)."""
    try:
        registered = FORECASTERS[method]
    except KeyError:
        raise ConfigError(f"unknown forecasting method: {method!r}") from None

    overrides = {key: value for key, value in (parameters or {}).items() if value is not None}

    if unknown := sorted(set(overrides) - set(registered.defaults)):
        raise ConfigError(f"method {method!r} does not take: {', '.join(unknown)}")

    return registered.function(series, h=h, **{**registered.defaults, **overrides})


def ses(series: SeriesLike, alpha: float = 0.5, h: int = 1) -> Forecast:
    """Return the simple exponential smoothing forecast; the level starts at the first value."""
    return _flat(_ses_level(_as_values(series), _check_alpha(alpha, "alpha")), h, "ses", alpha=alpha)


def tsb(series: SeriesLike, alpha_d: float = 0.3, alpha_p: float = 0.2, h: int = 1) -> Forecast:
    """
    Return the Teunter-Syntetos-Babai forecast: demand probability times demand size.

    - The probability starts at the first occurrence flag and is smoothed every period.
    - The size starts at the first nonzero value (``0`` without demand) and is smoothed on demand periods only.
    """
    values = _as_values(series)
    _check_alpha(alpha_d, "alpha_d")
    _check_alpha(alpha_p, "alpha_p")
    occurrences = (values > 0).astype(np.float64)
    probability = occurrences[0]
    size = float(values[values > 0][0]) if occurrences.any() else 0.0

    for index, value in enumerate(values):
        if index:
            probability = alpha_p * occurrences[index] + (1.0 - alpha_p) * probability

        if value > 0:
            size = alpha_d * value + (1.0 - alpha_d) * size

    return _flat(probability * size, h, "tsb", alpha_d=alpha_d, alpha_p=alpha_p)


def window_average(series: SeriesLike, window: int = 3, h: int = 1) -> Forecast:
    """Return the mean of the last ``window`` values; raises ``ForecastError`` for a shorter series."""
    values = _as_values(series)

    if window < 1:
        raise ForecastError("window must be >= 1")

    if values.size < window:
        raise ShortSeriesError(f"series of length {values.size} is shorter than the window of {window}")

    return _flat(float(values[-window:].mean()), h, "window-average", window=window)


def _as_values(series: SeriesLike) -> np.ndarray:
    """Return ``series`` as a float array; raises ``ForecastError`` when empty, non-finite, or negative."""
    values = np.asarray(series, dtype=np.float64).reshape(-1)

    if not values.size:
        raise ForecastError("empty series")

    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ForecastError("series values must be finite and non-negative")

    return values


def _check_alpha(alpha: float, name: str) -> float:
    """Return ``alpha`` when it lies in ``(0, 1]``; raises ``ForecastError`` otherwise."""
    if not 0.0 < alpha <= 1.0:
        raise ForecastError(f"{name} must be in (0, 1]")

    return alpha


def _check_horizon(h: int) -> int:
    """Return ``h`` when it is at least ``1``; raises ``ForecastError`` otherwise."""
    if h < 1:
        raise ForecastError("horizon must be >= 1")

    return h


def _croston_in_sample_error(values: np.ndarray, alpha: float) -> float:
    """Return the squared one-step error of the classic forecasts made after each prefix (``0`` before any demand)."""
    size = interval = None
    periods_since_demand = 0
    error = 0.0

    for index, value in enumerate(values):
        if index:
            forecast = size / interval if size is not None else 0.0
            error += (value - forecast) ** 2

        periods_since_demand += 1

        if value > 0:
            size = value if size is None else alpha * value + (1.0 - alpha) * size
            interval = periods_since_demand if interval is None else (
                alpha * periods_since_demand + (1.0 - alpha) * interval)
            periods_since_demand = 0

    return error


def _croston_level(values: np.ndarray, alpha: float) -> float:
    """Return the classic Croston demand rate."""
    demand_sizes = values[values > 0]

    if not demand_sizes.size:
        return 0.0

    return _ses_level(demand_sizes, alpha) / _ses_level(_demand_intervals(values), alpha)


def _demand_intervals(values: np.ndarray) -> np.ndarray:
    """Return inter-demand intervals; the first is the 1-based index of the first demand."""
    return np.diff(np.flatnonzero(values > 0) + 1, prepend=0).astype(np.float64)


def _flat(level: float, h: int, method: str, **parameters: Any) -> Forecast:
    """Return a flat ``h``-step forecast."""
    return Forecast(_check_horizon(h), (float(level),) * h, method, parameters)


def _job_message(job_id: str, error: ForecastError) -> str:
    """Return ``error`` as a message about ``job_id``."""
    return str(error) if str(error).startswith("job ") else f"job {job_id!r}: {error}"


def _ses_level(values: np.ndarray, alpha: float) -> float:
    """Return the final SES level of ``values``."""
    level = float(values[0])

    for value in values[1:]:
        level = alpha * float(value) + (1.0 - alpha) * level

    return level


#: Registered methods with their default parameters.
FORECASTERS: Final[Mapping[str, ForecastMethod]] = MappingProxyType({
    "ses": ForecastMethod(ses, {"alpha": 0.5}),
    "croston": ForecastMethod(partial(croston, variant=CrostonVariant.CLASSIC), {"alpha": 0.1}),
    "croston-sba": ForecastMethod(partial(croston, variant=CrostonVariant.SBA), {"alpha": 0.1}),
    "croston-optimized": ForecastMethod(partial(croston, variant=CrostonVariant.OPTIMIZED), {"alpha": 0.1}),
    "tsb": ForecastMethod(tsb, {"alpha_d": 0.3, "alpha_p": 0.2}),
    "adida": ForecastMethod(adida, {"bucket_size": None, "alpha": 0.1}),
    "imapa": ForecastMethod(imapa, {"alpha": 0.1}),
    "window-average": ForecastMethod(window_average, {"window": 3}),
    "ar": ForecastMethod(autoregressive, {"lags": (2,)}),
})

__all__: Final[tuple[str, ...]] = (
    "ArFit",
    "CROSTON_ALPHA_GRID",
    "CorpusForecast",
    "CountSeries",
    "CrostonVariant",
    "FORECASTERS",
    "Forecast",
    "ForecastMethod",
    "HistoryMode",
    "JobSeries",
    "SeriesTransform",
    "ShortHistory",
    "adida",
    "aggregation_level",
    "autoregressive",
    "build_series",
    "croston",
    "fit_autoregression",
    "forecast_corpus",
    "imapa",
    "run_forecaster",
    "ses",
    "tsb",
    "window_average",
)
