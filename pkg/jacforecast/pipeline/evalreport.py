"""Metrics (MAE, MALE), grouped evaluation reports, and prediction/series CSV files."""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Final, NamedTuple

import numpy as np

from jacforecast.cli import reporters
from jacforecast.cli.types import ErrorReporter
from . import tables
from .datamodel import Dataset, Observation
from .errors import DataError

#: Group label of the overall rows.
OVERALL_GROUP: Final[str] = "all"

#: Columns of the predictions CSV.
PREDICTION_COLUMNS: Final[tuple[str, ...]] = ("job_id", "t", "prediction")

#: Columns of the report CSV.
REPORT_COLUMNS: Final[tuple[str, ...]] = ("group_by", "group", "metric", "value", "n")

#: Columns of the plot-ready series CSV.
SERIES_COLUMNS: Final[tuple[str, ...]] = ("job_id", "t", "actual", "predicted")


class GroupBy(StrEnum):
    """Grouping of a report."""
    DAY = "day"
    JAC = "jac"
    OVERALL = "overall"


class Metric(StrEnum):
    """Reported metric."""
    MAE = "MAE"
    MALE = "MALE"


class Prediction(NamedTuple):
    """A predicted count for job ``job_id`` at day ``t``."""
    job_id: str
    t: int
    prediction: float


class ScoredPrediction(NamedTuple):
    """A prediction joined with its true label."""
    job_id: str
    t: int
    label: int
    prediction: float


class ReportRow(NamedTuple):
    """One metric over one group; ``group`` is a day, a label, or ``OVERALL_GROUP``."""
    group_by: GroupBy
    group: int | str
    metric: Metric
    value: float
    n: int


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Report rows ordered by day, then label, then the overall rows."""
    rows: tuple[ReportRow, ...]

    def value(self, group_by: GroupBy, group: int | str, metric: Metric) -> float:
        """Return the value of one row; raises ``KeyError`` when absent."""
        for row in self.rows:
            if (row.group_by, row.group, row.metric) == (group_by, group, metric):
                return row.value

        raise KeyError((group_by, group, metric))


def emit_series_csv(job_ids: Iterable[str], dataset: Dataset, predictions: Iterable[Prediction], path: str, *,
                    on_error: ErrorReporter = reporters.raises(DataError)) -> int:
    """
    Write ``job_id,t,actual,predicted`` rows for the observations of ``job_ids``, sorted by ``(job_id, t)``.

    - A missing prediction leaves the ``predicted`` cell empty.
    - Raises ``DataError`` for unknown jobs; returns the number of rows written.
    """
    wanted = set(job_ids)

    if unknown := sorted(wanted - set(dataset.jobs)):
        raise DataError(f"unknown job_id {unknown[0]!r}")

    predicted = {(p.job_id, p.t): p.prediction for p in predictions}
    observations = sorted((o for o in dataset.observations if o.job_id in wanted), key=lambda o: (o.job_id, o.t))
    rows = [(o.job_id, o.t, o.jac, _format_float(predicted[o.job_id, o.t]) if (o.job_id, o.t) in predicted else "")
            for o in observations]

    tables.write_csv(path, header=SERIES_COLUMNS, rows=rows, on_error=on_error)

    return len(rows)


def evaluate_grouped(predictions: Sequence[ScoredPrediction], group_by: GroupBy | Iterable[GroupBy]) -> EvalReport:
    """
    Return MAE and MALE rows per non-empty group, followed by the overall rows.

    - Day groups use the exact ``t``; label groups use the exact true label.
    - Rows are ordered day ascending, then label ascending, then overall.
    - Raises ``DataError`` for an empty prediction set.
    """
    if not predictions:
        raise DataError("no predictions to evaluate")

    groupings = {group_by} if isinstance(group_by, GroupBy) else set(group_by)
    rows: list[ReportRow] = []

    for grouping, key in ((GroupBy.DAY, lambda p: p.t), (GroupBy.JAC, lambda p: p.label)):
        if grouping not in groupings:
            continue

        groups: dict[int, list[ScoredPrediction]] = {}

        for prediction in predictions:
            groups.setdefault(key(prediction), []).append(prediction)

        for group in sorted(groups):
            rows.extend(_metric_rows(grouping, group, groups[group]))

    rows.extend(_metric_rows(GroupBy.OVERALL, OVERALL_GROUP, predictions))

    return EvalReport(tuple(rows))


def join_predictions(predictions: Iterable[Prediction], observations: Iterable[Observation], *,
                     on_error: ErrorReporter = reporters.raises(DataError)) -> list[ScoredPrediction]:
    """Return predictions joined with observed labels; predictions without an observation are reported and skipped."""
    labels = {(o.job_id, o.t): o.jac for o in observations}
    scored = []

    for prediction in predictions:
        label = labels.get((prediction.job_id, prediction.t))

        if label is None:
            on_error(f"no observation for job {prediction.job_id!r} at t={prediction.t}")
            continue

        scored.append(ScoredPrediction(prediction.job_id, prediction.t, label, prediction.prediction))

    return scored


def mae(predictions: Sequence[float] | np.ndarray, labels: Sequence[float] | np.ndarray) -> float:
    """Return the mean absolute error after clamping predictions at ``0``."""
    clamped, targets = _check_pair(predictions, labels)

    return float(np.mean(np.abs(clamped - targets)))


def male(predictions: Sequence[float] | np.ndarray, labels: Sequence[float] | np.ndarray) -> float:
    """Return the mean absolute label error: MAE after rounding clamped predictions half up to integer labels."""
    clamped, targets = _check_pair(predictions, labels)

    return float(np.mean(np.abs(round_half_up(clamped) - targets)))


def read_predictions(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> list[Prediction]:
    """Load a ``job_id,t,prediction`` CSV; malformed rows, non-finite values, and duplicate keys are reported."""
    predictions = []
    seen: set[tuple[str, int]] = set()

    for line_number, row in tables.iter_csv_records(path, required=PREDICTION_COLUMNS, on_error=on_error):
        try:
            key = (row["job_id"], int(row["t"]))
            value = float(row["prediction"])
        except ValueError:
            on_error(f"{path!r}: line {line_number}: malformed day or prediction")
            continue

        if not math.isfinite(value):
            on_error(f"{path!r}: line {line_number}: non-finite prediction")
        elif key in seen:
            on_error(f"{path!r}: line {line_number}: duplicate prediction for job {key[0]!r} at t={key[1]}")
        else:
            seen.add(key)
            predictions.append(Prediction(key[0], key[1], value))

    return predictions


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Return ``values`` rounded to the nearest integer, with halves rounded up."""
    return np.floor(values + 0.5)


def write_predictions(path: str, predictions: Iterable[Prediction], *,
                      on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write a ``job_id,t,prediction`` CSV; returns ``True`` on success."""
    rows = ((p.job_id, p.t, _format_float(p.prediction)) for p in predictions)

    return tables.write_csv(path, header=PREDICTION_COLUMNS, rows=rows, on_error=on_error)


def write_report(path: str, report: EvalReport, *, on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write ``report`` as CSV with values printed to three decimal places."""
    rows = ((row.group_by.value, row.group, row.metric.value, f"{row.value:.3f}", row.n) for row in report.rows)

    return tables.write_csv(path, header=REPORT_COLUMNS, rows=rows, on_error=on_error)


def _check_pair(predictions: Sequence[float] | np.ndarray,
                labels: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return clamped predictions and labels as arrays; raises ``DataError`` on empty or mismatched input."""
    predicted = np.asarray(predictions, dtype=np.float64).ravel()
    targets = np.asarray(labels, dtype=np.float64).ravel()

    if predicted.size != targets.size:
        raise DataError(f"length mismatch: {predicted.size} predictions, {targets.size} labels")

    if not predicted.size:
        raise DataError("no predictions to score")

    return np.maximum(predicted, 0.0), targets


def _format_float(value: float) -> str:
    """Return ``value`` in its shortest round-trip form."""
    return repr(float(value))


def _metric_rows(group_by: GroupBy, group: int | str, predictions: Sequence[ScoredPrediction]) -> list[ReportRow]:
    """Return the MAE and MALE rows of one group."""
    predicted = [p.prediction for p in predictions]
    labels = [p.label for p in predictions]

    return [
        ReportRow(group_by, group, Metric.MAE, mae(predicted, labels), len(predictions)),
        ReportRow(group_by, group, Metric.MALE, male(predicted, labels), len(predictions)),
    ]


__all__: Final[tuple[str, ...]] = (
    "EvalReport",
    "GroupBy",
    "Metric",
    "OVERALL_GROUP",
    "PREDICTION_COLUMNS",
    "Prediction",
    "REPORT_COLUMNS",
    "ReportRow",
    "SERIES_COLUMNS",
    "ScoredPrediction",
    "emit_series_csv",
    "evaluate_grouped",
    "join_predictions",
    "mae",
    "male",
    "read_predictions",
    "round_half_up",
    "write_predictions",
    "write_report",
)
