"""Implements a subcommand that forecasts each job's count at a target day from its own history."""

import argparse
from typing import Any, Final, NoReturn, override

from jacforecast.cli import text
from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import evalreport, tsforecast
from jacforecast.pipeline.datamodel import Dataset, Split
from jacforecast.pipeline.tsforecast import FORECASTERS, HistoryMode, SeriesTransform, ShortHistory

# Split choice that keeps every job.
_ALL_SPLITS: Final[str] = "all"

# Method parameter names and the flags that set them.
_PARAMETER_FLAGS: Final[dict[str, str]] = {
    "alpha": "--alpha",
    "alpha_d": "--alpha-d",
    "alpha_p": "--alpha-p",
    "bucket_size": "--bucket-size",
    "lags": "--lags",
    "window": "--window",
}


class ForecastTs(PipelineProgram):
    """
    Command implementation for the feature-agnostic time-series baselines.

    Attributes:
        parameters: Method parameters given on the command line.
    """

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc forecast-ts")

        self.parameters: dict[str, Any] = {}

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="forecast the count of each job at a target day using only that "
                                               "job's past counts")

        self.add_dataset_arguments(parser)
        parser.add_argument("--daily", help=f"read daily histories from FILE (default: {Artifacts.DAILY})",
                            metavar="FILE")
        parser.add_argument("--out", help=f"write predictions to FILE (default: {Artifacts.FORECASTS})",
                            metavar="FILE")
        parser.add_argument("--method", choices=tuple(FORECASTERS), default="ses",
                            help="forecasting method (default: ses)")
        parser.add_argument("--alpha", help="smoothing rate in (0, 1] (ses, croston, adida, imapa)", metavar="A",
                            type=float)
        parser.add_argument("--alpha-d", help="demand-size smoothing rate (tsb)", metavar="A", type=float)
        parser.add_argument("--alpha-p", help="demand-probability smoothing rate (tsb)", metavar="A", type=float)
        parser.add_argument("--window", help="number of trailing values averaged (window-average)", metavar="N",
                            type=int)
        parser.add_argument("--bucket-size",
                            help="aggregation bucket (adida; default: mean inter-demand interval)", metavar="N",
                            type=int)
        parser.add_argument("--lags", help="autoregression lags (ar; default: 2)", metavar="LAGS",
                            type=text.parse_int_list)
        parser.add_argument("--target-day", default=30, help="forecast the count at day N (default: 30)",
                            metavar="N", type=int)
        parser.add_argument("--history", choices=tuple(HistoryMode), default=HistoryMode.OBSERVED,
                            help="use the observed horizons or gapless daily paths as the series (default: observed)",
                            type=HistoryMode)
        parser.add_argument("--short-history", choices=tuple(ShortHistory), default=ShortHistory.SES,
                            help="forecast with ses or skip jobs whose series is too short for the method "
                                 "(default: ses)", type=ShortHistory)
        parser.add_argument("--transform", choices=tuple(SeriesTransform), default=SeriesTransform.CUMULATIVE,
                            help="forecast cumulative counts or daily increments (default: cumulative)",
                            type=SeriesTransform)
        parser.add_argument("--split", choices=(*(split.value for split in Split), _ALL_SPLITS),
                            default=Split.TEST.value, help="forecast the jobs of SPLIT (default: test)")

        return parser

    @override
    def check_option_dependencies(self) -> None:
        """Enforce relationships and mutual constraints between command-line options."""
        accepted = FORECASTERS[self.args.method].defaults

        for name, flag in _PARAMETER_FLAGS.items():
            if (value := getattr(self.args, name)) is None:
                continue

            if name not in accepted:
                self.print_error_and_exit(f"{flag} does not apply to method {self.args.method!r}")

            self.parameters[name] = value

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        dataset = self.load_dataset()

        if self.args.history is HistoryMode.DAILY:
            daily = self.load_dataset(observations=self.data_path(self.args.daily, Artifacts.DAILY), with_splits=False)
            history = Dataset(dataset.jobs, daily.observations, dataset.splits)
        else:
            history = dataset

        job_ids = self.target_jobs(dataset)
        forecast = tsforecast.forecast_corpus(
            history, self.args.method, self.args.target_day, parameters=self.parameters, history=self.args.history,
            transform=self.args.transform, short_history=self.args.short_history,
            job_ids=self.track(job_ids, total=len(job_ids), label=self.args.method), on_skip=self.report_skip,
            on_fallback=self.print_message)
        out_path = self.data_path(self.args.out, Artifacts.FORECASTS)

        self.ensure_output_directory(out_path)
        evalreport.write_predictions(out_path, forecast.predictions, on_error=self.print_error_and_exit)

        self.summary = {
            "method": self.args.method,
            "parameters": self.parameters,
            "target_day": self.args.target_day,
            "history": self.args.history.value,
            "transform": self.args.transform.value,
            "short_history": self.args.short_history.value,
            "predictions": len(forecast.predictions),
            "skipped": len(forecast.skipped),
            "fallbacks": len(forecast.fallbacks),
            "out": out_path,
        }

    def report_skip(self, message: str) -> None:
        """Report a job left without a forecast."""
        self.print_message(f"skipped {message}")

    def target_jobs(self, dataset: Dataset) -> list[str]:
        """Return the jobs of the chosen split observed at the target day, in job order."""
        observed = {o.job_id for o in dataset.observations if o.t == self.args.target_day}

        return [job_id for job_id in dataset.jobs if job_id in observed and (
                self.args.split == _ALL_SPLITS or dataset.splits.get(job_id) == Split(self.args.split))]

    @override
    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        super().validate_option_ranges()

        if self.args.target_day < 2:
            self.print_error_and_exit("--target-day must be >= 2")

        for flag, value in (("--alpha", self.args.alpha), ("--alpha-d", self.args.alpha_d),
                            ("--alpha-p", self.args.alpha_p)):
            if value is not None and not 0.0 < value <= 1.0:
                self.print_error_and_exit(f"{flag} must be in (0, 1]")

        for flag, value in (("--window", self.args.window), ("--bucket-size", self.args.bucket_size)):
            if value is not None and value < 1:
                self.print_error_and_exit(f"{flag} must be >= 1")

        if self.args.lags is not None and (not self.args.lags or min(self.args.lags) < 1):
            self.print_error_and_exit("--lags must list integers >= 1")


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return ForecastTs().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
