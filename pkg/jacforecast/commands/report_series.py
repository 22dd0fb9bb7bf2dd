"""Implements a subcommand that writes plot-ready actual and predicted counts for selected jobs."""

import argparse
from typing import NoReturn, override

from jacforecast.cli import text
from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import evalreport
from jacforecast.pipeline.datamodel import Split


class ReportSeries(PipelineProgram):
    """Command implementation for emitting the ``job_id,t,actual,predicted`` series CSV."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc report-series")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="write actual and predicted counts of selected jobs for plotting")

        self.add_dataset_arguments(parser)
        parser.add_argument("--pred", help=f"read predictions from FILE (default: {Artifacts.PREDICTIONS})",
                            metavar="FILE")
        parser.add_argument("--job-ids", help="comma-separated jobs to emit (default: the first --limit jobs of "
                                              "--split)", metavar="IDS", type=text.split_list)
        parser.add_argument("--split", choices=tuple(split.value for split in Split), default=Split.TEST.value,
                            help="choose jobs from SPLIT when --job-ids is not given (default: test)")
        parser.add_argument("--limit", default=10, help="number of jobs chosen from --split (default: 10)",
                            metavar="N", type=int)
        parser.add_argument("--out", help=f"write the series to FILE (default: {Artifacts.SERIES})", metavar="FILE")

        return parser

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        dataset = self.load_dataset(with_splits=self.args.job_ids is None)
        predictions = evalreport.read_predictions(self.data_path(self.args.pred, Artifacts.PREDICTIONS),
                                                  on_error=self.print_error)
        self.exit_if_errors()

        if self.args.job_ids is None:
            job_ids = sorted(job.job_id for job in dataset.jobs_in(Split(self.args.split)))[:self.args.limit]
        else:
            job_ids = self.args.job_ids

        out_path = self.data_path(self.args.out, Artifacts.SERIES)
        self.ensure_output_directory(out_path)
        rows = evalreport.emit_series_csv(job_ids, dataset, predictions, out_path, on_error=self.print_error_and_exit)

        self.summary = {
            "jobs": len(set(job_ids)),
            "rows": rows,
            "out": out_path,
        }

    @override
    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        super().validate_option_ranges()

        if self.args.limit < 0:
            self.print_error_and_exit("--limit must be >= 0")


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return ReportSeries().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
