"""Implements a subcommand that scores predictions with MAE and MALE, per day, per count, and overall."""

import argparse
from typing import NoReturn, override

from jacforecast.cli import text
from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import datamodel, evalreport
from jacforecast.pipeline.evalreport import GroupBy, Metric


class Evaluate(PipelineProgram):
    """Command implementation for writing the grouped evaluation report."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc evaluate")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="score predictions against observed counts")

        parser.add_argument("--obs", help=f"read observations from FILE (default: {Artifacts.OBSERVATIONS})",
                            metavar="FILE")
        parser.add_argument("--pred", help=f"read predictions from FILE (default: {Artifacts.PREDICTIONS})",
                            metavar="FILE")
        parser.add_argument("--group-by", default=(GroupBy.DAY,),
                            help="comma-separated groupings among day, jac, and overall (default: day)",
                            metavar="GROUPS", type=_parse_groupings)
        parser.add_argument("--out", help=f"write the report to FILE (default: {Artifacts.REPORT})", metavar="FILE")

        return parser

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        observations = datamodel.load_observations(self.data_path(self.args.obs, Artifacts.OBSERVATIONS),
                                                   on_error=self.print_error)
        predictions = evalreport.read_predictions(self.data_path(self.args.pred, Artifacts.PREDICTIONS),
                                                  on_error=self.print_error)
        self.exit_if_errors()

        scored = evalreport.join_predictions(predictions, observations, on_error=self.print_error)
        self.exit_if_errors()

        report = evalreport.evaluate_grouped(scored, self.args.group_by)
        out_path = self.data_path(self.args.out, Artifacts.REPORT)

        self.ensure_output_directory(out_path)
        evalreport.write_report(out_path, report, on_error=self.print_error_and_exit)

        for row in report.rows:
            self.print_message(f"{row.group_by.value} {row.group} {row.metric.value} {row.value:.3f} "
                               f"(n={row.n})")

        self.summary = {
            "predictions": len(scored),
            "rows": len(report.rows),
            "mae": report.value(GroupBy.OVERALL, evalreport.OVERALL_GROUP, Metric.MAE),
            "male": report.value(GroupBy.OVERALL, evalreport.OVERALL_GROUP, Metric.MALE),
            "out": out_path,
        }


def _parse_groupings(value: str) -> tuple[GroupBy, ...]:
    """Return the groupings named in a comma-separated list; raises ``ValueError`` for unknown names."""
    groupings = tuple(GroupBy(name) for name in text.split_list(value))

    if not groupings:
        raise ValueError(f"no groupings: {value!r}")

    return groupings


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Evaluate().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
