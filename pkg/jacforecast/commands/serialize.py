"""Implements a subcommand that casts every modality of a job to text for language-model fine-tuning."""

import argparse
import os
from typing import NoReturn, override

from jacforecast.cli.pipeline_program import PipelineProgram
from jacforecast.pipeline import lmserialize


class Serialize(PipelineProgram):
    """Command implementation for exporting the per-split LM datasets and their manifest."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc serialize")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="write one paragraph per observation into "
                                               f"{lmserialize.LM_DATASET_PATTERN.format(split='SPLIT')} files")

        self.add_dataset_arguments(parser)
        parser.add_argument("--out-dir", help="write the LM dataset into DIR (default: --data-dir)", metavar="DIR")
        parser.add_argument("--include-day", action="store_true",
                            help="add the days-posted sentence (for joint training)")

        return parser

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        dataset = self.load_dataset()
        directory = self.args.out_dir or self.args.data_dir

        self.ensure_output_directory(os.path.join(directory, lmserialize.LM_MANIFEST_NAME))
        counts = lmserialize.export_lm_dataset(dataset, lmserialize.TemplateConfig(), directory,
                                               include_day=self.args.include_day, on_error=self.print_error_and_exit)

        for split, count in counts.items():
            self.print_message(f"{split.value}: {count} records")

        self.summary = {
            "counts": {split.value: count for split, count in counts.items()},
            "include_day": self.args.include_day,
            "template_version": lmserialize.TEMPLATE_VERSION,
            "out": directory,
        }


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Serialize().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
