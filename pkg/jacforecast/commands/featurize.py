"""Implements a subcommand that fuses per-modality embeddings into a feature matrix."""

import argparse
import os
from typing import NoReturn, override

from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import datamodel, featfusion, mlptrain
from jacforecast.pipeline.datamodel import SkillEmbeddingTable, Split


class Featurize(PipelineProgram):
    """Command implementation for writing the fused feature matrix and the fitted fusion configuration."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc featurize")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="fuse text, categorical, skill, location, and numeric embeddings "
                                               "into one feature row per observation")
        defaults = featfusion.FusionConfig()

        self.add_dataset_arguments(parser)
        parser.add_argument("--skills",
                            help=f"read skill embeddings from FILE (default: {Artifacts.SKILLS} when present; "
                                 f"otherwise every skill is hashed)", metavar="FILE")
        parser.add_argument("--out", help=f"write the feature matrix to FILE (default: {Artifacts.FEATURES})",
                            metavar="FILE")
        parser.add_argument("--fusion-config",
                            help=f"write the fitted fusion configuration to FILE (default: {Artifacts.FUSION_CONFIG})",
                            metavar="FILE")
        parser.add_argument("--mode", choices=tuple(mlptrain.TrainingMode), default=mlptrain.TrainingMode.SEPARATE,
                            help="append the one-hot day block for joint training (default: separate)",
                            type=mlptrain.TrainingMode)
        parser.add_argument("--d-company", default=defaults.d_company,
                            help=f"company embedding buckets (default: {defaults.d_company})", metavar="N", type=int)
        parser.add_argument("--d-title", default=defaults.d_title,
                            help=f"title embedding buckets (default: {defaults.d_title})", metavar="N", type=int)
        parser.add_argument("--d-desc", default=defaults.d_desc,
                            help=f"description embedding buckets (default: {defaults.d_desc})", metavar="N", type=int)
        parser.add_argument("--skill-dim", default=featfusion.DEFAULT_SKILL_DIM,
                            help=f"skill block size without an embedding table (default: "
                                 f"{featfusion.DEFAULT_SKILL_DIM})", metavar="N", type=int)

        return parser

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        dataset = self.load_dataset()
        table = self.load_skill_table()
        days = sorted({o.t for o in dataset.observations}) if self.args.mode is mlptrain.TrainingMode.JOINT else []
        config = featfusion.fit_fusion_config(dataset.jobs_in(Split.TRAIN), table.dimension,
                                              d_company=self.args.d_company, d_title=self.args.d_title,
                                              d_desc=self.args.d_desc, include_day=bool(days), days=days)
        layout = featfusion.feature_layout(config)
        out_path = self.data_path(self.args.out, Artifacts.FEATURES)
        config_path = self.data_path(self.args.fusion_config, Artifacts.FUSION_CONFIG)

        self.ensure_output_directory(out_path)
        self.ensure_output_directory(config_path)
        self.print_message(f"fused width {layout.width} ({', '.join(span.name for span in layout.spans)})")

        rows = featfusion.featurize_corpus(dataset, table, config)
        featfusion.write_feature_matrix(out_path, self.track(rows, total=dataset.size, label="featurize"), layout,
                                        on_error=self.print_error_and_exit)

        featfusion.write_fusion_config(config_path, config, on_error=self.print_error_and_exit)

        self.summary = {
            "rows": dataset.size,
            "width": layout.width,
            "include_day": config.include_day,
            "skill_table_entries": len(table),
            "out": out_path,
        }

    def load_skill_table(self) -> SkillEmbeddingTable:
        """Return the skill table, or an empty table of ``--skill-dim`` when none is available."""
        path = self.args.skills or os.path.join(self.args.data_dir, Artifacts.SKILLS)

        if not self.args.skills and not os.path.exists(path):
            self.print_message("no skill table; every skill is hashed")
            return SkillEmbeddingTable(self.args.skill_dim, {})

        table = datamodel.load_skill_table(path, on_error=self.print_error)
        self.exit_if_errors()

        return table

    @override
    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        super().validate_option_ranges()

        for flag, value in (("--d-company", self.args.d_company), ("--d-title", self.args.d_title),
                            ("--d-desc", self.args.d_desc), ("--skill-dim", self.args.skill_dim)):
            if value < 1:
                self.print_error_and_exit(f"{flag} must be >= 1")


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Featurize().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
