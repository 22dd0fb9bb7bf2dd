"""Implements a subcommand that writes a deterministic synthetic corpus into the data directory."""

import argparse
import os
from typing import NoReturn, override

from jacforecast.cli import text
from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import datamodel, synthgen


class Generate(PipelineProgram):
    """Command implementation for generating a synthetic corpus with splits, daily paths, and a skill table."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc generate")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="write a synthetic job corpus (jobs, observations, daily paths, "
                                               "splits, and skill table)")
        defaults = synthgen.GenConfig()

        parser.add_argument("--out", help="write artifacts into DIR (default: --data-dir)", metavar="DIR")
        parser.add_argument("--n-jobs", default=defaults.n_jobs, help=f"generate N jobs (default: {defaults.n_jobs})",
                            metavar="N", type=int)
        parser.add_argument("--horizons", default=defaults.horizons,
                            help="observation days, strictly increasing (default: 1,3,7,14,30)", metavar="DAYS",
                            type=text.parse_int_list)
        parser.add_argument("--split-ratio", default=defaults.split_ratio,
                            help="relative train,test,val sizes (default: 8,2,2)", metavar="RATIO",
                            type=text.parse_float_list)
        parser.add_argument("--max-jac", default=defaults.max_jac,
                            help=f"cap counts at N (default: {defaults.max_jac})", metavar="N", type=int)
        parser.add_argument("--signal-strength", default=defaults.signal_strength,
                            help=f"weight of the feature signal in [0, 1] (default: {defaults.signal_strength})",
                            metavar="W", type=float)
        parser.add_argument("--n-titles", default=defaults.n_titles,
                            help=f"title vocabulary size (default: {defaults.n_titles})", metavar="N", type=int)
        parser.add_argument("--n-companies", default=defaults.n_companies,
                            help=f"company vocabulary size (default: {defaults.n_companies})", metavar="N", type=int)
        parser.add_argument("--n-skills", default=defaults.n_skills,
                            help=f"skill vocabulary size (default: {defaults.n_skills})", metavar="N", type=int)
        parser.add_argument("--skill-coverage", default=defaults.skill_table_coverage,
                            help=f"fraction of skills in the embedding table (default: "
                                 f"{defaults.skill_table_coverage})", metavar="F", type=float)
        parser.add_argument("--skill-dim", default=defaults.skill_dim,
                            help=f"skill embedding dimension (default: {defaults.skill_dim})", metavar="N", type=int)

        return parser

    @override
    def check_option_dependencies(self) -> None:
        """Enforce relationships and mutual constraints between command-line options."""
        if len(self.args.split_ratio) != 3:
            self.print_error_and_exit("--split-ratio takes exactly three values (train,test,val)")

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        config = synthgen.GenConfig(n_jobs=self.args.n_jobs, horizons=tuple(self.args.horizons),
                                    split_ratio=tuple(self.args.split_ratio), max_jac=self.args.max_jac,
                                    seed=self.args.seed, n_titles=self.args.n_titles,
                                    n_companies=self.args.n_companies, n_skills=self.args.n_skills,
                                    signal_strength=self.args.signal_strength,
                                    skill_table_coverage=self.args.skill_coverage, skill_dim=self.args.skill_dim)
        corpus = synthgen.generate_corpus_with_daily(config)
        dataset = synthgen.split(corpus.dataset, config.split_ratio, config.seed)
        directory = self.args.out or self.args.data_dir
        on_error = self.print_error_and_exit

        self.ensure_output_directory(os.path.join(directory, Artifacts.JOBS))
        self.print_message(f"generated {len(dataset.jobs)} jobs and {dataset.size} observations")

        datamodel.write_jobs(os.path.join(directory, Artifacts.JOBS), dataset.jobs.values(), on_error=on_error)
        datamodel.write_observations(os.path.join(directory, Artifacts.OBSERVATIONS), dataset.observations,
                                     on_error=on_error)
        datamodel.write_observations(os.path.join(directory, Artifacts.DAILY), corpus.daily, on_error=on_error)
        datamodel.write_splits(os.path.join(directory, Artifacts.SPLITS), dataset.splits, on_error=on_error)
        datamodel.write_skill_table(os.path.join(directory, Artifacts.SKILLS), corpus.skill_table, on_error=on_error)

        self.summary = {
            "jobs": len(dataset.jobs),
            "observations": dataset.size,
            "daily_observations": len(corpus.daily),
            "skills": len(corpus.skill_table),
            "splits": {split.value: len(dataset.jobs_in(split)) for split in datamodel.Split},
            "out": directory,
        }


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Generate().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
