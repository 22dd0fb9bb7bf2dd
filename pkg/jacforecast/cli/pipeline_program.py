"""Abstract base class for subcommands that read and write pipeline artifacts in a data directory."""

import argparse
import os
import sys
from abc import ABC
from collections.abc import Iterable, Iterator
from typing import Final, NamedTuple, final, override

from jacforecast.pipeline import datamodel, featfusion, lmserialize
from jacforecast.pipeline.errors import JacForecastError
from jacforecast.pipeline.mlptrain import FeatureKind, FeatureSource
from .ansi import ForegroundColors
from .cli_program import CLIProgram
from .io import ensure_directory
from .progress import ProgressBar
from .terminal import stderr_is_terminal
from .types import JsonObject

#: Environment variable naming the default data directory.
DATA_DIR_ENV_VAR: Final[str] = "JACFC_DATA_DIR"

# Data directory used when neither --data-dir nor the environment variable is set.
_FALLBACK_DATA_DIR: Final[str] = "data"

#: Seed used when ``--seed`` is not given.
DEFAULT_SEED: Final[int] = 7


class Artifacts:
    """Namespace for the conventional artifact names inside the data directory."""
    JOBS: Final[str] = "jobs.jsonl"
    OBSERVATIONS: Final[str] = "observations.jsonl"
    DAILY: Final[str] = "daily.jsonl"
    SPLITS: Final[str] = "splits.csv"
    SKILLS: Final[str] = "skills.tsv"
    FEATURES: Final[str] = "features.csv"
    FUSION_CONFIG: Final[str] = "fusion.json"
    MODEL: Final[str] = "model.json"
    HISTORY: Final[str] = "history.csv"
    PREDICTIONS: Final[str] = "predictions.csv"
    FORECASTS: Final[str] = "forecasts.csv"
    REPORT: Final[str] = "report.csv"
    SERIES: Final[str] = "series.csv"


class LoadedFeatures(NamedTuple):
    """Model inputs with their origin and a descriptor stored alongside trained models."""
    source: FeatureSource
    kind: FeatureKind
    layout: JsonObject


class PipelineProgram(CLIProgram, ABC):
    """
    Base class for subcommands that read and write pipeline artifacts.

    - Every file option defaults to a conventional name inside ``--data-dir``.
    - Pipeline errors are reported as diagnostics and map to exit status ``1``.
    """

    handled_errors = (JacForecastError,)

    @final
    def add_dataset_arguments(self, parser: argparse.ArgumentParser, *, splits: bool = True) -> None:
        """Add the ``--jobs``, ``--obs`` (and ``--splits``) input options."""
        parser.add_argument("--jobs", help=f"read jobs from FILE (default: {Artifacts.JOBS})", metavar="FILE")
        parser.add_argument("--obs", help=f"read observations from FILE (default: {Artifacts.OBSERVATIONS})",
                            metavar="FILE")

        if splits:
            parser.add_argument("--splits", help=f"read split assignments from FILE (default: {Artifacts.SPLITS})",
                                metavar="FILE")

    @final
    def add_feature_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Add the ``--features`` / ``--embeddings`` inputs and the dataset options the embeddings are joined with."""
        self.add_dataset_arguments(parser)
        parser.add_argument("--features", help=f"read fused features from FILE (default: {Artifacts.FEATURES})",
                            metavar="FILE")
        parser.add_argument("--embeddings",
                            help="read LM embeddings (job_id<TAB>t<TAB>v1..vk) from FILE instead of fused features",
                            metavar="FILE")

    @final
    def build_parser(self, *, description: str) -> argparse.ArgumentParser:
        """Return a parser with the options shared by every subcommand; subclasses add their own."""
        parser = argparse.ArgumentParser(allow_abbrev=False, description=description, prog=self.name)

        parser.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV_VAR) or _FALLBACK_DATA_DIR,
                            help=f"read and write artifacts in DIR (default: ${DATA_DIR_ENV_VAR} or "
                                 f"{_FALLBACK_DATA_DIR!r})", metavar="DIR")
        parser.add_argument("--config", help="read option defaults from the INI FILE", metavar="FILE")
        parser.add_argument("--set", action="append", default=[],
                            help="override an option default (repeatable; beats --config)", metavar="KEY=VALUE")
        parser.add_argument("--seed", default=DEFAULT_SEED, help=f"use random seed N (default: {DEFAULT_SEED})",
                            metavar="N", type=int)
        parser.add_argument("-v", "--verbose", action="store_true", help="print informational messages")
        parser.add_argument("-q", "--quiet", action="store_true", help="do not render progress bars")
        parser.add_argument("-s", "--no-messages", action="store_true", help="suppress per-record error messages")
        parser.add_argument("--color", choices=("on", "off"), default="on",
                            help="use color for diagnostics (default: on)")
        parser.add_argument("--version", action="version", version=f"%(prog)s {self.version}")

        return parser

    @final
    def data_path(self, value: str | None, default_name: str) -> str:
        """Return ``value`` when given, else ``default_name`` inside the data directory."""
        return value if value else os.path.join(self.args.data_dir, default_name)

    @final
    def ensure_output_directory(self, path: str) -> None:
        """Create the directory that will hold ``path``, or exit with a diagnostic."""
        if directory := os.path.dirname(path):
            ensure_directory(directory, on_error=self.print_error_and_exit)

    @final
    def load_dataset(self, *, observations: str | None = None, with_splits: bool = True) -> datamodel.Dataset:
        """
        Load the dataset named by the dataset options, reporting every malformed record.

        - ``observations`` replaces the ``--obs`` file (e.g., the daily paths).
        - Exits with status ``1`` after the diagnostics when any record was rejected.
        """
        jobs_path = self.data_path(self.args.jobs, Artifacts.JOBS)
        observations_path = observations or self.data_path(self.args.obs, Artifacts.OBSERVATIONS)
        splits_path = self.data_path(self.args.splits, Artifacts.SPLITS) if with_splits else None
        dataset = datamodel.load_dataset(jobs_path, observations_path, splits_path, on_error=self.print_error)

        self.exit_if_errors()
        self.print_message(f"loaded {len(dataset.jobs)} jobs and {dataset.size} observations")

        return dataset

    @final
    def load_features(self) -> LoadedFeatures:
        """
        Load the rows selected by ``--features`` or ``--embeddings``, reporting every malformed record.

        - Embeddings are joined with the observations and splits of the dataset options.
        - Exits with status ``1`` after the diagnostics when any record was rejected.
        """
        if self.args.embeddings:
            embeddings = lmserialize.import_embeddings(self.args.embeddings, on_error=self.print_error)
            self.exit_if_errors()
            source = FeatureSource.from_embeddings(embeddings, self.load_dataset(), on_error=self.print_error)
            self.exit_if_errors()

            return LoadedFeatures(source, FeatureKind.EMBEDDINGS, {"dimension": source.dimension})

        matrix = featfusion.load_feature_matrix(self.data_path(self.args.features, Artifacts.FEATURES),
                                                on_error=self.print_error)
        self.exit_if_errors()
        self.print_message(f"loaded {len(matrix.keys)} feature rows of width {len(matrix.columns)}")

        return LoadedFeatures(FeatureSource.from_matrix(matrix), FeatureKind.FUSED,
                              {"columns": list(matrix.columns)})

    @final
    def progress(self, total: int, *, label: str) -> ProgressBar:
        """Return a progress bar on standard error, hidden when redirected or ``--quiet``."""
        return ProgressBar(total=total, text_stream=sys.stderr, label=label,
                           visible=stderr_is_terminal() and not self.args.quiet,
                           percent_style=ForegroundColors.BRIGHT_CYAN if self.print_color else "")

    @final
    def track[T](self, items: Iterable[T], *, total: int, label: str) -> Iterator[T]:
        """Yield ``items`` while advancing a progress bar of ``total`` units."""
        with self.progress(total, label=label) as bar:
            for item in items:
                yield item
                bar.advance()

    @override
    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        if self.args.seed < 0:
            self.print_error_and_exit("--seed must be >= 0")


__all__: Final[tuple[str, ...]] = (
    "Artifacts",
    "DATA_DIR_ENV_VAR",
    "DEFAULT_SEED",
    "LoadedFeatures",
    "PipelineProgram",
)
