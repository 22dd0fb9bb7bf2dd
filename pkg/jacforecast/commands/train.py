"""Implements a subcommand that trains the regression network on fused features or LM embeddings."""

import argparse
import os
from typing import Final, NoReturn, override

from jacforecast.cli import text
from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import featfusion, mlptrain
from jacforecast.pipeline.datamodel import Split
from jacforecast.pipeline.mlptrain import EpochRecord, FeatureKind, TrainingMode

# Fusion statistics recorded with models trained on fused features.
_NORMALIZATION_KEYS: Final[tuple[str, ...]] = ("salary_mean", "salary_std")


class Train(PipelineProgram):
    """
    Command implementation for training one joint model or one model per day.

    Attributes:
        epochs_run: Epochs trained, summed over models.
    """

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc train")

        self.epochs_run: int = 0

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="train the regression network with Adam and early stopping on "
                                               "validation MAE")
        defaults = mlptrain.TrainConfig()

        self.add_feature_arguments(parser)
        parser.add_argument("--fusion-config",
                            help=f"read fusion statistics from FILE (default: {Artifacts.FUSION_CONFIG} when present)",
                            metavar="FILE")
        parser.add_argument("--model", help=f"write the model to FILE (default: {Artifacts.MODEL})", metavar="FILE")
        parser.add_argument("--history", help=f"write per-epoch losses to FILE (default: {Artifacts.HISTORY})",
                            metavar="FILE")
        parser.add_argument("--mode", choices=tuple(TrainingMode), default=TrainingMode.SEPARATE,
                            help="train one model per day or one joint model (default: separate)", type=TrainingMode)
        parser.add_argument("--learning-rate", default=defaults.learning_rate,
                            help=f"Adam step size (default: {defaults.learning_rate})", metavar="LR", type=float)
        parser.add_argument("--batch-size", default=defaults.batch_size,
                            help=f"rows per mini-batch (default: {defaults.batch_size})", metavar="N", type=int)
        parser.add_argument("--max-epochs", default=defaults.max_epochs,
                            help=f"stop after N epochs (default: {defaults.max_epochs})", metavar="N", type=int)
        parser.add_argument("--patience", default=defaults.patience,
                            help=f"stop after N epochs without improvement (default: {defaults.patience})",
                            metavar="N", type=int)
        parser.add_argument("--min-improvement", default=defaults.min_improvement,
                            help=f"validation MAE decrease that counts as improvement (default: "
                                 f"{defaults.min_improvement})", metavar="DELTA", type=float)
        parser.add_argument("--hidden-dims", default=defaults.hidden_dims,
                            help="hidden layer sizes (default: 256,128,64,32)", metavar="SIZES",
                            type=text.parse_int_list)

        return parser

    @override
    def check_option_dependencies(self) -> None:
        """Enforce relationships and mutual constraints between command-line options."""
        if self.args.features and self.args.embeddings:
            self.print_error_and_exit("--features and --embeddings are mutually exclusive")

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        config = mlptrain.TrainConfig(learning_rate=self.args.learning_rate, batch_size=self.args.batch_size,
                                      max_epochs=self.args.max_epochs, patience=self.args.patience,
                                      min_improvement=self.args.min_improvement,
                                      hidden_dims=tuple(self.args.hidden_dims), seed=self.args.seed)
        features = self.load_features()

        if (self.args.mode is TrainingMode.JOINT and features.kind is FeatureKind.FUSED
                and not any(column.startswith("day:") for column in features.layout["columns"])):
            self.print_error_and_exit("joint mode needs features built with 'featurize --mode joint'")

        model_path = self.data_path(self.args.model, Artifacts.MODEL)
        history_path = self.data_path(self.args.history, Artifacts.HISTORY)
        self.ensure_output_directory(model_path)
        self.ensure_output_directory(history_path)

        with self.progress(config.max_epochs, label="train") as bar:
            def on_epoch(day: int | None, record: EpochRecord) -> None:
                model_name = "joint" if day is None else f"day {day}"
                self.epochs_run += 1
                bar.update(record.epoch, status=f"{model_name} val MAE {record.val_mae:.3f}")
                self.print_message(f"{model_name} epoch {record.epoch}: train loss {record.train_loss:.4f}, "
                                   f"val MAE {record.val_mae:.4f}")

            results = mlptrain.train_models(features.source, config, mode=self.args.mode, on_epoch=on_epoch)

        bundle = mlptrain.ModelBundle(mode=self.args.mode,
                                      models={day: result.model for day, result in results.items()},
                                      feature_kind=features.kind, layout=features.layout,
                                      normalization=self.load_normalization(features.kind))

        mlptrain.save_model(model_path, bundle, on_error=self.print_error_and_exit)
        mlptrain.write_history(history_path, {day: result.history for day, result in results.items()},
                               on_error=self.print_error_and_exit)

        self.summary = {
            "mode": self.args.mode.value,
            "feature_kind": features.kind.value,
            "input_dim": bundle.input_dim,
            "train_rows": len(features.source.select(Split.TRAIN)[1]),
            "val_rows": len(features.source.select(Split.VAL)[1]),
            "epochs": self.epochs_run,
            "best_epochs": {"joint" if day is None else str(day): result.best_epoch
                            for day, result in results.items()},
            "model": model_path,
        }

    def load_normalization(self, kind: FeatureKind) -> dict[str, float]:
        """Return the salary statistics of the fusion configuration for fused features, else an empty mapping."""
        path = self.args.fusion_config or os.path.join(self.args.data_dir, Artifacts.FUSION_CONFIG)

        if kind is not FeatureKind.FUSED or (not self.args.fusion_config and not os.path.exists(path)):
            return {}

        config = featfusion.load_fusion_config(path, on_error=self.print_error_and_exit)

        return {key: config.to_json()[key] for key in _NORMALIZATION_KEYS}

    @override
    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        super().validate_option_ranges()

        if not self.args.learning_rate > 0:
            self.print_error_and_exit("--learning-rate must be > 0")

        for flag, value, minimum in (("--batch-size", self.args.batch_size, 1),
                                     ("--max-epochs", self.args.max_epochs, 0),
                                     ("--patience", self.args.patience, 1)):
            if value < minimum:
                self.print_error_and_exit(f"{flag} must be >= {minimum}")

        if self.args.min_improvement < 0:
            self.print_error_and_exit("--min-improvement must be >= 0")

        if any(size < 1 for size in self.args.hidden_dims):
            self.print_error_and_exit("--hidden-dims sizes must be >= 1")


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Train().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
