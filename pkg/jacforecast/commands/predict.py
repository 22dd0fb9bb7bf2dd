"""Implements a subcommand that applies a trained model to one split."""

import argparse
from typing import Final, NoReturn, override

import numpy as np

from jacforecast.cli.pipeline_program import Artifacts, PipelineProgram
from jacforecast.pipeline import evalreport, mlptrain
from jacforecast.pipeline.datamodel import Split
from jacforecast.pipeline.errors import ModelError
from jacforecast.pipeline.evalreport import Prediction

# Split choice that keeps every row.
_ALL_SPLITS: Final[str] = "all"


class Predict(PipelineProgram):
    """Command implementation for writing clamped model predictions for the rows of a split."""

    def __init__(self) -> None:
        """Initialize a new instance."""
        super().__init__(name="jacfc predict")

    @override
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        parser = self.build_parser(description="predict job application counts with a trained model")

        self.add_feature_arguments(parser)
        parser.add_argument("--model", help=f"read the model from FILE (default: {Artifacts.MODEL})", metavar="FILE")
        parser.add_argument("--split", choices=(*(split.value for split in Split), _ALL_SPLITS),
                            default=Split.TEST.value, help="predict the rows of SPLIT (default: test)")
        parser.add_argument("--out", help=f"write predictions to FILE (default: {Artifacts.PREDICTIONS})",
                            metavar="FILE")

        return parser

    @override
    def check_option_dependencies(self) -> None:
        """Enforce relationships and mutual constraints between command-line options."""
        if self.args.features and self.args.embeddings:
            self.print_error_and_exit("--features and --embeddings are mutually exclusive")

    @override
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        model_path = self.data_path(self.args.model, Artifacts.MODEL)
        bundle = mlptrain.load_model(model_path, on_error=self.print_error_and_exit)
        features = self.load_features()

        if features.kind is not bundle.feature_kind:
            raise ModelError(f"model was trained on {bundle.feature_kind.value} features, "
                             f"found {features.kind.value} features")

        if features.kind is mlptrain.FeatureKind.FUSED and bundle.layout.get("columns") != features.layout["columns"]:
            raise ModelError("feature columns differ from the ones the model was trained on")

        source = features.source

        if self.args.split != _ALL_SPLITS:
            source = source.subset(Split(self.args.split))

        values = np.maximum(bundle.predict(source), 0.0)
        predictions = [Prediction(job_id, t, float(value)) for (job_id, t), value in zip(source.keys, values)]
        out_path = self.data_path(self.args.out, Artifacts.PREDICTIONS)

        self.ensure_output_directory(out_path)
        evalreport.write_predictions(out_path, predictions, on_error=self.print_error_and_exit)
        self.print_message(f"wrote {len(predictions)} predictions to {out_path}")

        self.summary = {
            "mode": bundle.mode.value,
            "predictions": len(predictions),
            "split": self.args.split,
            "out": out_path,
        }


def main() -> int | NoReturn:
    """Run the command and return the exit code."""
    return Predict().run_program()


if __name__ == "__main__":
    raise SystemExit(main())
