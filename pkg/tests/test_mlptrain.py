import math
import os
import tempfile
import unittest
from typing import Final, final

import numpy as np

from jacforecast.pipeline import featfusion, mlptrain, synthgen, tsforecast
from jacforecast.pipeline.datamodel import Dataset, Observation, Split
from jacforecast.pipeline.errors import ConfigError, DataError, ModelError
from jacforecast.pipeline.evalreport import mae
from jacforecast.pipeline.mlptrain import (EarlyStopping, FeatureKind, FeatureSource, Layer, MlpModel, ModelBundle,
                                           OptimizerState, TrainConfig, TrainingMode)
from jacforecast.pipeline.tsforecast import HistoryMode, ShortHistory

# Set to run the end-to-end learning check on a larger corpus.
SLOW_TESTS: Final[bool] = os.environ.get("JACFC_SLOW_TESTS") == "1"


def linear_model(weights: list[list[float]], bias: list[float]) -> MlpModel:
    """Return a single-layer model."""
    return MlpModel((Layer(np.array(weights), np.array(bias)),))


def numeric_gradients(model: MlpModel, batch: np.ndarray, targets: np.ndarray, step: float) -> list[Layer]:
    """Return central finite-difference gradients of the mean L1 loss."""
    gradients = []

    for index, layer in enumerate(model.layers):
        parts = []

        for position, parameter in enumerate(layer):
            gradient = np.zeros_like(parameter)

            for coordinate in np.ndindex(parameter.shape):
                losses = []

                for sign in (1.0, -1.0):
                    shifted = parameter.copy()
                    shifted[coordinate] += sign * step
                    replaced = list(layer)
                    replaced[position] = shifted
                    layers = list(model.layers)
                    layers[index] = Layer(*replaced)
                    losses.append(mlptrain.l1_loss(mlptrain.predict_batch(MlpModel(tuple(layers)), batch), targets))

                gradient[coordinate] = (losses[0] - losses[1]) / (2.0 * step)

            parts.append(gradient)

        gradients.append(Layer(*parts))

    return gradients


@final
class TestMlptrain(unittest.TestCase):
    """Tests the mlptrain module."""

    def test_adam_step(self) -> None:
        """Tests the adam_step function."""
        config = TrainConfig(learning_rate=1e-3)
        model = linear_model([[1.0], [-2.0]], [0.5])
        state = OptimizerState.zeros_like(model)

        updated, state = mlptrain.adam_step(model, state, [Layer(np.array([[0.5], [-0.5]]), np.zeros(1))], config)

        self.assertEqual(state.step, 1)
        delta = updated.layers[0].weights - model.layers[0].weights
        np.testing.assert_allclose(delta, [[-1e-3], [1e-3]], atol=1e-6)
        self.assertAlmostEqual(delta[0, 0], -delta[1, 0])
        np.testing.assert_array_equal(updated.layers[0].bias, model.layers[0].bias)

        # Closed-form first step on random scalars.
        rng = np.random.default_rng(5)

        for _ in range(100):
            weight, gradient = rng.normal(size=2)
            scalar = linear_model([[weight]], [0.0])
            stepped, _ = mlptrain.adam_step(scalar, OptimizerState.zeros_like(scalar),
                                            [Layer(np.array([[gradient]]), np.zeros(1))], config)
            expected = -1e-3 * gradient / (math.sqrt(gradient * gradient) + 1e-8)
            self.assertAlmostEqual(stepped.layers[0].weights[0, 0] - weight, expected, delta=1e-6)

        # Zero gradients leave parameters unchanged but count the step.
        unchanged, state = mlptrain.adam_step(updated, OptimizerState.zeros_like(updated),
                                              [Layer(np.zeros((2, 1)), np.zeros(1))], config)
        np.testing.assert_array_equal(unchanged.layers[0].weights, updated.layers[0].weights)
        self.assertEqual(state.step, 1)

        with self.assertRaises(ModelError):
            mlptrain.adam_step(model, OptimizerState.zeros_like(model), [Layer(np.zeros((3, 1)), np.zeros(1))],
                               config)

    def test_backward(self) -> None:
        """Tests the backward function against hand arithmetic and finite differences."""
        model = linear_model([[2.0]], [0.0])
        predictions, cache = mlptrain.forward_cached(model, np.array([[3.0]]))
        self.assertEqual(predictions[0], 6.0)

        gradients = mlptrain.backward(model, cache, np.array([5.0]))
        np.testing.assert_array_equal(gradients[0].weights, [[3.0]])
        np.testing.assert_array_equal(gradients[0].bias, [1.0])

        # sign(0) = 0 when predictions hit their targets.
        for gradient in mlptrain.backward(model, cache, np.array([6.0])):
            self.assertFalse(np.any(gradient.weights) or np.any(gradient.bias))

        with self.assertRaises(ModelError):
            mlptrain.backward(model, cache, np.array([1.0, 2.0]))

        rng = np.random.default_rng(11)

        for trial in range(50):
            input_dim, hidden = int(rng.integers(2, 6)), tuple(int(n) for n in rng.integers(2, 8, size=2))
            model = MlpModel.initialize(input_dim, hidden, seed=trial)
            model = MlpModel(tuple(Layer(layer.weights, rng.normal(scale=0.1, size=layer.bias.shape))
                                   for layer in model.layers))
            batch = rng.normal(size=(int(rng.integers(1, 7)), input_dim))
            outputs, cache = mlptrain.forward_cached(model, batch)

            # Targets far from the outputs keep the loss away from its kinks.
            targets = outputs + rng.choice([-10.0, 10.0], size=outputs.size)
            analytic = mlptrain.backward(model, cache, targets)
            numeric = numeric_gradients(model, batch, targets, step=1e-6)

            for expected, actual in zip(numeric, analytic):
                np.testing.assert_allclose(actual.weights, expected.weights, rtol=1e-4, atol=1e-7)
                np.testing.assert_allclose(actual.bias, expected.bias, rtol=1e-4, atol=1e-7)

    def test_early_stopping(self) -> None:
        """Tests the EarlyStopping tracker on scripted validation traces."""
        traces = [
            ([5, 4, 4, 4, 4, 4, 4, 4], 5, 7, 2),
            ([5, 4, 3, 2, 1], 5, None, 5),
            ([3, 3, 3, 3, 3, 3], 5, 6, 1),
            ([9, 8, 9, 7, 9, 9], 2, 6, 4),
        ]

        for values, patience, stop_epoch, best_epoch in traces:
            with self.subTest(values=values):
                stopping = EarlyStopping(patience)
                stopped = None

                for epoch, value in enumerate(values, start=1):
                    if stopping.update(epoch, value):
                        stopped = epoch
                        break

                self.assertEqual(stopped, stop_epoch)
                self.assertEqual(stopping.best_epoch, best_epoch)
                self.assertEqual(stopping.best_value, min(values))

        # Improvements smaller than the threshold do not count.
        stopping = EarlyStopping(1, min_improvement=0.5)
        stopping.update(1, 2.0)
        self.assertTrue(stopping.update(2, 1.8))
        self.assertEqual(stopping.best_epoch, 1)

    def test_feature_source(self) -> None:
        """Tests joining embeddings with observations and selecting rows."""
        jobs = synthgen.generate_corpus(synthgen.GenConfig(n_jobs=3, seed=1)).jobs
        job_ids = list(jobs)
        observations = (Observation(job_ids[0], 1, 1), Observation(job_ids[0], 7, 3), Observation(job_ids[1], 7, 2),
                        Observation(job_ids[2], 30, 5))
        dataset = Dataset(jobs, observations, dict(zip(job_ids, (Split.TRAIN, Split.VAL, Split.TEST))))
        embeddings = {(o.job_id, o.t): np.full(2, float(o.jac)) for o in observations[:3]}
        errors = []

        source = FeatureSource.from_embeddings(embeddings, dataset, on_error=errors.append)

        self.assertEqual(errors, [f"no embedding for job {job_ids[2]!r} at t=30"])
        self.assertEqual(source.dimension, 2)
        self.assertEqual(source.days(), (1, 7))
        features, labels = source.select(Split.TRAIN, 7)
        np.testing.assert_array_equal(features, [[3.0, 3.0]])
        np.testing.assert_array_equal(labels, [3.0])
        self.assertEqual(source.subset(Split.VAL).keys, ((job_ids[1], 7),))
        self.assertEqual(source.subset(Split.TEST).values.shape, (0, 2))

        with self.assertRaises(ModelError):
            FeatureSource(((job_ids[0], 1),), (Split.TRAIN,), np.zeros((2, 2)), np.zeros(2))

        with self.assertRaises(ModelError):
            FeatureSource.from_embeddings({**embeddings, (job_ids[2], 30): np.zeros(3)}, dataset)

    def test_forward(self) -> None:
        """Tests the forward function."""
        self.assertEqual(mlptrain.forward(linear_model([[2.0]], [0.0]), [3.0]), 6.0)

        zeros = MlpModel((Layer(np.zeros((3, 4)), np.zeros(4)), Layer(np.zeros((4, 1)), np.zeros(1))))
        self.assertEqual(mlptrain.forward(zeros, [1.0, -2.0, 5.0]), 0.0)

        relu = MlpModel((Layer(np.array([[-1.0, 2.0]]), np.zeros(2)), Layer(np.ones((2, 1)), np.zeros(1))))
        self.assertEqual(mlptrain.forward(relu, [1.0]), 2.0)

        # A zeroed layer propagates its biases only.
        biased = MlpModel((Layer(np.zeros((2, 2)), np.array([1.0, -1.0])), Layer(np.array([[3.0], [5.0]]),
                                                                                   np.array([0.5]))))
        self.assertEqual(mlptrain.forward(biased, [7.0, 9.0]), 3.5)

        with self.assertRaisesRegex(ModelError, "expected 1 features, found 2"):
            mlptrain.forward(relu, [1.0, 2.0])

        with self.assertRaises(ModelError):
            mlptrain.predict_batch(relu, np.zeros(3))

    def test_glorot_init(self) -> None:
        """Tests the glorot_init function."""
        weights = mlptrain.glorot_init(2, 4, seed=3)
        self.assertEqual(weights.shape, (2, 4))
        self.assertTrue(np.all(np.abs(weights) <= 1.0))
        np.testing.assert_array_equal(weights, mlptrain.glorot_init(2, 4, seed=3))

        limit = math.sqrt(6.0 / (256 + 128))
        samples = np.concatenate([mlptrain.glorot_init(256, 128, seed=[9, i]).ravel() for i in range(4)])
        self.assertLessEqual(abs(samples.var() / (limit * limit / 3.0) - 1.0), 0.05)

        with self.assertRaises(ModelError):
            mlptrain.glorot_init(0, 4, seed=1)

        model = MlpModel.initialize(5, (4, 3), seed=2)
        self.assertEqual((model.input_dim, model.hidden_dims), (5, (4, 3)))
        self.assertTrue(all(not layer.bias.any() for layer in model.layers))

    def test_l1_loss(self) -> None:
        """Tests the l1_loss function."""
        self.assertEqual(mlptrain.l1_loss(5.0, 5.0), 0.0)
        self.assertEqual(mlptrain.l1_loss(0.5, 0.0), 0.5)
        self.assertEqual(mlptrain.l1_loss(np.array([1.0, 3.0]), np.array([2.0, 5.0])), 1.5)

    def test_model_files(self) -> None:
        """Tests saving and loading model bundles and training histories."""
        models = {1: MlpModel.initialize(3, (4,), seed=1), 7: MlpModel.initialize(3, (4,), seed=2)}
        bundle = ModelBundle(mode=TrainingMode.SEPARATE, models=models, feature_kind=FeatureKind.EMBEDDINGS,
                             layout={"dimension": 3}, normalization={"salary_mean": 1.5})

        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "model.json")
            self.assertTrue(mlptrain.save_model(path, bundle))
            loaded = mlptrain.load_model(path)

            history_path = os.path.join(directory, "history.csv")
            history = {1: [mlptrain.EpochRecord(1, 2.5, 2.0)], 7: [mlptrain.EpochRecord(1, 0.5, 0.25)]}
            self.assertTrue(mlptrain.write_history(history_path, history))

            with open(history_path, encoding="utf-8") as f:
                self.assertEqual(f.read(), "day,epoch,train_loss,val_mae\n1,1,2.5,2.0\n7,1,0.5,0.25\n")

            self.assertTrue(mlptrain.write_history(history_path, {None: history[7]}))

            with open(history_path, encoding="utf-8") as f:
                self.assertEqual(f.read(), "epoch,train_loss,val_mae\n1,0.5,0.25\n")

            with open(path, "w", encoding="utf-8") as f:
                f.write('{"version": 99}')

            with self.assertRaisesRegex(ModelError, "unsupported model format version"):
                mlptrain.load_model(path)

        self.assertEqual(loaded.mode, TrainingMode.SEPARATE)
        self.assertEqual(loaded.feature_kind, FeatureKind.EMBEDDINGS)
        self.assertEqual((loaded.layout, loaded.normalization), (bundle.layout, bundle.normalization))
        self.assertEqual(list(loaded.models), [1, 7])

        for day, model in models.items():
            for original, restored in zip(model.layers, loaded.models[day].layers):
                np.testing.assert_array_equal(original.weights, restored.weights)
                np.testing.assert_array_equal(original.bias, restored.bias)

        # Separate bundles route rows to the model of their day.
        source = FeatureSource((("J1", 1), ("J2", 7)), (Split.TEST, Split.TEST), np.ones((2, 3)), np.zeros(2))
        np.testing.assert_allclose(bundle.predict(source), [mlptrain.forward(models[1], np.ones(3)),
                                                            mlptrain.forward(models[7], np.ones(3))])

        with self.assertRaisesRegex(ModelError, "no model for day 3"):
            bundle.model_for(3)

        with self.assertRaises(ModelError):
            ModelBundle(mode=TrainingMode.JOINT, models=models)

        with self.assertRaises(ModelError):
            ModelBundle(mode=TrainingMode.SEPARATE, models={1: models[1], 7: MlpModel.initialize(2, (4,), seed=1)})

    def test_train(self) -> None:
        """Tests the training loop."""
        rng = np.random.default_rng(21)
        train_x, val_x = rng.normal(scale=0.1, size=(200, 4)), rng.normal(scale=0.1, size=(50, 4))
        train_y, val_y = np.full(200, 3.0), np.full(50, 3.0)
        config = TrainConfig(learning_rate=1e-2, batch_size=20, max_epochs=50, patience=50, hidden_dims=(8,))
        epochs = []

        result = mlptrain.train(train_x, train_y, val_x, val_y, config, on_epoch=epochs.append)

        self.assertEqual(list(result.history), epochs)
        self.assertEqual(len(result.history), 50)
        self.assertLess(mae(mlptrain.predict_batch(result.model, train_x), train_y), 0.1)

        # The returned weights belong to the best validation epoch.
        best = result.history[result.best_epoch - 1]
        self.assertAlmostEqual(best.val_mae, min(record.val_mae for record in result.history), delta=1e-6)
        self.assertAlmostEqual(mae(mlptrain.predict_batch(result.model, val_x), val_y), best.val_mae)

        # Deterministic for a fixed seed.
        again = mlptrain.train(train_x, train_y, val_x, val_y, config)

        for first, second in zip(result.model.layers, again.model.layers):
            np.testing.assert_array_equal(first.weights, second.weights)

        untrained = mlptrain.train(train_x, train_y, val_x, val_y, TrainConfig(max_epochs=0, hidden_dims=(8,)))
        self.assertEqual((untrained.history, untrained.best_epoch), ((), 0))
        initial = MlpModel.initialize(4, (8,), seed=7)
        np.testing.assert_array_equal(untrained.model.layers[0].weights, initial.layers[0].weights)

        with self.assertRaisesRegex(DataError, "empty val split"):
            mlptrain.train(train_x, train_y, val_x[:0], val_y[:0], config)

        with self.assertRaises(ModelError):
            mlptrain.train(train_x, train_y, val_x[:, :2], val_y, config)

        for overrides in ({"learning_rate": 0.0}, {"batch_size": 0}, {"patience": 0}, {"beta1": 1.0},
                          {"hidden_dims": (4, 0)}):
            with self.subTest(overrides=overrides), self.assertRaises(ConfigError):
                TrainConfig(**overrides)

    def test_train_models(self) -> None:
        """Tests separate and joint training over a feature source."""
        rng = np.random.default_rng(8)
        keys = tuple((f"J{i}", day) for i in range(30) for day in (1, 7))
        splits = tuple((Split.TRAIN, Split.VAL, Split.TEST)[i % 3] for i in range(30) for _ in (1, 7))
        source = FeatureSource(keys, splits, rng.normal(size=(60, 3)), rng.integers(1, 5, size=60).astype(float))
        config = TrainConfig(max_epochs=2, hidden_dims=(4,), batch_size=8)
        seen = []

        separate = mlptrain.train_models(source, config, mode=TrainingMode.SEPARATE,
                                         on_epoch=lambda day, record: seen.append((day, record.epoch)))
        self.assertEqual(list(separate), [1, 7])
        self.assertEqual(seen, [(1, 1), (1, 2), (7, 1), (7, 2)])

        joint = mlptrain.train_models(source, config, mode=TrainingMode.JOINT)
        self.assertEqual(list(joint), [None])

        with self.assertRaisesRegex(DataError, "day 3: empty train or val split"):
            mlptrain.train_models(source, config, mode=TrainingMode.SEPARATE, days=[3])

    @unittest.skipUnless(SLOW_TESTS, "set JACFC_SLOW_TESTS=1 to run")
    def test_joint_model_beats_baselines(self) -> None:
        """Tests that a joint model on fused features beats the train mean and the time-series baselines at day 30."""
        corpus = synthgen.generate_corpus_with_daily(synthgen.GenConfig(n_jobs=5000, signal_strength=1.0))
        dataset = synthgen.split(corpus.dataset, (8, 2, 2), seed=7)
        config = featfusion.fit_fusion_config(dataset.jobs_in(Split.TRAIN), corpus.skill_table.dimension,
                                              include_day=True, days=(1, 3, 7, 14, 30))
        rows = list(featfusion.featurize_corpus(dataset, corpus.skill_table, config))
        source = FeatureSource(tuple((row.job_id, row.t) for row in rows), tuple(row.split for row in rows),
                               np.stack([row.values for row in rows]), np.array([row.label for row in rows], float))

        model = mlptrain.train_models(source, TrainConfig(), mode=TrainingMode.JOINT)[None].model
        _, train_labels = source.select(Split.TRAIN, 30)
        test_x, test_y = source.select(Split.TEST, 30)
        test_jobs = [job_id for (job_id, t), split in zip(source.keys, source.splits)
                     if split == Split.TEST and t == 30]
        model_predictions = dict(zip(test_jobs, mlptrain.predict_batch(model, test_x)))
        labels = dict(zip(test_jobs, test_y))

        self.assertLess(mae(list(model_predictions.values()), test_y),
                        0.85 * mae(np.full(test_y.size, train_labels.mean()), test_y))

        # Baselines see only each job's observed counts before day 30; both sides are scored on the jobs forecast.
        for method, parameters in (("ses", {"alpha": 0.5}), ("croston", {}), ("window-average", {"window": 3}),
                                   ("ar", {"lags": (2,)})):
            with self.subTest(method=method):
                forecast = tsforecast.forecast_corpus(dataset, method, 30, parameters=parameters,
                                                      history=HistoryMode.OBSERVED, short_history=ShortHistory.SES,
                                                      job_ids=test_jobs, on_skip=lambda _: None)
                scored = [prediction.job_id for prediction in forecast.predictions]
                truth = [labels[job_id] for job_id in scored]

                self.assertGreater(len(scored), 0.75 * len(test_jobs))
                self.assertLess(mae([model_predictions[job_id] for job_id in scored], truth),
                                0.85 * mae([prediction.prediction for prediction in forecast.predictions], truth))


if __name__ == "__main__":
    unittest.main()
