"""
Multilayer-perceptron regressor trained from scratch.

ReLU hidden layers and one identity output unit, Glorot-uniform weights with zero biases, mean L1 loss, Adam with
bias correction, and early stopping that restores the weights of the best validation epoch. Weight matrices are
stored ``(fan_in, fan_out)`` so a batch ``X`` of shape ``(B, fan_in)`` propagates as ``X @ W + b``.
"""

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Final, NamedTuple

import numpy as np

from jacforecast.cli import reporters
from jacforecast.cli.types import ErrorReporter, JsonObject
from . import tables
from .datamodel import Dataset, Split
from .errors import ConfigError, DataError, ModelError
from .evalreport import mae
from .featfusion import FeatureMatrix

#: Hidden layer sizes used when none are configured.
DEFAULT_HIDDEN_DIMS: Final[tuple[int, ...]] = (256, 128, 64, 32)

#: Version of the model file format.
MODEL_FORMAT_VERSION: Final[int] = 1

# Seed stream of the per-epoch shuffles.
_SHUFFLE_STREAM: Final[int] = 1


class FeatureKind(StrEnum):
    """Where model inputs come from."""
    FUSED = "fused"
    EMBEDDINGS = "embeddings"


class TrainingMode(StrEnum):
    """One model per day value, or one model with a day feature."""
    SEPARATE = "separate"
    JOINT = "joint"


@dataclass(frozen=True, kw_only=True, slots=True)
class TrainConfig:
    """
    Training hyperparameters.

    Attributes:
        learning_rate: Adam step size.
        batch_size: Rows per mini-batch.
        max_epochs: Upper bound on epochs (``0`` returns the initialized model).
        patience: Consecutive non-improving epochs tolerated before stopping.
        beta1: Adam first-moment decay.
        beta2: Adam second-moment decay.
        epsilon: Adam denominator guard.
        min_improvement: Decrease of validation MAE that counts as an improvement.
        hidden_dims: Hidden layer sizes.
        seed: Seed for initialization and batch order.
    """
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    min_improvement: float = 1e-6
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    seed: int = 7

    def __post_init__(self) -> None:
        """Enforce the configuration invariants."""
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")

        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")

        if self.patience < 1:
            raise ConfigError("patience must be >= 1")

        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must be in [0, 1)")

        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")

        if self.min_improvement < 0:
            raise ConfigError("min_improvement must be >= 0")

        if any(dimension < 1 for dimension in self.hidden_dims):
            raise ConfigError("hidden_dims must be >= 1")

        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


class Layer(NamedTuple):
    """Weights ``(fan_in, fan_out)`` and bias ``(fan_out,)`` of one dense layer; also used for gradients."""
    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True, slots=True)
class MlpModel:
    """Dense layers with ReLU on hidden layers and a single identity output unit."""
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        """Enforce chained layer dimensions and a single output."""
        if not self.layers:
            raise ModelError("a model needs at least one layer")

        for index, layer in enumerate(self.layers):
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.weights.shape[1],):
                raise ModelError(f"layer {index}: bias does not match weights")

            if index and layer.weights.shape[0] != self.layers[index - 1].weights.shape[1]:
                raise ModelError(f"layer {index}: expected {self.layers[index - 1].weights.shape[1]} inputs, "
                                 f"found {layer.weights.shape[0]}")

        if self.layers[-1].weights.shape[1] != 1:
            raise ModelError("output dimension must be 1")

    @classmethod
    def initialize(cls, input_dim: int, hidden_dims: Sequence[int], seed: int) -> "MlpModel":
        """Return a Glorot-initialized model; layer ``i`` draws from the seed entropy ``[seed, 0, i]``."""
        sizes = (input_dim, *hidden_dims, 1)

        return cls(tuple(Layer(glorot_init(fan_in, fan_out, [seed, 0, index]), np.zeros(fan_out))
                         for index, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:]))))

    @property
    def hidden_dims(self) -> tuple[int, ...]:
        """Return the hidden layer sizes."""
        return tuple(layer.weights.shape[1] for layer in self.layers[:-1])

    @property
    def input_dim(self) -> int:
        """Return the expected feature count."""
        return self.layers[0].weights.shape[0]

    @classmethod
    def from_json(cls, document: JsonObject) -> "MlpModel":
        """Return a model from its JSON form; raises ``ModelError`` for malformed documents."""
        try:
            layers = tuple(Layer(np.array(layer["weights"], dtype=np.float64).reshape(len(layer["weights"]), -1),
                                 np.array(layer["bias"], dtype=np.float64)) for layer in document["layers"])
        except (KeyError, TypeError, ValueError) as error:
            raise ModelError(f"malformed model layers ({error!r})") from None

        model = cls(layers)

        if model.input_dim != document.get("input_dim") or list(model.hidden_dims) != document.get("hidden_dims"):
            raise ModelError("model dimensions do not match its layers")

        return model

    def to_json(self) -> JsonObject:
        """Return the JSON form of the model."""
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "layers": [{"weights": layer.weights.tolist(), "bias": layer.bias.tolist()} for layer in self.layers],
        }


@dataclass(frozen=True, slots=True)
class OptimizerState:
    """Adam moment accumulators mirroring the model parameters, and the number of steps taken."""
    m: tuple[Layer, ...]
    v: tuple[Layer, ...]
    step: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "OptimizerState":
        """Return a fresh state for ``model``."""
        zeros = tuple(Layer(np.zeros_like(layer.weights), np.zeros_like(layer.bias)) for layer in model.layers)

        return cls(zeros, zeros, 0)


class ForwardCache(NamedTuple):
    """Layer inputs and pre-activations recorded by ``forward_cached``."""
    inputs: tuple[np.ndarray, ...]
    pre_activations: tuple[np.ndarray, ...]


class EpochRecord(NamedTuple):
    """Training loss and validation MAE after one epoch."""
    epoch: int
    train_loss: float
    val_mae: float


@dataclass(slots=True)
class EarlyStopping:
    """
    Tracks the best validation value and stops after ``patience`` consecutive non-improving epochs.

    An epoch improves when its value is below the best by at least ``min_improvement``.
    """
    patience: int
    min_improvement: float = 1e-6
    best_value: float = math.inf
    best_epoch: int = 0
    best_model: MlpModel | None = None
    stale_epochs: int = field(default=0, init=False)

    def update(self, epoch: int, value: float, model: MlpModel | None = None) -> bool:
        """Record the value of ``epoch``; returns ``True`` when training should stop."""
        if value < self.best_value - self.min_improvement:
            self.best_value = value
            self.best_epoch = epoch
            self.best_model = model
            self.stale_epochs = 0
        else:
            self.stale_epochs += 1

        return self.stale_epochs >= self.patience


class TrainResult(NamedTuple):
    """A trained model, its per-epoch history, and the epoch whose weights it carries (``0`` when untrained)."""
    model: MlpModel
    history: tuple[EpochRecord, ...]
    best_epoch: int


@dataclass(frozen=True, slots=True)
class FeatureSource:
    """
    Rows of features with their keys, splits, and labels, from a fused feature matrix or imported LM embeddings.

    Attributes:
        keys: ``(job_id, t)`` of each row.
        splits: Split of each row.
        values: Feature matrix, one row per key.
        labels: Observed counts.
    """
    keys: tuple[tuple[str, int], ...]
    splits: tuple[Split | None, ...]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        """Enforce one feature row, split, and label per key."""
        if self.values.ndim != 2 or not (len(self.keys) == len(self.splits) == self.values.shape[0]
                                         == self.labels.shape[0]):
            raise ModelError("feature rows, keys, splits, and labels must align")

    @classmethod
    def from_embeddings(cls, embeddings: Mapping[tuple[str, int], np.ndarray], dataset: Dataset, *,
                        on_error: ErrorReporter = reporters.raises(DataError)) -> "FeatureSource":
        """Join LM embeddings with the observations and splits of ``dataset``; missing vectors are reported."""
        keys, splits, rows, labels = [], [], [], []
        dimension = next((vector.size for vector in embeddings.values()), 0)

        for observation in dataset.observations:
            vector = embeddings.get((observation.job_id, observation.t))

            if vector is None:
                on_error(f"no embedding for job {observation.job_id!r} at t={observation.t}")
                continue

            if vector.size != dimension:
                raise ModelError(f"embedding dimension mismatch for job {observation.job_id!r} at t={observation.t}")

            keys.append((observation.job_id, observation.t))
            splits.append(dataset.splits.get(observation.job_id))
            rows.append(vector)
            labels.append(observation.jac)

        values = np.array(rows, dtype=np.float64).reshape(len(rows), dimension)

        return cls(tuple(keys), tuple(splits), values, np.array(labels, dtype=np.float64))

    @classmethod
    def from_matrix(cls, matrix: FeatureMatrix) -> "FeatureSource":
        """Return the rows of a fused feature matrix."""
        return cls(matrix.keys, matrix.splits, matrix.values, matrix.labels)

    @property
    def dimension(self) -> int:
        """Return the number of features per row."""
        return self.values.shape[1]

    def days(self) -> tuple[int, ...]:
        """Return the distinct days in ascending order."""
        return tuple(sorted({t for _, t in self.keys}))

    def select(self, split: Split, day: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(features, labels)`` of the rows in ``split`` (and at ``day`` when given)."""
        mask = np.array([s == split and (day is None or t == day) for s, (_, t) in zip(self.splits, self.keys)],
                        dtype=bool).reshape(-1)

        return self.values[mask], self.labels[mask]

    def subset(self, split: Split) -> "FeatureSource":
        """Return the rows in ``split``."""
        indices = [i for i, s in enumerate(self.splits) if s == split]

        return FeatureSource(tuple(self.keys[i] for i in indices), tuple(self.splits[i] for i in indices),
                             self.values[indices].reshape(len(indices), self.dimension), self.labels[indices])


@dataclass(frozen=True, kw_only=True, slots=True)
class ModelBundle:
    """
    Trained models with the feature description they expect.

    Attributes:
        mode: Separate (one model per day) or joint (one model, key ``None``).
        models: Model per day (separate) or under ``None`` (joint).
        feature_kind: Fused features or imported LM embeddings.
        layout: Feature layout descriptor.
        normalization: Normalization statistics of the features.
    """
    mode: TrainingMode
    models: Mapping[int | None, MlpModel]
    feature_kind: FeatureKind = FeatureKind.FUSED
    layout: JsonObject = field(default_factory=dict)
    normalization: JsonObject = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Enforce the model keys of the mode and a common input dimension."""
        if not self.models:
            raise ModelError("a bundle needs at least one model")

        if self.mode is TrainingMode.JOINT and list(self.models) != [None]:
            raise ModelError("a joint bundle holds exactly one model")

        if self.mode is TrainingMode.SEPARATE and None in self.models:
            raise ModelError("a separate bundle holds one model per day")

        if len({model.input_dim for model in self.models.values()}) != 1:
            raise ModelError("models of a bundle must share the input dimension")

    @property
    def input_dim(self) -> int:
        """Return the expected feature count."""
        return next(iter(self.models.values())).input_dim

    def model_for(self, day: int) -> MlpModel:
        """Return the model that predicts ``day``; raises ``ModelError`` when none was trained for it."""
        model = self.models.get(None if self.mode is TrainingMode.JOINT else day)

        if model is None:
            raise ModelError(f"no model for day {day}")

        return model

    def predict(self, source: FeatureSource) -> np.ndarray:
        """Return raw predictions for every row of ``source``."""
        if source.dimension != self.input_dim:
            raise ModelError(f"expected {self.input_dim} features, found {source.dimension}")

        if self.mode is TrainingMode.JOINT:
            return predict_batch(self.models[None], source.values)

        predictions = np.empty(len(source.keys))

        for day in source.days():
            mask = np.array([t == day for _, t in source.keys], dtype=bool)
            predictions[mask] = predict_batch(self.model_for(day), source.values[mask])

        return predictions


def adam_step(model: MlpModel, state: OptimizerState, gradients: Sequence[Layer],
              config: TrainConfig) -> tuple[MlpModel, OptimizerState]:
    """Return the model and state after one bias-corrected Adam update."""
    if len(gradients) != len(model.layers) or len(state.m) != len(model.layers):
        raise ModelError("gradients and optimizer state must have one entry per layer")

    step = state.step + 1
    layers, first_moments, second_moments = [], [], []

    for layer, gradient, m, v in zip(model.layers, gradients, state.m, state.v):
        updated, new_m, new_v = [], [], []

        for parameter, g, m_part, v_part in zip(layer, gradient, m, v):
            if g.shape != parameter.shape or m_part.shape != parameter.shape:
                raise ModelError(f"gradient shape {g.shape} does not match parameter shape {parameter.shape}")

            m_part = config.beta1 * m_part + (1.0 - config.beta1) * g
            v_part = config.beta2 * v_part + (1.0 - config.beta2) * g * g
            m_hat = m_part / (1.0 - config.beta1 ** step)
            v_hat = v_part / (1.0 - config.beta2 ** step)
            updated.append(parameter - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon))
            new_m.append(m_part)
            new_v.append(v_part)

        layers.append(Layer(*updated))
        first_moments.append(Layer(*new_m))
        second_moments.append(Layer(*new_v))

    return MlpModel(tuple(layers)), OptimizerState(tuple(first_moments), tuple(second_moments), step)


def backward(model: MlpModel, cache: ForwardCache, targets: np.ndarray) -> tuple[Layer, ...]:
    """
    Return the gradients of the mean L1 loss with respect to every weight and bias.

    - ``dL/dy_hat = sign(y_hat - y) / batch_size`` with ``sign(0) = 0``; the ReLU derivative at ``0`` is ``0``.
    """
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    output = cache.pre_activations[-1][:, 0]

    if output.shape != targets.shape:
        raise ModelError(f"expected {output.size} targets, found {targets.size}")

    delta = (np.sign(output - targets) / targets.size)[:, np.newaxis]
    gradients: list[Layer] = []

    for index in range(len(model.layers) - 1, -1, -1):
        gradients.append(Layer(cache.inputs[index].T @ delta, delta.sum(axis=0)))

        if index:
            delta = (delta @ model.layers[index].weights.T) * (cache.pre_activations[index - 1] > 0)

    return tuple(reversed(gradients))


def forward(model: MlpModel, x: Sequence[float] | np.ndarray) -> float:
    """Return the prediction for one feature vector; raises ``ModelError`` on a dimension mismatch."""
    features = np.asarray(x, dtype=np.float64).reshape(-1)

    if features.size != model.input_dim:
        raise ModelError(f"expected {model.input_dim} features, found {features.size}")

    return float(predict_batch(model, features[np.newaxis, :])[0])


def forward_cached(model: MlpModel, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Return batch predictions and the cache ``backward`` needs."""
    activation = _check_batch(model, batch)
    inputs, pre_activations = [], []

    for index, layer in enumerate(model.layers):
        inputs.append(activation)
        pre_activation = activation @ layer.weights + layer.bias
        pre_activations.append(pre_activation)
        activation = np.maximum(pre_activation, 0.0) if index < len(model.layers) - 1 else pre_activation

    return activation[:, 0], ForwardCache(tuple(inputs), tuple(pre_activations))


def glorot_init(fan_in: int, fan_out: int, seed: int | Sequence[int]) -> np.ndarray:
    """Return a ``(fan_in, fan_out)`` matrix drawn uniformly from ``[-L, L]``, ``L = sqrt(6 / (fan_in + fan_out))``."""
    if fan_in < 1 or fan_out < 1:
        raise ModelError("fan_in and fan_out must be >= 1")

    limit = math.sqrt(6.0 / (fan_in + fan_out))

    return np.random.default_rng(seed).uniform(-limit, limit, size=(fan_in, fan_out))


def l1_loss(prediction: float | np.ndarray, target: float | np.ndarray) -> float:
    """Return the mean absolute difference (a single ``|prediction - target|`` for scalars)."""
    return float(np.mean(np.abs(np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64))))


def load_model(path: str, *, on_error: ErrorReporter = reporters.raises(DataError)) -> ModelBundle | None:
    """Return the bundle stored in ``path``, or ``None`` after reporting an unreadable file."""
    document = tables.read_json(path, on_error=on_error)

    if document is None:
        return None

    if document.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path!r}: unsupported model format version {document.get('version')!r}")

    try:
        mode = TrainingMode(document["mode"])
        kind = FeatureKind(document.get("feature_kind", FeatureKind.FUSED))
        models = {entry["day"]: MlpModel.from_json(entry) for entry in document["models"]}
    except (KeyError, TypeError, ValueError) as error:
        if isinstance(error, ModelError):
            raise

        raise ModelError(f"{path!r}: malformed model file ({error!r})") from None

    return ModelBundle(mode=mode, models=models, feature_kind=kind,
                       layout=document.get("layout", {}), normalization=document.get("normalization", {}))


def predict_batch(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """Return raw predictions for a ``(rows, input_dim)`` batch."""
    activation = _check_batch(model, batch)

    for index, layer in enumerate(model.layers):
        activation = activation @ layer.weights + layer.bias

        if index < len(model.layers) - 1:
            activation = np.maximum(activation, 0.0)

    return activation[:, 0]


def save_model(path: str, bundle: ModelBundle, *, on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """Write ``bundle`` as single-line JSON; returns ``True`` on success."""
    document = {
        "version": MODEL_FORMAT_VERSION,
        "mode": bundle.mode.value,
        "feature_kind": bundle.feature_kind,
        "models": [{"day": day, **model.to_json()}
                   for day, model in sorted(bundle.models.items(), key=lambda item: item[0] or 0)],
        "layout": bundle.layout,
        "normalization": bundle.normalization,
    }

    return tables.write_json(path, document, indent=None, on_error=on_error)


def train(train_x: np.ndarray, train_y: np.ndarray, val_x: np.ndarray, val_y: np.ndarray, config: TrainConfig, *,
          on_epoch: Callable[[EpochRecord], None] | None = None) -> TrainResult:
    """
    Train a model with mini-batch Adam and early stopping on validation MAE.

    - Batches are reshuffled every epoch from ``config.seed``.
    - Returns the weights of the best validation epoch (the initialized model when ``max_epochs`` is ``0``).
    - Raises ``DataError`` for an empty training or validation split and ``ModelError`` on a dimension mismatch.
    """
    train_x, val_x = np.asarray(train_x, dtype=np.float64), np.asarray(val_x, dtype=np.float64)
    train_y, val_y = np.asarray(train_y, dtype=np.float64), np.asarray(val_y, dtype=np.float64)

    if not train_x.shape[0]:
        raise DataError("empty train split")

    if not val_x.shape[0]:
        raise DataError("empty val split")

    if train_x.ndim != 2 or val_x.ndim != 2 or val_x.shape[1] != train_x.shape[1]:
        raise ModelError("train and val features must be matrices with the same number of columns")

    model = MlpModel.initialize(train_x.shape[1], config.hidden_dims, config.seed)
    state = OptimizerState.zeros_like(model)
    shuffler = np.random.default_rng([config.seed, _SHUFFLE_STREAM])
    stopping = EarlyStopping(config.patience, config.min_improvement, best_model=model)
    history: list[EpochRecord] = []

    for epoch in range(1, config.max_epochs + 1):
        order = shuffler.permutation(train_x.shape[0])
        loss_sum = 0.0

        for start in range(0, order.size, config.batch_size):
            rows = order[start:start + config.batch_size]
            predictions, cache = forward_cached(model, train_x[rows])
            loss_sum += l1_loss(predictions, train_y[rows]) * rows.size
            model, state = adam_step(model, state, backward(model, cache, train_y[rows]), config)

        record = EpochRecord(epoch, loss_sum / order.size, mae(predict_batch(model, val_x), val_y))
        history.append(record)

        if on_epoch:
            on_epoch(record)

        if stopping.update(epoch, record.val_mae, model):
            break

    return TrainResult(stopping.best_model, tuple(history), stopping.best_epoch)


def train_models(source: FeatureSource, config: TrainConfig, *, mode: TrainingMode,
                 days: Iterable[int] | None = None,
                 on_epoch: Callable[[int | None, EpochRecord], None] | None = None) -> dict[int | None, TrainResult]:
    """
    Train one joint model (key ``None``) or one model per day on the train and val rows of ``source``.

    - Separate mode trains the given ``days`` (default: every day with training rows).
    """
    if mode is TrainingMode.JOINT:
        targets: tuple[int | None, ...] = (None,)
    else:
        train_days = {t for (_, t), split in zip(source.keys, source.splits) if split is Split.TRAIN}
        targets = tuple(sorted(days if days is not None else train_days))

    results: dict[int | None, TrainResult] = {}

    for day in targets:
        train_x, train_y = source.select(Split.TRAIN, day)
        val_x, val_y = source.select(Split.VAL, day)

        if day is not None and not (train_x.shape[0] and val_x.shape[0]):
            raise DataError(f"day {day}: empty train or val split")

        callback = (lambda record, day=day: on_epoch(day, record)) if on_epoch else None
        results[day] = train(train_x, train_y, val_x, val_y, config, on_epoch=callback)

    return results


def write_history(path: str, histories: Mapping[int | None, Sequence[EpochRecord]], *,
                  on_error: ErrorReporter = reporters.raises(DataError)) -> bool:
    """
    Write ``epoch,train_loss,val_mae`` rows; separate-mode histories get a leading ``day`` column.
    """
    joint = list(histories) == [None]
    header = ("epoch", "train_loss", "val_mae") if joint else ("day", "epoch", "train_loss", "val_mae")
    rows = []

    for day in sorted(histories, key=lambda key: key or 0):
        for record in histories[day]:
            values = (record.epoch, repr(record.train_loss), repr(record.val_mae))
            rows.append(values if joint else (day, *values))

    return tables.write_csv(path, header=header, rows=rows, on_error=on_error)


def _check_batch(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """Return ``batch`` as a float matrix; raises ``ModelError`` on a dimension mismatch."""
    batch = np.asarray(batch, dtype=np.float64)

    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ModelError(f"expected a batch with {model.input_dim} features, found shape {batch.shape}")

    return batch


__all__: Final[tuple[str, ...]] = (
    "DEFAULT_HIDDEN_DIMS",
    "EarlyStopping",
    "EpochRecord",
    "FeatureKind",
    "FeatureSource",
    "ForwardCache",
    "Layer",
    "MODEL_FORMAT_VERSION",
    "MlpModel",
    "ModelBundle",
    "OptimizerState",
    "TrainConfig",
    "TrainResult",
    "TrainingMode",
    "adam_step",
    "backward",
    "forward",
    "forward_cached",
    "glorot_init",
    "l1_loss",
    "load_model",
    "predict_batch",
    "save_model",
    "train",
    "train_models",
    "write_history",
)
