"""A small trainable chord classifier with hand-derived gradients"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.signal import convolve2d, correlate2d
from scipy.special import softmax

from .alphabets import AlphabetId, get_alphabet
from .dataset import ChordDataset
from .exceptions import (
    AlphabetMismatchError,
    ConfigError,
    EmptyDatasetError,
    ShapeError,
)
from .similarity import (
    SimilarityMatrix,
    batch_loss,
    batch_loss_gradient,
    soft_targets,
)

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = [
    "epoch",
    "train_loss",
    "val_loss",
    "val_acc",
    "learning_rate",
]


def conv2d(inputs: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """
    Full 2D discrete convolution of one input with a set of kernels.

    Args:
        inputs: T x F matrix
        kernels: M x U x V kernel set

    Returns:
        M x (T+U-1) x (F+V-1) feature maps
    """
    inputs = np.asarray(inputs, dtype=float)
    kernels = np.asarray(kernels, dtype=float)
    if inputs.ndim != 2 or kernels.ndim != 3:
        raise ShapeError(
            f"expected a T x F input and M x U x V kernels, got "
            f"{inputs.shape} and {kernels.shape}"
        )
    if min(inputs.shape) < 1 or min(kernels.shape) < 1:
        raise ShapeError("every dimension must be at least 1")
    if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(kernels))):
        raise ShapeError("inputs and kernels must be finite")
    return np.stack(
        [convolve2d(inputs, kernel, mode="full") for kernel in kernels]
    )


def _encode_array(array: np.ndarray) -> Dict:
    return {"shape": list(array.shape), "data": array.ravel().tolist()}


def _decode_array(payload: Dict) -> np.ndarray:
    return np.asarray(payload["data"], dtype=float).reshape(payload["shape"])


class Layer:
    """Base layer: forward caches what backward needs."""

    kind = "layer"

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.state: Dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def config(self) -> Dict:
        return {}

    def to_dict(self) -> Dict:
        return {
            "type": self.kind,
            "config": self.config(),
            "params": {k: _encode_array(v) for k, v in self.params.items()},
            "state": {k: _encode_array(v) for k, v in self.state.items()},
        }


class Dense(Layer):
    kind = "dense"

    def __init__(
        self,
        n_inputs: int,
        n_outputs: int,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self.params["W"] = rng.normal(
            0.0, 1.0 / np.sqrt(n_inputs), (n_inputs, n_outputs)
        )
        self.params["b"] = np.zeros(n_outputs)

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise ShapeError(
                f"dense layer expects (n, {self.n_inputs}), got {x.shape}"
            )
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads["W"] = self._x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["W"].T

    def config(self):
        return {"n_inputs": self.n_inputs, "n_outputs": self.n_outputs}


class Conv2D(Layer):
    """Full convolution over (n, channels, T, F) inputs, one bias per map."""

    kind = "conv2d"

    def __init__(
        self,
        n_kernels: int,
        n_channels: int,
        height: int,
        width: int,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        if min(n_kernels, n_channels, height, width) < 1:
            raise ShapeError("kernel dimensions must be at least 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_kernels = n_kernels
        self.n_channels = n_channels
        self.height = height
        self.width = width
        fan_in = n_channels * height * width
        self.params["W"] = rng.normal(
            0.0,
            1.0 / np.sqrt(fan_in),
            (n_kernels, n_channels, height, width),
        )
        self.params["b"] = np.zeros(n_kernels)

    def forward(self, x, training=False):
        if x.ndim != 4 or x.shape[1] != self.n_channels:
            raise ShapeError(
                f"conv layer expects (n, {self.n_channels}, T, F), "
                f"got {x.shape}"
            )
        self._x = x
        n, _, t, f = x.shape
        kernels, bias = self.params["W"], self.params["b"]
        out = np.empty(
            (n, self.n_kernels, t + self.height - 1, f + self.width - 1)
        )
        for i in range(n):
            for m in range(self.n_kernels):
                out[i, m] = bias[m] + sum(
                    convolve2d(x[i, c], kernels[m, c], mode="full")
                    for c in range(self.n_channels)
                )
        return out

    def backward(self, grad):
        x, kernels = self._x, self.params["W"]
        d_kernels = np.zeros_like(kernels)
        d_x = np.zeros_like(x)
        for i in range(x.shape[0]):
            for m in range(self.n_kernels):
                for c in range(self.n_channels):
                    d_kernels[m, c] += correlate2d(
                        grad[i, m], x[i, c], mode="valid"
                    )
                    d_x[i, c] += correlate2d(
                        grad[i, m], kernels[m, c], mode="valid"
                    )
        self.grads["W"] = d_kernels
        self.grads["b"] = grad.sum(axis=(0, 2, 3))
        return d_x

    def config(self):
        return {
            "n_kernels": self.n_kernels,
            "n_channels": self.n_channels,
            "height": self.height,
            "width": self.width,
        }


class Tanh(Layer):
    kind = "tanh"

    def forward(self, x, training=False):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad):
        return grad * (1.0 - self._y**2)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Reshape(Layer):
    """Reshape each frame, e.g. 12 chroma bins into a 1 x 1 x 12 patch."""

    kind = "reshape"

    def __init__(self, shape: Sequence[int]):
        super().__init__()
        self.shape = tuple(int(s) for s in shape)

    def forward(self, x, training=False):
        self._shape = x.shape
        try:
            return x.reshape((x.shape[0],) + self.shape)
        except ValueError as e:
            raise ShapeError(str(e)) from e

    def backward(self, grad):
        return grad.reshape(self._shape)

    def config(self):
        return {"shape": list(self.shape)}


class Dropout(Layer):
    """Inverted dropout, active only while training."""

    kind = "dropout"

    def __init__(self, rate: float = 0.0, seed: int = 0):
        super().__init__()
        self.rate = rate
        self.rng = np.random.default_rng(seed)

    def forward(self, x, training=False):
        if not training or self.rate <= 0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask

    def config(self):
        return {"rate": self.rate}


class Standardize(Layer):
    """Fixed input normalization estimated from the training frames."""

    kind = "standardize"

    def __init__(
        self,
        mean: Union[float, np.ndarray] = 0.0,
        std: Union[float, np.ndarray] = 1.0,
    ):
        super().__init__()
        self.state["mean"] = np.asarray(mean, dtype=float)
        self.state["std"] = np.maximum(np.asarray(std, dtype=float), 1e-8)

    def forward(self, x, training=False):
        return (x - self.state["mean"]) / self.state["std"]

    def backward(self, grad):
        return grad / self.state["std"]


LAYER_TYPES = {
    cls.kind: cls
    for cls in (Dense, Conv2D, Tanh, Flatten, Reshape, Dropout, Standardize)
}


def layer_from_dict(payload: Dict) -> Layer:
    layer = LAYER_TYPES[payload["type"]](**payload.get("config", {}))
    for name, array in payload.get("params", {}).items():
        layer.params[name] = _decode_array(array)
    for name, array in payload.get("state", {}).items():
        layer.state[name] = _decode_array(array)
    return layer


class ChordClassifier:
    """Stack of layers whose last output has one logit per chord class."""

    def __init__(
        self, layers: Sequence[Layer], alphabet: Union[AlphabetId, str]
    ):
        self.layers = list(layers)
        self.alphabet = AlphabetId(alphabet)

    @property
    def n_classes(self) -> int:
        return len(get_alphabet(self.alphabet))

    def logits(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out, training)
        if out.ndim != 2 or out.shape[1] != self.n_classes:
            raise ShapeError(
                f"model output {out.shape} does not match "
                f"{self.n_classes} classes"
            )
        return out

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Probability rows over the alphabet, one per frame."""
        return softmax(self.logits(x, training), axis=1)

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        """Fill every layer's grads; returns the gradient w.r.t. the input."""
        grad = grad_logits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def loss_and_gradients(
        self, x: np.ndarray, targets: np.ndarray, training: bool = False
    ) -> float:
        """Mean weighted loss of a batch; fills every layer's grads."""
        logits = self.logits(x, training)
        loss = batch_loss(targets, softmax(logits, axis=1))
        self.backward(batch_loss_gradient(targets, logits))
        return loss

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)

    def parameters(self) -> List[Tuple[Layer, str]]:
        return [
            (layer, name) for layer in self.layers for name in layer.params
        ]

    def get_weights(self) -> List[np.ndarray]:
        return [layer.params[name].copy() for layer, name in self.parameters()]

    def set_weights(self, weights: Sequence[np.ndarray]):
        for (layer, name), value in zip(self.parameters(), weights):
            layer.params[name][...] = value

    def to_dict(self) -> Dict:
        return {
            "alphabet": self.alphabet.value,
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "ChordClassifier":
        return cls(
            [layer_from_dict(p) for p in payload["layers"]],
            payload["alphabet"],
        )


def build_dense_model(
    alphabet: Union[AlphabetId, str],
    n_inputs: int = 12,
    hidden: Sequence[int] = (64,),
    seed: int = 0,
) -> ChordClassifier:
    """Desk-scale preset: chroma -> tanh hidden layers -> class logits."""
    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    width = n_inputs
    for size in hidden:
        layers += [Dense(width, size, rng), Tanh()]
        width = size
    layers.append(Dense(width, len(get_alphabet(alphabet)), rng))
    return ChordClassifier(layers, alphabet)


def build_cnn_model(
    alphabet: Union[AlphabetId, str],
    frame_shape: Sequence[int] = (1, 12),
    kernels: Sequence[int] = (4, 4, 4),
    kernel_size: Tuple[int, int] = (3, 3),
    hidden: int = 64,
    input_mean: Union[float, np.ndarray] = 0.0,
    input_std: Union[float, np.ndarray] = 1.0,
    seed: int = 0,
) -> ChordClassifier:
    """
    Full-size CNN: normalized inputs, three convolution
    layers with dropout between them, then two dense layers.
    """
    rng = np.random.default_rng(seed)
    height, width = kernel_size
    rows, cols = frame_shape
    layers: List[Layer] = [
        Standardize(input_mean, input_std),
        Reshape((1, rows, cols)),
    ]
    channels = 1
    for i, n_kernels in enumerate(kernels):
        layers += [Conv2D(n_kernels, channels, height, width, rng), Tanh()]
        if i < len(kernels) - 1:
            layers.append(Dropout(seed=seed + i))
        channels = n_kernels
        rows, cols = rows + height - 1, cols + width - 1
    flat = channels * rows * cols
    layers += [
        Flatten(),
        Dense(flat, hidden, rng),
        Tanh(),
        Dense(hidden, len(get_alphabet(alphabet)), rng),
    ]
    return ChordClassifier(layers, alphabet)


def save_model(model: ChordClassifier, path: Union[str, Path]):
    with open(path, "w") as f:
        json.dump(model.to_dict(), f)


def load_model(path: Union[str, Path]) -> ChordClassifier:
    with open(path, "r") as f:
        return ChordClassifier.from_dict(json.load(f))


class SGD:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, model: ChordClassifier):
        for layer, name in model.parameters():
            layer.params[name] -= self.learning_rate * layer.grads[name]


class Adam:
    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m: Dict[int, np.ndarray] = {}
        self._v: Dict[int, np.ndarray] = {}

    def step(self, model: ChordClassifier):
        self.t += 1
        for i, (layer, name) in enumerate(model.parameters()):
            grad = layer.grads[name]
            m = self._m.setdefault(i, np.zeros_like(grad))
            v = self._v.setdefault(i, np.zeros_like(grad))
            m *= self.beta1
            m += (1 - self.beta1) * grad
            v *= self.beta2
            v += (1 - self.beta2) * grad**2
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            layer.params[name] -= (
                self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
            )


OPTIMIZERS = {"adam": Adam, "sgd": SGD}


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyperparameters.

    Defaults are the full-scale schedule (Adam, 2e-5, 1000 epochs, LR
    reduced after 50 stale epochs, early stop after 200). Batch size,
    noise and dropout default to plain values.
    """

    learning_rate: float = 2e-5
    max_epochs: int = 1000
    plateau_patience: int = 50
    plateau_factor: float = 0.5
    early_stop_patience: int = 200
    min_delta: float = 0.0
    batch_size: int = 32
    input_noise_std: float = 0.0
    dropout_rate: float = 0.0
    seed: int = 0
    optimizer: str = "adam"
    renormalize_targets: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        for name in (
            "max_epochs",
            "plateau_patience",
            "early_stop_patience",
            "batch_size",
        ):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not 0 < self.plateau_factor < 1:
            raise ConfigError("plateau_factor must be in (0, 1)")
        if self.min_delta < 0 or self.input_noise_std < 0:
            raise ConfigError("min_delta and input_noise_std must be >= 0")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"optimizer must be one of {sorted(OPTIMIZERS)}"
            )

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Settings that converge on synthetic chroma in seconds."""
        values = {"learning_rate": 1e-2, "max_epochs": 200}
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class ModelState:
    """Trained model (restored to its best-validation snapshot) and history."""

    model: ChordClassifier
    history: pd.DataFrame
    best_epoch: int
    best_val_accuracy: float
    best_val_loss: float
    epochs_run: int
    best_weights: List[np.ndarray] = field(default_factory=list)


def accuracy(model: ChordClassifier, dataset: ChordDataset) -> float:
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot score an empty dataset")
    return float(np.mean(model.predict(dataset.features) == dataset.labels))


def _check_alphabets(
    model: ChordClassifier,
    datasets: Sequence[ChordDataset],
    similarity: Optional[SimilarityMatrix],
):
    for dataset in datasets:
        if dataset.alphabet != model.alphabet:
            raise AlphabetMismatchError(
                f"dataset is labelled in {dataset.alphabet.value}, model "
                f"predicts {model.alphabet.value}"
            )
    if similarity is not None and (
        len(similarity) != model.n_classes
        or (
            similarity.alphabet is not None
            and similarity.alphabet != model.alphabet
        )
    ):
        raise AlphabetMismatchError(
            "similarity matrix does not match the model alphabet"
        )


def train(
    model: ChordClassifier,
    dataset: ChordDataset,
    similarity: Optional[SimilarityMatrix] = None,
    config: TrainConfig = TrainConfig(),
    validation: Optional[ChordDataset] = None,
) -> ModelState:
    """
    Train a classifier with the similarity-weighted loss.

    Args:
        model: Classifier to train in place
        dataset: Labelled training frames
        similarity: Normalized similarity matrix for soft targets, or None
            for one-hot targets
        config: Training hyperparameters
        validation: Frames for LR scheduling, early stopping and the
            snapshot; the training frames are used when omitted

    Returns:
        ModelState with the model restored to its best validation accuracy
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("training dataset is empty")
    validation = validation if validation is not None else dataset
    if len(validation) == 0:
        raise EmptyDatasetError("validation dataset is empty")
    _check_alphabets(model, [dataset, validation], similarity)

    # Dropout layers draw from the training seed
    rng = np.random.default_rng(config.seed)
    for layer in model.layers:
        if isinstance(layer, Dropout):
            layer.rate = config.dropout_rate
            layer.rng = np.random.default_rng(rng.integers(2**32))

    # Soft targets are fixed for the whole run
    size = model.n_classes
    targets = soft_targets(
        dataset.labels, similarity, size, config.renormalize_targets
    )
    val_targets = soft_targets(
        validation.labels, similarity, size, config.renormalize_targets
    )
    optimizer = OPTIMIZERS[config.optimizer](config.learning_rate)

    history = []
    best_weights = model.get_weights()
    best_epoch, best_accuracy, snapshot_loss = 0, -1.0, np.inf
    best_val_loss = np.inf
    stale_plateau = stale_early = 0
    n = len(dataset)

    for epoch in range(1, config.max_epochs + 1):
        learning_rate = optimizer.learning_rate
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            features = dataset.features[batch]
            if config.input_noise_std > 0:
                features = features + rng.normal(
                    0.0, config.input_noise_std, features.shape
                )
            model.loss_and_gradients(features, targets[batch], training=True)
            optimizer.step(model)

        # Epoch metrics on clean frames
        train_loss = batch_loss(targets, model.forward(dataset.features))
        val_probs = model.forward(validation.features)
        val_loss = batch_loss(val_targets, val_probs)
        val_acc = float(np.mean(val_probs.argmax(axis=1) == validation.labels))
        history.append(
            [epoch, train_loss, val_loss, val_acc, learning_rate]
        )
        logger.debug(
            "epoch %d: train_loss=%.6f val_loss=%.6f val_acc=%.4f",
            epoch,
            train_loss,
            val_loss,
            val_acc,
        )

        # Snapshot on validation accuracy, ties broken by loss
        if val_acc > best_accuracy or (
            val_acc == best_accuracy and val_loss < snapshot_loss
        ):
            best_weights = model.get_weights()
            best_epoch, best_accuracy, snapshot_loss = (
                epoch,
                val_acc,
                val_loss,
            )

        # Plateau and early stop both watch the validation loss
        if val_loss < best_val_loss - config.min_delta:
            best_val_loss = val_loss
            stale_plateau = stale_early = 0
        else:
            stale_plateau += 1
            stale_early += 1

        if stale_early >= config.early_stop_patience:
            logger.info(
                "Early stop at epoch %d: no validation improvement in %d "
                "epochs",
                epoch,
                stale_early,
            )
            break
        if stale_plateau >= config.plateau_patience:
            optimizer.learning_rate *= config.plateau_factor
            stale_plateau = 0
            logger.info(
                "Epoch %d: learning rate reduced to %g",
                epoch,
                optimizer.learning_rate,
            )

    model.set_weights(best_weights)
    return ModelState(
        model=model,
        history=pd.DataFrame(history, columns=HISTORY_COLUMNS),
        best_epoch=best_epoch,
        best_val_accuracy=best_accuracy,
        best_val_loss=snapshot_loss,
        epochs_run=len(history),
        best_weights=best_weights,
    )
