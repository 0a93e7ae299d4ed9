"""Feed-forward multilayer perceptron with logistic units.

Forward pass per non-input neuron: y_j = f(theta_j + sum_i w_ij * y_i).
Backpropagation error deltas: output layer delta = y'(desired - y),
hidden layers delta_i = y_i' * sum_j w_ij * delta_j, with the logistic
shortcut y' = y * (1 - y). Updates ascend the deltas toward lower
error: w_ij += eta * delta_j * y_i; thresholds update like weights with
a constant input of 1.

Supports online (per-sample) and batch (one averaged update per epoch)
training, an error-limit/max-epochs stopping rule, an optional
validation set, and exact JSON serialization for retraining.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (BadFormat, EmptyTrainingSet, ShapeMismatch,
                     TargetOutOfRange, UnsupportedVersion)

MODEL_VERSION = 1

# Pre-activation clamp keeps exp() finite; output clipped one ULP into
# (0,1) because float64 rounds the logistic to exactly 1.0 beyond ~36.
_X_CLAMP = 500.0
_Y_LO = np.nextafter(0.0, 1.0)
_Y_HI = np.nextafter(1.0, 0.0)


def logistic(x):
    """1/(1+e^-x), stable for any input, strictly inside (0,1)."""
    x = np.clip(np.asarray(x, dtype=np.float64), -_X_CLAMP, _X_CLAMP)
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                 np.exp(x) / (1.0 + np.exp(x)))
    y = np.clip(y, _Y_LO, _Y_HI)
    return float(y) if y.ndim == 0 else y


class MlpNetwork:
    """Fully connected layers; weights[l] has shape (from, to) and
    thresholds[l] one bias per neuron of layer l+1.

    input_activation=False passes inputs through unchanged (they are
    already normalized to [0,1]); True squashes them with the logistic
    for compatibility with networks trained that way.
    """

    def __init__(self, layer_sizes, weights, thresholds, input_activation=False):
        layer_sizes = [int(n) for n in layer_sizes]
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise ShapeMismatch(f"need >=2 positive layer sizes, got {layer_sizes}")
        if len(weights) != len(layer_sizes) - 1 or len(thresholds) != len(layer_sizes) - 1:
            raise ShapeMismatch("one weight matrix and threshold vector per layer pair")
        self.layer_sizes = layer_sizes
        self.weights = []
        self.thresholds = []
        for l, (n_from, n_to) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            w = np.asarray(weights[l], dtype=np.float64)
            t = np.asarray(thresholds[l], dtype=np.float64).ravel()
            if w.shape != (n_from, n_to):
                raise ShapeMismatch(
                    f"weights[{l}] must be {(n_from, n_to)}, got {w.shape}")
            if t.shape != (n_to,):
                raise ShapeMismatch(
                    f"thresholds[{l}] must have {n_to} entries, got {t.shape}")
            self.weights.append(w.copy())
            self.thresholds.append(t.copy())
        self.input_activation = bool(input_activation)

    @classmethod
    def random(cls, layer_sizes, seed=0, init_range=0.1, input_activation=False):
        """Fresh network with weights and thresholds drawn uniformly
        from [-init_range, init_range] by a seeded generator."""
        rng = np.random.default_rng(seed)
        weights, thresholds = [], []
        for n_from, n_to in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(rng.uniform(-init_range, init_range, (n_from, n_to)))
            thresholds.append(rng.uniform(-init_range, init_range, n_to))
        return cls(layer_sizes, weights, thresholds, input_activation)

    @classmethod
    def default(cls, seed=0, init_range=0.1):
        """The histogram-to-filter placement architecture: 2048 reduced
        histogram inputs, 16 hidden neurons, 8 geometry outputs."""
        return cls.random([2048, 16, 8], seed=seed, init_range=init_range)

    def copy(self):
        return MlpNetwork(self.layer_sizes, self.weights, self.thresholds,
                          self.input_activation)


def forward_all(net: MlpNetwork, x):
    """Activations of every layer for one input vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape != (net.layer_sizes[0],):
        raise ShapeMismatch(
            f"input length {x.size} != input layer {net.layer_sizes[0]}")
    activations = [logistic(x) if net.input_activation else x]
    for w, theta in zip(net.weights, net.thresholds):
        activations.append(logistic(theta + activations[-1] @ w))
    return activations


def forward(net: MlpNetwork, x):
    """Output activations for one input vector."""
    return forward_all(net, x)[-1]


def backprop(net: MlpNetwork, x, desired):
    """Error deltas for one sample: (weight_deltas, threshold_deltas).

    weight_deltas[l][i, j] = delta_j * y_i, the per-weight update factor
    before the learning rate; threshold deltas are the raw neuron
    deltas. The deltas point toward lower squared error when *added*.
    """
    desired = np.asarray(desired, dtype=np.float64).ravel()
    if desired.shape != (net.layer_sizes[-1],):
        raise ShapeMismatch(
            f"target length {desired.size} != output layer {net.layer_sizes[-1]}")
    acts = forward_all(net, x)
    y = acts[-1]
    delta = y * (1.0 - y) * (desired - y)
    weight_deltas = [None] * len(net.weights)
    threshold_deltas = [None] * len(net.weights)
    for l in range(len(net.weights) - 1, -1, -1):
        weight_deltas[l] = np.outer(acts[l], delta)
        threshold_deltas[l] = delta
        if l > 0:
            yl = acts[l]
            delta = yl * (1.0 - yl) * (net.weights[l] @ delta)
    return weight_deltas, threshold_deltas


def apply_update(net: MlpNetwork, deltas, learning_rate):
    """w_ij += eta * delta_j * y_i on every weight and threshold.
    Mutates net in place and returns it."""
    weight_deltas, threshold_deltas = deltas
    for l in range(len(net.weights)):
        net.weights[l] += learning_rate * weight_deltas[l]
        net.thresholds[l] += learning_rate * threshold_deltas[l]
    return net


def mse(net: MlpNetwork, samples) -> float:
    """Mean over samples and output components of (desired - y)^2."""
    total = 0.0
    for x, target in samples:
        err = np.asarray(target, dtype=np.float64).ravel() - forward(net, x)
        total += float(np.mean(err * err))
    return total / len(samples)


@dataclass
class TrainConfig:
    """Knobs for train(). learning_rate outside the usual [0.05, 0.3]
    band is accepted with a warning; init_seed/init_range are consumed
    by callers that create fresh networks (e.g. the learning-curve
    experiment)."""

    learning_rate: float = 0.2
    mode: str = "online"
    max_epochs: int = 1000
    error_limit: float | None = None
    shuffle_seed: int = 0
    init_seed: int = 0
    init_range: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.learning_rate < 1.0:
            raise ValueError(f"learning_rate must be in (0,1), got {self.learning_rate}")
        if not 0.05 <= self.learning_rate <= 0.3:
            warnings.warn(f"learning_rate {self.learning_rate} outside the "
                          "usual [0.05, 0.3] band", stacklevel=2)
        if self.mode not in ("online", "batch"):
            raise ValueError(f"mode must be 'online' or 'batch', got {self.mode!r}")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")


@dataclass
class TrainReport:
    """Per-epoch training MSE (measured after each epoch's updates),
    the final validation MSE when a validation set was supplied, and
    why training stopped."""

    epoch_mse: list = field(default_factory=list)
    validation_mse: float | None = None
    epochs_run: int = 0
    stop_reason: str = "max_epochs"


def _zero_deltas(net):
    return ([np.zeros_like(w) for w in net.weights],
            [np.zeros_like(t) for t in net.thresholds])


def train(net: MlpNetwork, samples, cfg: TrainConfig, validation=None):
    """Backpropagation training loop. Returns (net, TrainReport).

    Online mode updates after every sample in an order reshuffled each
    epoch from cfg.shuffle_seed; batch mode averages the per-sample
    deltas (all computed at the epoch's starting weights) into one
    update, so the learning rate means the same in both modes. Stops
    when the epoch MSE drops below cfg.error_limit or at max_epochs.
    """
    samples = [(np.asarray(x, dtype=np.float64).ravel(),
                np.asarray(t, dtype=np.float64).ravel()) for x, t in samples]
    if not samples:
        raise EmptyTrainingSet("no training samples")
    for _, target in samples:
        if target.size and (target.min() < 0.0 or target.max() > 1.0):
            raise TargetOutOfRange(
                "targets must lie in [0,1], the logistic output range")

    rng = np.random.default_rng(cfg.shuffle_seed)
    report = TrainReport()
    for _ in range(cfg.max_epochs):
        if cfg.mode == "online":
            for idx in rng.permutation(len(samples)):
                x, target = samples[idx]
                apply_update(net, backprop(net, x, target), cfg.learning_rate)
        else:
            acc_w, acc_t = _zero_deltas(net)
            for x, target in samples:
                dw, dt = backprop(net, x, target)
                for l in range(len(acc_w)):
                    acc_w[l] += dw[l]
                    acc_t[l] += dt[l]
            n = float(len(samples))
            apply_update(net, ([w / n for w in acc_w], [t / n for t in acc_t]),
                         cfg.learning_rate)
        report.epoch_mse.append(mse(net, samples))
        report.epochs_run += 1
        if cfg.error_limit is not None and report.epoch_mse[-1] < cfg.error_limit:
            report.stop_reason = "error_limit"
            break
    if validation:
        report.validation_mse = mse(net, validation)
    return net, report


def save_model(net: MlpNetwork) -> bytes:
    """JSON model bytes; floats round-trip exactly via repr."""
    obj = {
        "version": MODEL_VERSION,
        "layers": net.layer_sizes,
        "activation": "logistic",
        "input_activation": net.input_activation,
        "weights": [w.ravel().tolist() for w in net.weights],
        "thresholds": [t.tolist() for t in net.thresholds],
    }
    return json.dumps(obj).encode("utf-8")


def load_model(data: bytes) -> MlpNetwork:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadFormat(f"not a model file: {exc}") from exc
    if not isinstance(obj, dict) or "version" not in obj:
        raise BadFormat("missing version field")
    if obj["version"] != MODEL_VERSION:
        raise UnsupportedVersion(f"model version {obj['version']}, "
                                 f"this code reads {MODEL_VERSION}")
    try:
        layers = [int(n) for n in obj["layers"]]
        if obj.get("activation", "logistic") != "logistic":
            raise BadFormat(f"unknown activation {obj['activation']!r}")
        weights = [np.asarray(w, dtype=np.float64).reshape(n_from, n_to)
                   for w, n_from, n_to in zip(obj["weights"], layers[:-1], layers[1:])]
        thresholds = [np.asarray(t, dtype=np.float64) for t in obj["thresholds"]]
        return MlpNetwork(layers, weights, thresholds,
                          input_activation=bool(obj.get("input_activation", False)))
    except BadFormat:
        raise
    except (KeyError, TypeError, ValueError, ShapeMismatch) as exc:
        raise BadFormat(f"malformed model: {exc}") from exc
