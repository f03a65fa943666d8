"""Dense networks replacing the linear mappings, implemented on numpy.

Comprehension networks end in a linear layer and train with mean squared
error; production networks end in a sigmoid and train with binary
cross-entropy. Hidden layers use ReLU. Training is plain minibatch SGD with
a fixed learning rate, which keeps epoch training and the single-example
online step used in trial-to-trial simulation on the same footing.

Both losses are batch means of per-example sums over output dimensions:

    mse(P, Y) = sum((P - Y)^2) / n_batch
    bce(P, Y) = -sum(Y log P + (1 - Y) log(1 - P)) / n_batch
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import evaluate
from .exceptions import (FileFormatError, InputError, ShapeError,
                         TrainingDivergedError)
from .linalg import as_matrix, as_vector

ACTIVATIONS = ("none", "relu", "sigmoid")
TASKS = ("comprehension", "production")
LOSSES = ("mse", "bce")

_MAGIC = b"LXDN"
_VERSION = 1
_HEADER = struct.Struct("<4sHBQH")
_LAYER_HEADER = struct.Struct("<QQBB")

_BCE_EPS = 1e-12


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: output width, nonlinearity, optional bias.

    ``use_bias=False`` gives a pure matrix multiplication, needed when a
    single-layer network must behave exactly like a linear mapping.
    """

    output_dim: int
    activation: str = "relu"
    use_bias: bool = True

    def __post_init__(self):
        if self.output_dim < 1:
            raise InputError(f"output_dim must be >= 1, got {self.output_dim}")
        if self.activation not in ACTIVATIONS:
            raise InputError(f"unknown activation '{self.activation}'")


class DeepNetwork:
    """Layer stack with weights/biases, task flavour and init seed.

    The final activation is pinned by the task: comprehension networks end
    in "none", production networks in "sigmoid". Weights initialise uniformly
    in +-sqrt(6 / (fan_in + fan_out)) under the seed; biases start at zero.
    """

    def __init__(self, input_dim, layer_specs, task="comprehension", seed=0):
        if task not in TASKS:
            raise InputError(f"unknown task '{task}'")
        layer_specs = tuple(layer_specs)
        if not layer_specs:
            raise InputError("a network needs at least one layer")
        final = layer_specs[-1].activation
        required = "none" if task == "comprehension" else "sigmoid"
        if final != required:
            raise InputError(
                f"{task} networks must end in '{required}', got '{final}'")
        self.input_dim = int(input_dim)
        self.layer_specs = layer_specs
        self.task = task
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        fan_in = self.input_dim
        for spec in layer_specs:
            limit = np.sqrt(6.0 / (fan_in + spec.output_dim))
            self.weights.append(
                rng.uniform(-limit, limit, size=(fan_in, spec.output_dim)))
            self.biases.append(
                np.zeros(spec.output_dim) if spec.use_bias else None)
            fan_in = spec.output_dim

    @property
    def output_dim(self):
        return self.layer_specs[-1].output_dim

    def parameters(self):
        """Flat list of (weight, bias-or-None) per layer."""
        return list(zip(self.weights, self.biases))

    def copy_parameters(self):
        return ([w.copy() for w in self.weights],
                [None if b is None else b.copy() for b in self.biases])

    def set_parameters(self, weights, biases):
        self.weights = [w.copy() for w in weights]
        self.biases = [None if b is None else b.copy() for b in biases]

    def check_finite(self):
        for i, (w, b) in enumerate(self.parameters()):
            if not np.all(np.isfinite(w)):
                raise TrainingDivergedError(f"layer {i} weights non-finite")
            if b is not None and not np.all(np.isfinite(b)):
                raise TrainingDivergedError(f"layer {i} bias non-finite")


def build_network(input_dim, output_dim, task="comprehension", hidden=(500,),
                  seed=0, use_bias=True):
    """Standard architecture: ReLU hidden layers, task-matched final layer."""
    specs = [LayerSpec(h, "relu", use_bias) for h in hidden]
    final_act = "none" if task == "comprehension" else "sigmoid"
    specs.append(LayerSpec(output_dim, final_act, use_bias))
    return DeepNetwork(input_dim, specs, task=task, seed=seed)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, activation):
    if activation == "none":
        return z
    if activation == "relu":
        return np.maximum(z, 0.0)
    return _sigmoid(z)


def _forward_cached(net, x):
    """Activations per layer, keeping pre-activations for backprop."""
    pre, post = [], [x]
    for spec, w, b in zip(net.layer_specs, net.weights, net.biases):
        z = post[-1] @ w
        if b is not None:
            z = z + b
        pre.append(z)
        post.append(_activate(z, spec.activation))
    return pre, post


def forward(net, input_matrix):
    """Deterministic layer-by-layer affine + activation pass."""
    x = as_matrix(input_matrix, "input")
    if x.shape[1] != net.input_dim:
        raise ShapeError(
            f"input has {x.shape[1]} columns, network expects {net.input_dim}")
    _, post = _forward_cached(net, x)
    return post[-1]


def _check_loss_inputs(net, y, loss):
    if loss not in LOSSES:
        raise InputError(f"unknown loss '{loss}'")
    if y.shape[1] != net.output_dim:
        raise ShapeError(
            f"target has {y.shape[1]} columns, network emits {net.output_dim}")
    if loss == "bce":
        if net.layer_specs[-1].activation != "sigmoid":
            raise InputError("bce loss requires a sigmoid final layer")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise InputError("bce targets must lie in [0, 1]")


def loss_value(net, input_matrix, target_matrix, loss):
    """Batch-mean loss of the network on (input, target)."""
    y = as_matrix(target_matrix, "target")
    _check_loss_inputs(net, y, loss)
    preds = forward(net, input_matrix)
    n = preds.shape[0]
    if loss == "mse":
        diff = preds - y
        return float((diff * diff).sum() / n)
    p = np.clip(preds, _BCE_EPS, 1.0 - _BCE_EPS)
    return float(-(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum() / n)


def backward(net, input_matrix, target_matrix, loss):
    """Gradients of the batch-mean loss for every weight and bias.

    Returns one (d_weight, d_bias) pair per layer; d_bias is None for
    bias-free layers.
    """
    x = as_matrix(input_matrix, "input")
    y = as_matrix(target_matrix, "target")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} input rows vs {y.shape[0]} targets")
    if x.shape[1] != net.input_dim:
        raise ShapeError(
            f"input has {x.shape[1]} columns, network expects {net.input_dim}")
    _check_loss_inputs(net, y, loss)
    n = x.shape[0]
    pre, post = _forward_cached(net, x)
    preds = post[-1]

    # Delta at the final pre-activation. For sigmoid + bce the chain
    # collapses to (p - y) / n; for mse start from dL/dp = 2 (p - y) / n and
    # pass through the final activation below.
    last_act = net.layer_specs[-1].activation
    if loss == "bce":
        delta = (preds - y) / n
    else:
        d_post = 2.0 * (preds - y) / n
        delta = _activation_backward(d_post, pre[-1], preds, last_act)

    grads = [None] * len(net.weights)
    for i in range(len(net.weights) - 1, -1, -1):
        d_w = post[i].T @ delta
        d_b = delta.sum(axis=0) if net.biases[i] is not None else None
        grads[i] = (d_w, d_b)
        if i > 0:
            d_post = delta @ net.weights[i].T
            delta = _activation_backward(
                d_post, pre[i - 1], post[i], net.layer_specs[i - 1].activation)
    return grads


def _activation_backward(d_post, z, activated, activation):
    if activation == "none":
        return d_post
    if activation == "relu":
        return d_post * (z > 0)
    return d_post * activated * (1.0 - activated)


def _apply_gradients(net, grads, learning_rate):
    for i, (d_w, d_b) in enumerate(grads):
        net.weights[i] -= learning_rate * d_w
        if d_b is not None:
            net.biases[i] -= learning_rate * d_b


@dataclass
class TrainConfig:
    """Minibatch-SGD settings shared by every deep training regime."""

    batch_size: int = 512
    max_epochs: int = 500
    patience: int = 20
    learning_rate: float = 0.001
    loss: str = "mse"
    epoch_cap_mode: str = "early_stop"  # or "fixed"
    regime: str = "type_level"  # or "token_level"
    seed: int = 0
    token_cap: int = 1_000_000

    def __post_init__(self):
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise InputError("max_epochs must be >= 1")
        if self.patience < 0:
            raise InputError("patience must be >= 0")
        if self.patience > self.max_epochs:
            raise InputError("patience must not exceed max_epochs")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be > 0")
        if self.loss not in LOSSES:
            raise InputError(f"unknown loss '{self.loss}'")
        if self.epoch_cap_mode not in ("early_stop", "fixed"):
            raise InputError(f"unknown epoch_cap_mode '{self.epoch_cap_mode}'")
        if self.regime not in ("type_level", "token_level"):
            raise InputError(f"unknown regime '{self.regime}'")
        if self.token_cap < 1:
            raise InputError("token_cap must be >= 1")


@dataclass
class TrainHistory:
    """Per-epoch record of training loss and validation accuracy."""

    train_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = 0


def _epoch_pass(net, x, y, order, cfg):
    for start in range(0, len(order), cfg.batch_size):
        batch = order[start:start + cfg.batch_size]
        grads = backward(net, x[batch], y[batch], cfg.loss)
        _apply_gradients(net, grads, cfg.learning_rate)


def train(net, train_input, train_target, val_input=None, val_target=None,
          cfg=None):
    """Minibatch SGD with validation-accuracy early stopping.

    After every epoch the validation correlation accuracy is computed (the
    candidate set is the validation targets themselves) and the parameters
    of the best-validation epoch are kept. Training stops once accuracy has
    failed to improve for ``patience`` consecutive checks, or at
    ``max_epochs``. In "fixed" epoch-cap mode no early stopping happens and
    the validation set may be omitted.

    Returns (net, TrainHistory); the network is trained in place.
    """
    if cfg is None:
        cfg = TrainConfig()
    x = as_matrix(train_input, "train input")
    y = as_matrix(train_target, "train target")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} input rows vs {y.shape[0]} targets")
    early_stop = cfg.epoch_cap_mode == "early_stop"
    if early_stop:
        if val_input is None or val_target is None:
            raise InputError(
                "early-stop training needs a validation set; use "
                "epoch_cap_mode='fixed' to train without one")
        val_x = as_matrix(val_input, "validation input")
        val_y = as_matrix(val_target, "validation target")
    else:
        val_x = None if val_input is None else as_matrix(val_input)
        val_y = None if val_target is None else as_matrix(val_target)

    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()
    best_acc = -np.inf
    best_params = None
    since_best = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(x.shape[0])
        _epoch_pass(net, x, y, order, cfg)
        epoch_loss = loss_value(net, x, y, cfg.loss)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {epoch}")
        history.train_loss.append(epoch_loss)
        if val_x is not None and val_y is not None:
            report = evaluate.correlation_accuracy(forward(net, val_x), val_y)
            history.val_accuracy.append(report.accuracy)
        if early_stop:
            acc = history.val_accuracy[-1]
            if acc > best_acc:
                best_acc = acc
                best_params = net.copy_parameters()
                history.best_epoch = epoch
                since_best = 0
            else:
                since_best += 1
            if since_best >= cfg.patience:
                break
    if early_stop and best_params is not None:
        net.set_parameters(*best_params)
    elif history.train_loss:
        history.best_epoch = len(history.train_loss)
    return net, history


def train_token_distribution(net, input_matrix, target_matrix, frequencies,
                             cfg=None, epochs=1):
    """Frequency-as-repetition training over the token distribution.

    One epoch is one shuffled pass over an index list where word i appears
    ``frequencies[i]`` times. When the total token count exceeds
    ``cfg.token_cap`` the pass is replaced by ``token_cap`` draws with
    replacement, word probabilities proportional to frequency, which keeps
    the same per-draw expectation. No early stopping; ``epochs`` passes run.

    Returns (net, TrainHistory) with per-epoch losses.
    """
    if cfg is None:
        cfg = TrainConfig()
    x = as_matrix(input_matrix, "input")
    y = as_matrix(target_matrix, "target")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} input rows vs {y.shape[0]} targets")
    freqs = as_vector(frequencies, "frequencies")
    if freqs.shape[0] != x.shape[0]:
        raise ShapeError(
            f"frequencies length {freqs.shape[0]} != {x.shape[0]} rows")
    if np.any(freqs < 0):
        raise InputError("frequencies must be non-negative")
    total = int(freqs.sum())
    if total <= 0:
        raise InputError("at least one frequency must be positive")
    if epochs < 1:
        raise InputError("epochs must be >= 1")

    rng = np.random.default_rng(cfg.seed)
    counts = freqs.astype(np.int64)
    expanded = None
    if total <= cfg.token_cap:
        expanded = np.repeat(np.arange(x.shape[0]), counts)
    probabilities = counts / counts.sum()

    history = TrainHistory()
    for epoch in range(1, epochs + 1):
        if expanded is not None:
            order = rng.permutation(expanded)
        else:
            order = rng.choice(x.shape[0], size=cfg.token_cap,
                               p=probabilities)
        _epoch_pass(net, x, y, order, cfg)
        epoch_loss = loss_value(net, x, y, cfg.loss)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {epoch}")
        history.train_loss.append(epoch_loss)
    history.best_epoch = epochs
    return net, history


def online_step(net, cue_row, target_row, learning_rate):
    """One gradient step on a single example, in place.

    The loss follows the task flavour (comprehension: mse, production: bce).
    For sufficiently small learning rates the loss on this example does not
    increase.
    """
    if learning_rate < 0:
        raise InputError(f"learning_rate must be >= 0, got {learning_rate}")
    c = as_vector(cue_row, "cue_row")
    t = as_vector(target_row, "target_row")
    loss = "mse" if net.task == "comprehension" else "bce"
    grads = backward(net, c[None, :], t[None, :], loss)
    _apply_gradients(net, grads, learning_rate)
    return net


def save_network(path, net):
    """Versioned binary container: magic 'LXDN', task tag, seed, layer
    count, then per layer dims/activation/bias flag and float64 parameters."""
    parts = [_HEADER.pack(_MAGIC, _VERSION, TASKS.index(net.task),
                          int(net.seed) & 0xFFFFFFFFFFFFFFFF,
                          len(net.layer_specs))]
    fan_in = net.input_dim
    for spec, w, b in zip(net.layer_specs, net.weights, net.biases):
        parts.append(_LAYER_HEADER.pack(fan_in, spec.output_dim,
                                        ACTIVATIONS.index(spec.activation),
                                        1 if spec.use_bias else 0))
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        if b is not None:
            parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fan_in = spec.output_dim
    with open(path, "wb") as handle:
        handle.write(b"".join(parts))


def load_network(path):
    """Read a network written by :func:`save_network`."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < _HEADER.size:
        raise FileFormatError("truncated network file")
    magic, version, task, seed, n_layers = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FileFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FileFormatError(f"unsupported network version {version}")
    offset = _HEADER.size
    specs, weights, biases = [], [], []
    input_dim = None
    for _ in range(n_layers):
        fan_in, out_dim, act, use_bias = _LAYER_HEADER.unpack_from(blob, offset)
        offset += _LAYER_HEADER.size
        if input_dim is None:
            input_dim = fan_in
        specs.append(LayerSpec(out_dim, ACTIVATIONS[act], bool(use_bias)))
        w = np.frombuffer(blob, dtype="<f8", count=fan_in * out_dim,
                          offset=offset).reshape(fan_in, out_dim)
        offset += fan_in * out_dim * 8
        weights.append(w.astype(np.float64))
        if use_bias:
            b = np.frombuffer(blob, dtype="<f8", count=out_dim, offset=offset)
            offset += out_dim * 8
            biases.append(b.astype(np.float64))
        else:
            biases.append(None)
    if offset != len(blob):
        raise FileFormatError(
            f"network payload is {len(blob)} bytes, expected {offset}")
    net = DeepNetwork(input_dim, specs, task=TASKS[task], seed=seed)
    net.set_parameters(weights, biases)
    return net
