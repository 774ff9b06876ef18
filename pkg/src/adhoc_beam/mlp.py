"""
Small feedforward regressor: rectifier hidden layers, sigmoid outputs,
mean-squared-error loss, minibatch SGD with momentum.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class MlpModel:
    sizes: list
    weights: list
    biases: list
    context: int = 1
    # feature normalization applied before the first layer
    in_mean: np.ndarray | None = None
    in_std: np.ndarray | None = None

    def __post_init__(self):
        if self.context < 1 or self.context % 2 == 0:
            raise ValueError("context window must be a positive odd number")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise ValueError(f"layer {k} has inconsistent shapes")

    @classmethod
    def init(cls, sizes, rng=None, context=1):
        rng = np.random.default_rng(rng)
        weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a)
                   for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(list(sizes), weights, biases, context)

    @classmethod
    def zeros(cls, sizes, context=1):
        return cls(list(sizes), [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(b) for b in sizes[1:]], context)

    @property
    def n_in(self):
        return self.sizes[0]

    @property
    def n_out(self):
        return self.sizes[-1]

    def params(self):
        return self.weights + self.biases

    def copy(self):
        return MlpModel(list(self.sizes), [W.copy() for W in self.weights],
                        [b.copy() for b in self.biases], self.context,
                        None if self.in_mean is None else self.in_mean.copy(),
                        None if self.in_std is None else self.in_std.copy())

    # -- checkpoint --------------------------------------------------------
    def to_dict(self):
        return {
            "version": CHECKPOINT_VERSION,
            "sizes": self.sizes,
            "context": self.context,
            "hidden_activation": "relu",
            "output_activation": "sigmoid",
            "weights": [W.ravel().tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "in_mean": None if self.in_mean is None else self.in_mean.tolist(),
            "in_std": None if self.in_std is None else self.in_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if "version" not in d:
            raise ValueError("checkpoint has no version field")
        if d["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d['version']}")
        sizes = d["sizes"]
        weights = [np.asarray(w, dtype=float).reshape(a, b)
                   for w, a, b in zip(d["weights"], sizes[:-1], sizes[1:])]
        biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        arr = lambda v: None if v is None else np.asarray(v, dtype=float)
        return cls(sizes, weights, biases, d.get("context", 1),
                   arr(d.get("in_mean")), arr(d.get("in_std")))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _sigmoid(z):
    return 0.5 * (1 + np.tanh(0.5 * z))


def _normalize(model, x):
    if model.in_mean is not None:
        x = (x - model.in_mean) / model.in_std
    return x


def mlp_forward(model, x):
    """Forward pass for a vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_in:
        raise ValueError(f"input dimension {x.shape[-1]} != model input {model.n_in}")
    a = _normalize(model, x)
    n_layers = len(model.weights)
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        a = _sigmoid(z) if k == n_layers - 1 else np.maximum(z, 0)
    return a


def loss_and_grads(model, x, y):
    """Training objective ``0.5 * sum over outputs, mean over batch`` of the
    squared error, and its gradients ordered as ``model.params()``."""
    x = _normalize(model, np.atleast_2d(np.asarray(x, dtype=float)))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    acts = [x]
    pre = []
    n_layers = len(model.weights)
    a = x
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        pre.append(z)
        a = _sigmoid(z) if k == n_layers - 1 else np.maximum(z, 0)
        acts.append(a)
    diff = a - y
    loss = 0.5 * float(np.sum(diff**2)) / len(y)
    delta = diff / len(y) * a * (1 - a)
    gW = [None] * n_layers
    gb = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        gW[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k].T) * (pre[k - 1] > 0)
    return loss, gW + gb


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 512
    lr_start: float = 0.08
    lr_end: float = 0.001
    momentum_early: float = 0.5
    momentum_late: float = 0.9
    momentum_switch_epoch: int = 5
    seed: int = 0
    history: list = field(default_factory=list)

    def lr(self, epoch):
        """Linear decay from lr_start (epoch 0) to lr_end (last epoch)."""
        if self.epochs == 1:
            return self.lr_start
        frac = epoch / (self.epochs - 1)
        return self.lr_start + (self.lr_end - self.lr_start) * frac

    def momentum(self, epoch):
        return self.momentum_early if epoch < self.momentum_switch_epoch else self.momentum_late


def dataset_loss(model, x, y, batch=4096):
    """Mean squared error over all samples and outputs."""
    tot = 0.0
    for i in range(0, len(x), batch):
        out = mlp_forward(model, x[i:i + batch])
        tot += float(np.sum((out - y[i:i + batch])**2))
    return tot / y.size


def mlp_train(model, x, y, cfg=None):
    """Train in place and return the model. Per-epoch full-data losses are
    appended to ``cfg.history`` (entry 0 is the loss before training)."""
    cfg = TrainConfig() if cfg is None else cfg
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise ValueError("empty training set")
    if len(x) != len(y):
        raise ValueError("inputs and targets differ in length")
    rng = np.random.default_rng(cfg.seed)
    vel = [np.zeros_like(p) for p in model.params()]
    cfg.history.clear()
    cfg.history.append(dataset_loss(model, x, y))
    for epoch in range(cfg.epochs):
        lr, mom = cfg.lr(epoch), cfg.momentum(epoch)
        order = rng.permutation(len(x))
        for i in range(0, len(x), cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            loss, grads = loss_and_grads(model, x[idx], y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch {i // cfg.batch_size} "
                    f"(lr={lr:.4g}); lower the learning rate or check inputs")
            for p, g, v in zip(model.params(), grads, vel):
                v *= mom
                v -= lr * g
                p += v
        cfg.history.append(dataset_loss(model, x, y))
        logger.debug("epoch %d lr %.4f loss %.6f", epoch, lr, cfg.history[-1])
    return model


def fit_input_normalization(model, x):
    """Set per-feature standardization from training inputs."""
    x = np.asarray(x, dtype=float)
    model.in_mean = x.mean(axis=0)
    model.in_std = x.std(axis=0) + 1e-6
    return model
