"""Multilayer perceptron with hand-written backpropagation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from .config import PLAIN_MAX_EPOCHS, MLPConfig

PREDICT_CHUNK = 65536


def layer_sizes(n_in, hidden):
    return [int(n_in), *map(int, hidden), 1]


def count_mlp_parameters(n_in, hidden):
    sizes = layer_sizes(n_in, hidden)
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def init_params(sizes, rng):
    """Uniform fan-in initialisation: He-uniform for hidden layers, LeCun-uniform for the output."""
    weights, biases = [], []
    last = len(sizes) - 2
    for l, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt((3.0 if l == last else 6.0) / a)
        weights.append(rng.uniform(-limit, limit, (a, b)))
        biases.append(np.zeros(b))
    return weights, biases


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_grad(z, a, kind):
    if kind == "relu":
        return z > 0
    return 1.0 - a * a


def forward(weights, biases, X, activation="relu"):
    """Network output (1-D) and the per-layer (pre, post) activations."""
    cache = [(None, X)]
    a = X
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W
        z += b
        a = z if l == last else _act(z, activation)
        cache.append((z, a))
    return a[:, 0], cache


def loss_and_grads(weights, biases, X, y, activation="relu"):
    """Mean squared error and its gradients with respect to every weight and bias."""
    out, cache = forward(weights, biases, X, activation)
    r = out - y
    loss = float(np.mean(r * r))
    delta = (2.0 / len(y)) * r[:, None]
    gW = [None] * len(weights)
    gb = [None] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        a_prev = cache[l][1]
        gW[l] = a_prev.T @ delta
        gb[l] = delta.sum(axis=0)
        if l:
            z, a = cache[l]
            delta = (delta @ weights[l].T) * _act_grad(z, a, activation)
    return loss, gW, gb


class _Adadelta:
    def __init__(self, params, rho, eps):
        self.rho, self.eps = rho, eps
        self.sq = [np.zeros_like(p) for p in params]
        self.upd = [np.zeros_like(p) for p in params]

    def step(self, params, grads, lr):
        rho, eps = self.rho, self.eps
        for p, g, s, u in zip(params, grads, self.sq, self.upd):
            s *= rho
            s += (1 - rho) * g * g
            d = g * np.sqrt(u + eps) / np.sqrt(s + eps)
            u *= rho
            u += (1 - rho) * d * d
            p -= lr * d


class _Adam:
    def __init__(self, params, b1, b2, eps):
        self.b1, self.b2, self.eps = b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.b1, self.b2
        c1 = 1 - b1**self.t
        c2 = 1 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, params):
        pass

    def step(self, params, grads, lr):
        for p, g in zip(params, grads):
            p -= lr * g


def _optimizer(cfg, params):
    if cfg.optimizer == "adadelta":
        return _Adadelta(params, cfg.rho, cfg.epsilon)
    if cfg.optimizer == "adam":
        return _Adam(params, cfg.beta1, cfg.beta2, cfg.epsilon)
    return _SGD(params)


class _IndexStream:
    """Endless stream of shuffled row indices, reshuffled on exhaustion."""

    def __init__(self, n, rng):
        self.n, self.rng = n, rng
        self.perm = rng.permutation(n)
        self.pos = 0

    def take(self, count):
        parts = []
        while count > 0:
            if self.pos == self.n:
                self.perm = self.rng.permutation(self.n)
                self.pos = 0
            step = min(count, self.n - self.pos)
            parts.append(self.perm[self.pos:self.pos + step])
            self.pos += step
            count -= step
        return np.concatenate(parts)


class MLPModel:
    kind = "mlp"

    def __init__(self, weights, biases, activation="relu", target_mean=0.0, target_std=1.0):
        self.weights = [np.asarray(W, dtype=float) for W in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activation = activation
        self.target_mean = float(target_mean)
        self.target_std = float(target_std)
        self.history = {"loss": [], "val_rmse": [], "lr": []}
        self.best_epoch = None

    @property
    def n_features(self):
        return self.weights[0].shape[0]

    @property
    def hidden(self):
        return tuple(W.shape[1] for W in self.weights[:-1])

    @property
    def parameter_count(self):
        return int(sum(W.size + b.size for W, b in zip(self.weights, self.biases)))

    @classmethod
    def constant(cls, n_features, value=0.0, hidden=(128, 128)):
        """All-zero network whose output is exactly ``value``."""
        sizes = layer_sizes(n_features, hidden)
        W = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        b = [np.zeros(s) for s in sizes[1:]]
        b[-1][0] = value
        return cls(W, b)

    def _raw(self, X):
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], PREDICT_CHUNK):
            out[s:s + PREDICT_CHUNK] = forward(
                self.weights, self.biases, X[s:s + PREDICT_CHUNK], self.activation
            )[0]
        return out

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"expected {self.n_features} feature columns, got shape {X.shape}"
            )
        return self._raw(X) * self.target_std + self.target_mean

    def to_dict(self):
        return {
            "kind": self.kind,
            "activation": self.activation,
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["weights"], d["biases"], d["activation"], d["target_mean"], d["target_std"])


def _rmse(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


def fit_mlp(cfg: MLPConfig, X, y, validation=None, seed=0) -> MLPModel:
    """Train with minibatches, halve the learning rate on validation plateaus
    and stop early, restoring the best-validation weights."""
    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if validation is None:
        if len(y) < 2:
            raise InvalidArgumentError("need at least 2 rows to carve out a validation set")
        perm = rng.permutation(len(y))
        nv = max(1, int(round(cfg.validation_fraction * len(y))))
        Xv, yv = X[perm[:nv]], y[perm[:nv]]
        X, y = X[perm[nv:]], y[perm[nv:]]
    else:
        Xv, yv = (np.asarray(a, dtype=float) for a in validation)
        if Xv.shape[0] == 0:
            raise InvalidArgumentError("validation set is empty")
    if cfg.max_validation_rows is not None and len(yv) > cfg.max_validation_rows:
        keep = np.sort(rng.choice(len(yv), cfg.max_validation_rows, replace=False))
        Xv, yv = Xv[keep], yv[keep]

    if cfg.scale_targets:
        mu = float(y.mean())
        sd = float(y.std())
        sd = sd if sd > 0 else 1.0
    else:
        mu, sd = 0.0, 1.0
    t = (y - mu) / sd
    tv = (yv - mu) / sd

    weights, biases = init_params(layer_sizes(X.shape[1], cfg.hidden), rng)
    model = MLPModel(weights, biases, cfg.activation, mu, sd)
    params = model.weights + model.biases
    opt = _optimizer(cfg, params)
    nl = len(model.weights)

    max_epochs = cfg.max_epochs or PLAIN_MAX_EPOCHS
    per_epoch = cfg.epoch_size or len(t)
    stream = _IndexStream(len(t), rng)
    lr = cfg.learning_rate
    best = np.inf
    best_params = [p.copy() for p in params]
    wait = plateau = 0
    B = cfg.batch_size

    for epoch in range(max_epochs):
        idx = stream.take(per_epoch)
        total = 0.0
        for s in range(0, len(idx), B):
            bi = idx[s:s + B]
            loss, gW, gb = loss_and_grads(model.weights, model.biases, X[bi], t[bi], cfg.activation)
            opt.step(params, gW + gb, lr)
            total += loss * len(bi)
        val = _rmse(model._raw(Xv), tv)
        model.history["loss"].append(total / len(idx))
        model.history["val_rmse"].append(val)
        model.history["lr"].append(lr)
        if not np.isfinite(val):
            break
        if val < best:
            best = val
            model.best_epoch = epoch
            for b, p in zip(best_params, params):
                b[...] = p
            wait = plateau = 0
        else:
            wait += 1
            plateau += 1
            if plateau >= cfg.plateau_patience:
                lr = max(lr * cfg.lr_factor, cfg.min_lr)
                plateau = 0
            if wait >= cfg.early_stop_patience:
                break

    for p, b in zip(params, best_params):
        p[...] = b
    model.weights, model.biases = params[:nl], params[nl:]
    return model
