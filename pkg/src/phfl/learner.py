"""Desk-scale models, SGD, lottery-ticket pruning and masked local training."""
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBatch, NonFiniteLoss


def _softmax_xent(logits, y):
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    s = ez.sum(axis=1, keepdims=True)
    probs = ez / s
    loss = float(np.mean(np.log(s[:, 0]) - z[np.arange(len(y)), y]))
    dlogits = probs
    dlogits[np.arange(len(y)), y] -= 1.0
    return loss, dlogits / len(y)


class SoftmaxRegression:
    """Multinomial logistic regression; parameters are [W (din x C), b (C)]."""

    def __init__(self, n_features, n_classes):
        self.n_features = n_features
        self.n_classes = n_classes
        self.dim = n_features * n_classes + n_classes

    def _split(self, w):
        k = self.n_features * self.n_classes
        return w[:k].reshape(self.n_features, self.n_classes), w[k:]

    def init(self, gen):
        return gen.normal(scale=0.01, size=self.dim)

    def logits(self, w, X):
        W, b = self._split(w)
        return X @ W + b

    def loss_and_grad(self, w, X, y):
        W, b = self._split(w)
        loss, dz = _softmax_xent(X @ W + b, y)
        return loss, np.concatenate([(X.T @ dz).ravel(), dz.sum(axis=0)])


class MLP:
    """One hidden tanh layer; parameters are [W1, b1, W2, b2] flattened."""

    def __init__(self, n_features, n_classes, hidden=128):
        self.n_features = n_features
        self.n_classes = n_classes
        self.hidden = hidden
        self.dim = n_features * hidden + hidden + hidden * n_classes + n_classes

    def _split(self, w):
        d, h, c = self.n_features, self.hidden, self.n_classes
        i = d * h
        W1 = w[:i].reshape(d, h)
        b1 = w[i:i + h]
        i += h
        W2 = w[i:i + h * c].reshape(h, c)
        b2 = w[i + h * c:]
        return W1, b1, W2, b2

    def init(self, gen):
        d, h, c = self.n_features, self.hidden, self.n_classes
        return np.concatenate([gen.normal(scale=1.0 / np.sqrt(d), size=d * h), np.zeros(h),
                               gen.normal(scale=1.0 / np.sqrt(h), size=h * c), np.zeros(c)])

    def logits(self, w, X):
        W1, b1, W2, b2 = self._split(w)
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def loss_and_grad(self, w, X, y):
        W1, b1, W2, b2 = self._split(w)
        a = np.tanh(X @ W1 + b1)
        loss, dz = _softmax_xent(a @ W2 + b2, y)
        da = (dz @ W2.T) * (1.0 - a * a)
        return loss, np.concatenate([(X.T @ da).ravel(), da.sum(axis=0),
                                     (a.T @ dz).ravel(), dz.sum(axis=0)])


def make_model(kind, n_features, n_classes, hidden=128):
    if kind == "logistic":
        return SoftmaxRegression(n_features, n_classes)
    if kind == "mlp":
        return MLP(n_features, n_classes, hidden)
    raise ValueError(f"unknown model kind {kind!r}")


def local_loss(model, w, shard):
    return model.loss_and_grad(w, shard.X, shard.y)[0]


def stochastic_grad(model, w, X, y):
    if len(y) == 0:
        raise EmptyBatch("empty batch")
    return model.loss_and_grad(w, X, y)[1]


def accuracy(model, w, X, y):
    return float(np.mean(np.argmax(model.logits(w, X), axis=1) == y))


def sample_batch(shard, batch_size, gen):
    """Uniform batch without replacement (the full shard if it is smaller)."""
    n = len(shard)
    if n == 0:
        raise EmptyBatch("empty shard")
    if batch_size >= n:
        return shard.X, shard.y
    idx = gen.choice(n, size=batch_size, replace=False)
    return shard.X[idx], shard.y[idx]


@dataclass(frozen=True)
class PrunedModel:
    weights: np.ndarray
    mask: np.ndarray
    ratio: float


def prune_mask(w, delta):
    """Zero the round(delta d) smallest-magnitude entries; ties prune the lower index first."""
    d = len(w)
    d_p = int(round(delta * d))
    mask = np.ones(d, dtype=bool)
    if d_p >= d:
        mask[:] = False
    elif d_p > 0:
        mag = np.abs(w)
        thr = np.partition(mag, d_p - 1)[d_p - 1]
        below = mag < thr
        mask[below] = False
        ties = np.flatnonzero(mag == thr)
        mask[ties[:d_p - int(below.sum())]] = False
    return mask


def _check_finite(loss, w):
    if not np.isfinite(loss) or not np.all(np.isfinite(w)):
        raise NonFiniteLoss("training produced a non-finite loss or weight")


def lottery_ticket(model, w_init, shard, rho, eta, delta, gen, batch_size=32):
    """rho dense SGD steps, magnitude mask of the trained vector, initial weights kept."""
    w = np.array(w_init, dtype=float)
    if delta > 0:
        for _ in range(rho):
            X, y = sample_batch(shard, batch_size, gen)
            loss, g = model.loss_and_grad(w, X, y)
            w = w - eta * g
            _check_finite(loss, w)
    mask = prune_mask(w, delta)
    return PrunedModel(np.where(mask, w_init, 0.0), mask, float(delta))


def masked_sgd_step(model, pruned, X, y, eta):
    """w <- w - eta (g(w) * m); pruned coordinates stay exactly zero.

    Returns the new model, the masked gradient and the batch loss.
    """
    if len(y) == 0:
        raise EmptyBatch("empty batch")
    loss, g = model.loss_and_grad(pruned.weights, X, y)
    gm = np.where(pruned.mask, g, 0.0)
    w = pruned.weights - eta * gm
    _check_finite(loss, w)
    return PrunedModel(w, pruned.mask, pruned.ratio), gm, loss


def run_local_rounds(model, pruned, shard, kappa0, eta, gen, batch_size=32):
    """kappa0 masked SGD steps.

    Returns the final model, the summed masked gradient and the mean batch
    loss (NaN when ``kappa0`` is 0).
    """
    grad_sum = np.zeros_like(pruned.weights)
    total = 0.0
    for _ in range(kappa0):
        X, y = sample_batch(shard, batch_size, gen)
        pruned, gm, loss = masked_sgd_step(model, pruned, X, y, eta)
        grad_sum += gm
        total += loss
    return pruned, grad_sum, (total / kappa0 if kappa0 else float("nan"))
