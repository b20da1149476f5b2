"""A small feed-forward softmax network trained by minibatch gradient descent.

Shared by the source gate and the reference base learners. Everything is
plain numpy and fully deterministic given a seed; targets are row-simplex
vectors, so both hard one-hot labels and soft distributional targets train
with the same cross-entropy machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingError(RuntimeError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class TrainSettings:
    epochs: int = 40
    batch_size: int = 64
    learning_rate: float = 0.2
    activation: str = "tanh"
    hidden: tuple[int, ...] = field(default_factory=tuple)


def _activate(z, kind):
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(a, kind):
    # derivative expressed through the activation value a
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (a > 0).astype(a.dtype)
    raise ValueError(f"unknown activation {kind!r}")


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class SoftmaxNet:
    """Feed-forward net with a softmax head: sizes[0] -> ... -> sizes[-1]."""

    def __init__(self, sizes, activation="tanh", rng=None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.sizes = tuple(int(s) for s in sizes)
        self.activation = activation
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    # -- forward -----------------------------------------------------------

    def _forward(self, x):
        """Returns the list of layer activations, input included."""
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = softmax(z) if i == last else _activate(z, self.activation)
            acts.append(h)
        return acts

    def predict_proba(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(
                f"expected input dimension {self.sizes[0]}, got {x.shape[1]}"
            )
        return self._forward(x)[-1]

    # -- loss and gradients --------------------------------------------------

    def loss(self, x, targets):
        probs = np.clip(self.predict_proba(x), 1e-12, None)
        return float(-(targets * np.log(probs)).sum(axis=1).mean())

    def grads(self, x, targets):
        """Analytic gradients of the mean cross-entropy wrt all parameters."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        n = x.shape[0]
        acts = self._forward(x)
        delta = (acts[-1] - targets) / n
        d_ws = [None] * len(self.weights)
        d_bs = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            d_ws[i] = acts[i].T @ delta
            d_bs[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * _activate_grad(
                    acts[i], self.activation
                )
        return d_ws, d_bs

    def train(self, x, targets, settings: TrainSettings, rng):
        """Minibatch gradient descent; returns the per-epoch loss history."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        n = x.shape[0]
        history = []
        for epoch in range(settings.epochs):
            order = rng.permutation(n)
            for start in range(0, n, settings.batch_size):
                idx = order[start : start + settings.batch_size]
                d_ws, d_bs = self.grads(x[idx], targets[idx])
                for w, b, dw, db in zip(self.weights, self.biases, d_ws, d_bs):
                    w -= settings.learning_rate * dw
                    b -= settings.learning_rate * db
            epoch_loss = self.loss(x, targets)
            if not np.isfinite(epoch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}", epoch=epoch
                )
            history.append(epoch_loss)
        return history

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self):
        return {
            "sizes": list(self.sizes),
            "activation": self.activation,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc):
        net = cls(doc["sizes"], activation=doc["activation"])
        for i, (flat, bias) in enumerate(zip(doc["weights"], doc["biases"])):
            net.weights[i] = np.asarray(flat, dtype=np.float64).reshape(
                net.weights[i].shape
            )
            net.biases[i] = np.asarray(bias, dtype=np.float64)
        return net

    # -- flat parameter view (used by gradient checks) -----------------------

    def get_flat(self):
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b for b in self.biases]
        )

    def set_flat(self, flat):
        pos = 0
        for i, w in enumerate(self.weights):
            self.weights[i] = flat[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
        for i, b in enumerate(self.biases):
            self.biases[i] = flat[pos : pos + b.size].copy()
            pos += b.size

    def flat_grads(self, x, targets):
        d_ws, d_bs = self.grads(x, targets)
        return np.concatenate([g.ravel() for g in d_ws] + [g for g in d_bs])
