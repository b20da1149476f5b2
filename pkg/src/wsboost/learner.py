"""Base learner abstraction: a probabilistic classifier trained with
cross-entropy on weak labels from one local region."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datamodel import LabelSpace, ValidationError
from .mlp import SoftmaxNet, TrainSettings


@dataclass
class LearnerHyper:
    hidden: Optional[int] = None  # None -> linear-softmax
    epochs: int = 40
    batch_size: int = 64
    learning_rate: float = 0.3
    activation: str = "tanh"


@dataclass(eq=False)
class BaseLearner:
    """Maps a feature vector to a length-C probability vector."""

    net: SoftmaxNet
    label_space: LabelSpace

    @property
    def input_dim(self):
        return self.net.sizes[0]


def train_base(
    region,
    hyper: LearnerHyper,
    rng_seed: int,
    num_classes: Optional[int] = None,
) -> BaseLearner:
    """Fit a learner on (features, labels in 1..C) by seeded minibatch GD.

    ``num_classes`` fixes the score-vector length; when omitted it is taken
    from the largest label in the region (a region need not contain every
    class, so orchestrating code always passes it explicitly).
    """
    features, labels = region
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.shape[0] == 0:
        raise ValidationError("cannot train on an empty region")
    if features.shape[0] != labels.shape[0]:
        raise ValidationError("features/labels length mismatch")
    if labels.min() < 1:
        raise ValidationError("abstain labels are not trainable")
    space = LabelSpace(num_classes if num_classes else max(int(labels.max()), 2))
    if labels.max() > space.num_classes:
        raise ValidationError("labels out of range for the given class count")

    targets = np.zeros((labels.shape[0], space.num_classes))
    targets[np.arange(labels.shape[0]), labels - 1] = 1.0

    sizes = (features.shape[1], space.num_classes)
    if hyper.hidden:
        sizes = (features.shape[1], hyper.hidden, space.num_classes)
    rng = np.random.default_rng(rng_seed)
    net = SoftmaxNet(sizes, activation=hyper.activation, rng=rng)
    settings = TrainSettings(
        epochs=hyper.epochs,
        batch_size=hyper.batch_size,
        learning_rate=hyper.learning_rate,
        activation=hyper.activation,
    )
    net.train(features, targets, settings, rng)
    return BaseLearner(net, space)


def predict_scores(f: BaseLearner, x) -> np.ndarray:
    """Length-C probability vector for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != f.input_dim:
        raise ValidationError(f"expected feature vector of dimension {f.input_dim}")
    return f.net.predict_proba(x)[0]


def predict_scores_batch(f: BaseLearner, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != f.input_dim:
        raise ValidationError(f"expected feature matrix with {f.input_dim} columns")
    return f.net.predict_proba(features)


def predict_label(f: BaseLearner, x) -> int:
    """Argmax of predict_scores; ties break to the smallest class index."""
    return int(np.argmax(predict_scores(f, x)) + 1)


def predict_labels_batch(f: BaseLearner, features) -> np.ndarray:
    return np.argmax(predict_scores_batch(f, features), axis=1) + 1
