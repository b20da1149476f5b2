"""The conditional source function: a gate mapping features to a probability
over the p weak sources, plus the hard LF-matching ablation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datamodel import MatchMatrix, ValidationError
from .mlp import SoftmaxNet, TrainSettings


@dataclass(frozen=True, eq=False)
class SourceIndexSet:
    """Pairs of (features, simplex target over sources) for gate training."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if feats.shape[0] != targets.shape[0]:
            raise ValidationError("features/targets row count mismatch")
        if targets.size:
            if targets.min() < 0 or np.abs(targets.sum(axis=1) - 1.0).max() > 1e-6:
                raise ValidationError("targets must be row-simplex vectors")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return self.features.shape[0]


@dataclass
class CondFnHyper:
    hidden: tuple[int, int] = (64, 64)
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 0.2
    activation: str = "tanh"


@dataclass(eq=False)
class CondFn:
    """Trained gate: features -> probability over p weak sources."""

    net: SoftmaxNet
    num_sources: int
    epochs: int
    seed: int

    @property
    def input_dim(self):
        return self.net.sizes[0]


def build_source_index(match: MatchMatrix, features) -> SourceIndexSet:
    """Normalize match rows into simplex targets; all-zero rows are dropped
    (they carry no supervision signal for the gate)."""
    entries = match.entries
    features = np.asarray(features, dtype=np.float64)
    if entries.shape[0] != features.shape[0]:
        raise ValidationError("match matrix / features row count mismatch")
    row_sums = entries.sum(axis=1)
    keep = row_sums > 0
    targets = entries[keep].astype(np.float64) / row_sums[keep, None]
    return SourceIndexSet(features[keep], targets)


def train_cond_fn(ds: SourceIndexSet, hyper: CondFnHyper, rng_seed: int) -> CondFn:
    """Train the gate by minibatch gradient descent on cross-entropy against
    the soft source targets. Deterministic given the seed."""
    if len(ds) == 0:
        raise ValidationError("empty source-index dataset")
    p = ds.targets.shape[1]
    d = ds.features.shape[1]
    rng = np.random.default_rng(rng_seed)
    net = SoftmaxNet((d, *hyper.hidden, p), activation=hyper.activation, rng=rng)
    settings = TrainSettings(
        epochs=hyper.epochs,
        batch_size=hyper.batch_size,
        learning_rate=hyper.learning_rate,
        activation=hyper.activation,
    )
    net.train(ds.features, ds.targets, settings, rng)
    return CondFn(net, num_sources=p, epochs=hyper.epochs, seed=rng_seed)


def q_eval(q: CondFn, x) -> np.ndarray:
    """Gate probabilities for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != q.input_dim:
        raise ValidationError(
            f"expected feature vector of dimension {q.input_dim}"
        )
    return q.net.predict_proba(x)[0]


def q_eval_batch(q: CondFn, features) -> np.ndarray:
    """Gate probabilities for a feature matrix, one row per instance."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != q.input_dim:
        raise ValidationError(
            f"expected feature matrix with {q.input_dim} columns"
        )
    return q.net.predict_proba(features)


def hard_matching_q(lf_row) -> np.ndarray:
    """Normalized LF matching row; an all-zero row falls back to uniform."""
    row = np.asarray(lf_row, dtype=np.float64)
    total = row.sum()
    if total == 0:
        return np.full(row.shape, 1.0 / row.shape[0])
    return row / total


def save_cond_fn(q: CondFn, path) -> None:
    doc = {
        "kind": "cond_fn",
        "num_sources": q.num_sources,
        "epochs": q.epochs,
        "seed": q.seed,
        "net": q.net.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_cond_fn(path) -> CondFn:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return cond_fn_from_dict(doc)


def cond_fn_to_dict(q: CondFn) -> dict:
    return {
        "num_sources": q.num_sources,
        "epochs": q.epochs,
        "seed": q.seed,
        "net": q.net.to_dict(),
    }


def cond_fn_from_dict(doc: dict) -> CondFn:
    return CondFn(
        SoftmaxNet.from_dict(doc["net"]),
        num_sources=int(doc["num_sources"]),
        epochs=int(doc["epochs"]),
        seed=int(doc["seed"]),
    )
