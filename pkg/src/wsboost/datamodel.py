"""Core dataset containers, label conventions and match-matrix construction.

Label convention used everywhere in this package: classes are the integers
1..C and the sentinel 0 means "abstain" (a weak source did not label the
instance). File loaders must translate any external convention into this one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ABSTAIN = 0

DATASET_FORMAT_VERSION = 1


class ValidationError(ValueError):
    """Raised when a container or argument violates its structural contract."""


@dataclass(frozen=True)
class LabelSpace:
    """The label set {1..C} plus the abstain sentinel 0."""

    num_classes: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.num_classes}")

    @property
    def labels(self) -> range:
        return range(1, self.num_classes + 1)

    def check_labels(self, y, allow_abstain: bool = False) -> None:
        y = np.asarray(y)
        lo = ABSTAIN if allow_abstain else 1
        if y.size and (y.min() < lo or y.max() > self.num_classes):
            raise ValidationError(
                f"labels out of range [{lo}, {self.num_classes}]"
            )


@dataclass(frozen=True, eq=False)
class Instance:
    """One data point: an id, a dense feature vector and an optional gold label."""

    id: str
    features: np.ndarray
    clean_label: Optional[int] = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 1:
            raise ValidationError(f"instance {self.id}: features must be 1-D")
        if not np.all(np.isfinite(feats)):
            raise ValidationError(f"instance {self.id}: non-finite feature values")
        object.__setattr__(self, "features", feats)


def _stack_features(instances: Sequence[Instance]) -> np.ndarray:
    if not instances:
        raise ValidationError("empty instance list")
    dims = {inst.features.shape[0] for inst in instances}
    if len(dims) != 1:
        raise ValidationError(f"inconsistent feature dimensions: {sorted(dims)}")
    return np.stack([inst.features for inst in instances])


@dataclass(frozen=True, eq=False)
class WeakLabeledSet:
    """Instances plus their N x p weak-label matrix (entries in 0..C).

    ``aggregated_labels``, when present, is the output of a voting strategy;
    it is 0 exactly on rows where every source abstained.
    """

    label_space: LabelSpace
    instances: tuple[Instance, ...]
    weak_labels: np.ndarray
    aggregated_labels: Optional[np.ndarray] = None
    lf_names: Optional[tuple[str, ...]] = None
    features: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        feats = _stack_features(self.instances)
        object.__setattr__(self, "features", feats)

        weak = np.asarray(self.weak_labels, dtype=np.int64)
        if weak.ndim != 2 or weak.shape[0] != len(self.instances):
            raise ValidationError(
                f"weak_labels shape {weak.shape} does not match "
                f"{len(self.instances)} instances"
            )
        if weak.shape[1] < 1:
            raise ValidationError("need at least one weak source")
        self.label_space.check_labels(weak, allow_abstain=True)
        object.__setattr__(self, "weak_labels", weak)

        if self.aggregated_labels is not None:
            agg = np.asarray(self.aggregated_labels, dtype=np.int64)
            if agg.shape != (len(self.instances),):
                raise ValidationError("aggregated_labels length mismatch")
            self.label_space.check_labels(agg, allow_abstain=True)
            all_abstain = (weak == ABSTAIN).all(axis=1)
            if np.any((agg == ABSTAIN) & ~all_abstain):
                raise ValidationError(
                    "aggregated abstain on a row with non-abstain votes"
                )
            object.__setattr__(self, "aggregated_labels", agg)

        if self.lf_names is not None:
            names = tuple(self.lf_names)
            if len(names) != weak.shape[1]:
                raise ValidationError("lf_names length mismatch")
            object.__setattr__(self, "lf_names", names)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def num_sources(self) -> int:
        return self.weak_labels.shape[1]

    def with_aggregated(self, labels: np.ndarray) -> "WeakLabeledSet":
        return WeakLabeledSet(
            self.label_space, self.instances, self.weak_labels, labels, self.lf_names
        )


@dataclass(frozen=True, eq=False)
class CleanSet:
    """A fully gold-labeled set. ``weak_labels`` is optional side information
    (used only by the hard-matching gate ablation)."""

    label_space: LabelSpace
    instances: tuple[Instance, ...]
    weak_labels: Optional[np.ndarray] = None
    features: np.ndarray = field(init=False, repr=False)
    labels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        feats = _stack_features(self.instances)
        object.__setattr__(self, "features", feats)
        gold = []
        for inst in self.instances:
            if inst.clean_label is None:
                raise ValidationError(f"instance {inst.id} has no clean label")
            gold.append(inst.clean_label)
        gold = np.asarray(gold, dtype=np.int64)
        self.label_space.check_labels(gold)
        object.__setattr__(self, "labels", gold)
        if self.weak_labels is not None:
            weak = np.asarray(self.weak_labels, dtype=np.int64)
            if weak.ndim != 2 or weak.shape[0] != len(self.instances):
                raise ValidationError("weak_labels shape mismatch")
            self.label_space.check_labels(weak, allow_abstain=True)
            object.__setattr__(self, "weak_labels", weak)

    def __len__(self) -> int:
        return len(self.instances)


@dataclass(frozen=True, eq=False)
class MatchMatrix:
    """N x p binary matrix: entry (i, j) is 1 iff source j labeled instance i."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8)
        if entries.ndim != 2:
            raise ValidationError("match matrix must be 2-D")
        if not np.isin(entries, (0, 1)).all():
            raise ValidationError("match matrix entries must be 0 or 1")
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self):
        return self.entries.shape


def build_match_matrix(weak: WeakLabeledSet) -> MatchMatrix:
    """Indicator of non-abstain entries in the weak-label matrix."""
    return MatchMatrix((weak.weak_labels != ABSTAIN).astype(np.int8))


def _vote_counts(weak_labels: np.ndarray, num_classes: int) -> np.ndarray:
    """N x C matrix of per-class vote counts."""
    counts = np.empty((weak_labels.shape[0], num_classes), dtype=np.int64)
    for c in range(1, num_classes + 1):
        counts[:, c - 1] = (weak_labels == c).sum(axis=1)
    return counts


def majority_vote(weak: WeakLabeledSet) -> np.ndarray:
    """Most frequent non-abstain label per row; 0 on all-abstain rows.

    Ties break to the smallest label value so the baseline is deterministic.
    """
    counts = _vote_counts(weak.weak_labels, weak.label_space.num_classes)
    out = np.argmax(counts, axis=1) + 1  # first max -> smallest label
    out[counts.sum(axis=1) == 0] = ABSTAIN
    return out


def weighted_vote(weak: WeakLabeledSet, class_prior) -> np.ndarray:
    """Majority vote with per-class vote counts reweighted by a label prior."""
    prior = np.asarray(class_prior, dtype=np.float64)
    if prior.shape != (weak.label_space.num_classes,):
        raise ValidationError("class_prior length must equal the class count")
    if prior.min() < 0 or abs(prior.sum() - 1.0) > 1e-6:
        raise ValidationError("class_prior must be a probability vector")
    counts = _vote_counts(weak.weak_labels, weak.label_space.num_classes)
    scores = counts * prior[None, :]
    out = np.argmax(scores, axis=1) + 1
    out[counts.sum(axis=1) == 0] = ABSTAIN
    return out


# ---------------------------------------------------------------------------
# Dataset file format (versioned JSON, one file per split)
# ---------------------------------------------------------------------------

def save_dataset(
    path,
    label_space: LabelSpace,
    instances: Sequence[Instance],
    weak_labels: np.ndarray,
    lf_names: Optional[Sequence[str]] = None,
) -> None:
    """Write one split in the documented JSON format."""
    weak = np.asarray(weak_labels, dtype=np.int64)
    p = weak.shape[1]
    doc = {
        "format_version": DATASET_FORMAT_VERSION,
        "label_space": label_space.num_classes,
        "lf_names": list(lf_names) if lf_names else [f"lf_{j}" for j in range(p)],
        "instances": [
            {
                "id": inst.id,
                "features": [float(v) for v in inst.features],
                "clean_label": inst.clean_label,
            }
            for inst in instances
        ],
        "weak_labels": weak.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def _load_raw(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported format_version {version!r}")
    space = LabelSpace(int(doc["label_space"]))
    instances = []
    for rec in doc["instances"]:
        feats = np.asarray(rec["features"], dtype=np.float64)
        if not np.all(np.isfinite(feats)):
            raise ValidationError(f"{path}: non-finite features in {rec['id']!r}")
        label = rec.get("clean_label")
        instances.append(Instance(str(rec["id"]), feats, label))
    weak = np.asarray(doc["weak_labels"], dtype=np.int64)
    lf_names = tuple(doc.get("lf_names") or ())
    return space, instances, weak, lf_names


def load_weak_set(path) -> WeakLabeledSet:
    space, instances, weak, lf_names = _load_raw(path)
    return WeakLabeledSet(space, instances, weak, lf_names=lf_names or None)


def load_clean_set(path) -> CleanSet:
    space, instances, weak, _ = _load_raw(path)
    return CleanSet(space, instances, weak_labels=weak)
