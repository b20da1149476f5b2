"""Synthetic labeling-function generation and LF grouping into weak sources.

Synthetic LFs are half-space threshold rules restricted to the class they
emit: an LF fires on instances of its class whose projection onto the LF
direction exceeds a threshold chosen to realize the configured coverage, and
its emitted label is flipped to a uniformly random other class with the
configured noise probability. This mirrors keyword-style LFs (fire on a
feature regime, emit one class) while staying fully seedable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .datamodel import (
    ABSTAIN,
    CleanSet,
    Instance,
    LabelSpace,
    ValidationError,
    WeakLabeledSet,
)


class GroupingError(ValueError):
    """Raised when LFs cannot be grouped automatically by emitted label."""


@dataclass(frozen=True, eq=False)
class SyntheticLF:
    """A half-space threshold rule emitting a single class label."""

    direction: np.ndarray
    threshold: float
    emitted_label: int
    noise_rate: float
    coverage: float

    def __post_init__(self):
        direction = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(direction)
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError("LF direction must be a unit vector")
        object.__setattr__(self, "direction", direction)
        if not 0.0 <= self.noise_rate < 0.5:
            raise ValidationError("noise_rate must be in [0, 0.5)")
        if not 0.0 < self.coverage <= 1.0:
            raise ValidationError("coverage must be in (0, 1]")


@dataclass(frozen=True)
class LFSpec:
    """Generator settings for one synthetic LF."""

    emitted_label: int
    noise_rate: float = 0.0
    coverage: float = 1.0


@dataclass(frozen=True)
class GeneratorConfig:
    num_classes: int
    feature_dim: int
    num_clusters: int
    n_weak: int
    n_clean: int
    n_test: int
    lf_specs: tuple[LFSpec, ...]
    cluster_spread: float = 1.0
    center_scale: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "lf_specs", tuple(self.lf_specs))
        if self.num_classes < 2:
            raise ValidationError("need at least 2 classes")
        if self.feature_dim < 2:
            raise ValidationError("need feature_dim >= 2")
        if self.num_clusters < self.num_classes:
            raise ValidationError("need at least one cluster per class")
        if min(self.n_weak, self.n_clean, self.n_test) < 1:
            raise ValidationError("all split sizes must be positive")
        if not self.lf_specs:
            raise ValidationError("need at least one LF spec")
        for spec in self.lf_specs:
            if not 1 <= spec.emitted_label <= self.num_classes:
                raise ValidationError(
                    f"LF emitted_label {spec.emitted_label} out of range"
                )
            if not 0.0 < spec.coverage <= 1.0:
                raise ValidationError("LF coverage must be in (0, 1]")
            if not 0.0 <= spec.noise_rate < 0.5:
                raise ValidationError("LF noise_rate must be in [0, 0.5)")


@dataclass(frozen=True, eq=False)
class SourceGrouping:
    """Maps each of p LFs to one of p' grouped weak sources."""

    group_of: np.ndarray
    num_groups: int

    def __post_init__(self):
        group_of = np.asarray(self.group_of, dtype=np.int64)
        object.__setattr__(self, "group_of", group_of)
        hit = np.unique(group_of)
        if not np.array_equal(hit, np.arange(self.num_groups)):
            raise ValidationError(
                "every group index in 0..num_groups-1 must be used"
            )


def _sample_split(cfg: GeneratorConfig, centers, cluster_class, n, rng, prefix):
    cluster = rng.integers(0, cfg.num_clusters, size=n)
    feats = centers[cluster] + rng.normal(
        0.0, cfg.cluster_spread, size=(n, cfg.feature_dim)
    )
    truth = cluster_class[cluster]
    instances = [
        Instance(f"{prefix}{i}", feats[i], int(truth[i])) for i in range(n)
    ]
    return feats, truth, instances


def _apply_lfs(lfs, feats, truth, rng, num_classes):
    n = feats.shape[0]
    weak = np.zeros((n, len(lfs)), dtype=np.int64)
    for j, lf in enumerate(lfs):
        proj = feats @ lf.direction
        matched = (truth == lf.emitted_label) & (proj >= lf.threshold)
        labels = np.full(n, lf.emitted_label, dtype=np.int64)
        flip = rng.random(n) < lf.noise_rate
        # flipped votes land uniformly on the other classes
        offsets = rng.integers(1, num_classes, size=n)
        labels[flip] = (labels[flip] - 1 + offsets[flip]) % num_classes + 1
        weak[matched, j] = labels[matched]
    return weak


def generate_synthetic(config: GeneratorConfig, rng_seed: int):
    """Generate (weak train set, clean validation set, clean test set).

    Features come from a seeded Gaussian mixture with class-correlated
    components. Coverage is realized per LF as the matched fraction of the
    emitted class's training instances; thresholds fitted on the training
    split are reused verbatim on the other splits. Identical seeds give
    bit-identical output.
    """
    rng = np.random.default_rng(rng_seed)
    space = LabelSpace(config.num_classes)

    centers = rng.normal(
        0.0, config.center_scale, size=(config.num_clusters, config.feature_dim)
    )
    cluster_class = np.arange(config.num_clusters) % config.num_classes + 1

    feats_l, truth_l, inst_l = _sample_split(
        config, centers, cluster_class, config.n_weak, rng, "w"
    )
    feats_c, truth_c, inst_c = _sample_split(
        config, centers, cluster_class, config.n_clean, rng, "c"
    )
    feats_t, truth_t, inst_t = _sample_split(
        config, centers, cluster_class, config.n_test, rng, "t"
    )

    lfs = []
    for spec in config.lf_specs:
        direction = rng.normal(size=config.feature_dim)
        direction /= np.linalg.norm(direction)
        region = feats_l[truth_l == spec.emitted_label]
        if region.shape[0] == 0:
            raise ValidationError(
                f"no training instances of class {spec.emitted_label}; "
                "infeasible LF spec"
            )
        proj = region @ direction
        if spec.coverage >= 1.0:
            threshold = -np.inf
        else:
            threshold = float(np.quantile(proj, 1.0 - spec.coverage))
        lfs.append(
            SyntheticLF(
                direction, threshold, spec.emitted_label,
                spec.noise_rate, spec.coverage,
            )
        )

    weak_l = _apply_lfs(lfs, feats_l, truth_l, rng, config.num_classes)
    weak_c = _apply_lfs(lfs, feats_c, truth_c, rng, config.num_classes)
    weak_t = _apply_lfs(lfs, feats_t, truth_t, rng, config.num_classes)

    train = WeakLabeledSet(space, inst_l, weak_l)
    valid = CleanSet(space, inst_c, weak_labels=weak_c)
    test = CleanSet(space, inst_t, weak_labels=weak_t)
    return train, valid, test


def group_lfs_by_label(weak: WeakLabeledSet) -> SourceGrouping:
    """Group LFs that emit the same label; groups numbered by ascending label.

    Requires every LF column to emit exactly one non-abstain label value
    across the set. Columns violating that need a manual grouping instead.
    """
    p = weak.num_sources
    emitted = np.zeros(p, dtype=np.int64)
    for j in range(p):
        col = weak.weak_labels[:, j]
        values = np.unique(col[col != ABSTAIN])
        if len(values) != 1:
            raise GroupingError(
                f"LF column {j} emits {len(values)} distinct labels; "
                "provide a manual grouping"
            )
        emitted[j] = values[0]
    labels = np.unique(emitted)
    label_to_group = {int(lab): g for g, lab in enumerate(labels)}
    group_of = np.array([label_to_group[int(lab)] for lab in emitted])
    return SourceGrouping(group_of, len(labels))


def _row_majority(votes: np.ndarray, num_classes: int) -> int:
    votes = votes[votes != ABSTAIN]
    if votes.size == 0:
        return ABSTAIN
    counts = np.bincount(votes, minlength=num_classes + 1)
    return int(np.argmax(counts[1:]) + 1)  # first max -> smallest label


def group_weak_matrix(
    weak_labels: np.ndarray,
    g: SourceGrouping,
    num_classes: int,
    policy: str = "majority",
) -> np.ndarray:
    """Collapse LF columns of a raw weak-label matrix into grouped columns.

    policy="majority": within-group majority over non-abstain member votes,
    ties to the smallest label. policy="first-match": the first non-abstain
    member vote in column order.
    """
    weak_labels = np.asarray(weak_labels, dtype=np.int64)
    if len(g.group_of) != weak_labels.shape[1]:
        raise ValidationError("grouping does not match the LF count")
    if policy not in ("majority", "first-match"):
        raise ValidationError(f"unknown grouping policy {policy!r}")
    n = weak_labels.shape[0]
    grouped = np.zeros((n, g.num_groups), dtype=np.int64)
    for grp in range(g.num_groups):
        cols = weak_labels[:, g.group_of == grp]
        if policy == "majority":
            for i in range(n):
                grouped[i, grp] = _row_majority(cols[i], num_classes)
        else:
            hit = cols != ABSTAIN
            first = np.argmax(hit, axis=1)
            any_hit = hit.any(axis=1)
            grouped[any_hit, grp] = cols[np.arange(n), first][any_hit]
    return grouped


def apply_grouping(
    weak: WeakLabeledSet, g: SourceGrouping, policy: str = "majority"
) -> WeakLabeledSet:
    """Collapse a weak set's LF columns into grouped weak-source columns."""
    grouped = group_weak_matrix(
        weak.weak_labels, g, weak.label_space.num_classes, policy
    )
    return WeakLabeledSet(weak.label_space, weak.instances, grouped)
