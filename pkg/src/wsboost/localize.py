"""Error-matrix bookkeeping on the clean set and error-guided cluster
sampling on the weak set to build each base learner's local training region.

Anchors are the clean instances with the largest accumulated error; each
anchor pulls in the weak instances within a radius inversely proportional to
its error. Distance scans go through the kernels package (compiled core when
available)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .datamodel import CleanSet, ValidationError, WeakLabeledSet

EXACT_PAIR_THRESHOLD = 2000
DEFAULT_N_MIN = 32


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    """Per-clean-instance accumulated error; entries never decrease."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError("error matrix must be a 1-D vector")
        if values.size and values.min() < 0:
            raise ValidationError("error matrix entries must be nonnegative")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n_clean: int) -> "ErrorMatrix":
        return cls(np.zeros(n_clean))

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class LocalRegion:
    """Training region for one base learner: deduplicated member indices into
    the weak set, plus the anchors and radii that produced them."""

    member_indices: np.ndarray
    anchor_indices: np.ndarray
    radii: np.ndarray
    fallback_flags: np.ndarray  # per anchor: True if nearest-n_min fallback used

    def __post_init__(self):
        if self.member_indices.size == 0:
            raise ValidationError("local region must be nonempty")

    @property
    def size(self):
        return int(self.member_indices.shape[0])


def update_error_matrix(
    m: ErrorMatrix, ensemble_scores: np.ndarray, gold: np.ndarray, hard: bool = False
) -> ErrorMatrix:
    """Accumulate one round of clean-set error: values[i] += 1 - score on the
    gold class (soft), or the misclassification indicator when hard=True."""
    scores = np.asarray(ensemble_scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != len(m) or gold.shape[0] != len(m):
        raise ValidationError("scores/gold shape does not match the error matrix")
    if hard:
        increment = (np.argmax(scores, axis=1) + 1 != gold).astype(np.float64)
    else:
        increment = 1.0 - scores[np.arange(len(m)), gold - 1]
    return ErrorMatrix(m.values + np.clip(increment, 0.0, 1.0))


def top_k_errors(m: ErrorMatrix, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties broken by smaller index."""
    if not 1 <= k <= len(m):
        raise ValidationError(f"k={k} out of range [1, {len(m)}]")
    order = np.argsort(-m.values, kind="stable")
    return order[:k]


def avg_pairwise_distance(
    dl,
    rng_seed: int = 0,
    exact_threshold: int = EXACT_PAIR_THRESHOLD,
):
    """Mean Euclidean distance over unordered pairs of weak instances.

    Exact for N <= exact_threshold; above that, a seeded uniform sample of
    exact_threshold^2 / 2 pairs. Returns (d, pair_count_used).
    """
    feats = dl.features if isinstance(dl, WeakLabeledSet) else np.asarray(dl)
    n = feats.shape[0]
    if n < 2:
        raise ValidationError("need at least two instances")
    total_pairs = n * (n - 1) // 2
    if n <= exact_threshold:
        return kernels.mean_pairwise_distance(feats), total_pairs
    rng = np.random.default_rng(rng_seed)
    n_pairs = exact_threshold * exact_threshold // 2
    ii = rng.integers(0, n, size=n_pairs)
    jj = rng.integers(0, n - 1, size=n_pairs)
    jj[jj >= ii] += 1  # uniform over ordered pairs with i != j
    return kernels.mean_indexed_distance(feats, ii, jj), n_pairs


def sample_cluster(
    anchor_features,
    dl,
    radius: float,
    n_min: int = DEFAULT_N_MIN,
):
    """All weak instances within ``radius`` of the anchor; if none, the n_min
    nearest instead. Returns (member indices, fallback flag)."""
    if not (radius > 0 and np.isfinite(radius)):
        raise ValidationError("radius must be positive and finite")
    feats = dl.features if isinstance(dl, WeakLabeledSet) else np.asarray(dl)
    anchor = np.asarray(anchor_features, dtype=np.float64)
    dists = kernels.point_distances(feats, anchor)
    members = np.nonzero(dists <= radius)[0]
    if members.size > 0:
        return members, False
    n_min = min(n_min, feats.shape[0])
    nearest = np.argpartition(dists, n_min - 1)[:n_min]
    return np.sort(nearest), True


def build_local_region(
    m: ErrorMatrix,
    dl: WeakLabeledSet,
    dc: CleanSet,
    k: int,
    c1: float,
    d: float,
    n_min: int = DEFAULT_N_MIN,
) -> LocalRegion:
    """Union of radius-bounded clusters around the top-k error anchors.

    radius_j = c1 * d / error(anchor_j). Anchors with zero accumulated error
    are skipped (the radius formula would divide by zero); the caller must
    have checked that at least one entry is positive.
    """
    if not (d > 0 and c1 > 0):
        raise ValidationError("c1 and d must be positive")
    ranked = np.argsort(-m.values, kind="stable")
    anchors = [int(j) for j in ranked if m.values[j] > 0][:k]
    if not anchors:
        raise ValidationError("all accumulated errors are zero; nothing to localize")

    members = []
    radii = []
    flags = []
    for j in anchors:
        radius = c1 * d / m.values[j]
        idx, used_fallback = sample_cluster(
            dc.features[j], dl, radius, n_min=n_min
        )
        members.append(idx)
        radii.append(radius)
        flags.append(used_fallback)
    return LocalRegion(
        member_indices=np.unique(np.concatenate(members)),
        anchor_indices=np.asarray(anchors, dtype=np.int64),
        radii=np.asarray(radii),
        fallback_flags=np.asarray(flags, dtype=bool),
    )
