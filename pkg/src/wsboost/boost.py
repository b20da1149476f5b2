"""Two-dimension boosting orchestrator and the gate-modulated ensemble.

The ensemble score is the weighted, gate-modulated sum of base learner score
vectors. Boosting runs an outer loop over iterations (refining learners
within sources) and an inner loop over weak sources (adding learners that
complement other sources); each round localizes a new learner on the weak
set, estimates its weight on weak labels and corrects the whole weight
vector on the clean set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .condfn import CondFn, cond_fn_from_dict, cond_fn_to_dict, q_eval_batch
from .datamodel import (
    ABSTAIN,
    CleanSet,
    LabelSpace,
    ValidationError,
    WeakLabeledSet,
)
from .learner import (
    BaseLearner,
    LearnerHyper,
    predict_labels_batch,
    predict_scores_batch,
    train_base,
)
from .localize import (
    DEFAULT_N_MIN,
    EXACT_PAIR_THRESHOLD,
    ErrorMatrix,
    avg_pairwise_distance,
    build_local_region,
    update_error_matrix,
)
from .metrics import compute_metrics
from .mlp import SoftmaxNet
from .weighting import (
    clean_error,
    estimate_alpha,
    init_data_weights,
    perturb_weights,
    select_weights,
    update_data_weights,
    weighted_error,
)

ENSEMBLE_SCHEMA_VERSION = 1

VARIANTS = (
    "full",
    "no_cond_fn",
    "hard_matching",
    "weak_only_weights",
    "integrated_mode",
)

# grid used by the integrated_mode ablation to pick the newest weight by
# direct clean-error minimization (earlier weights are normalized to sum 1,
# so the grid spans relative weights from 0 to ~70% of the ensemble)
INTEGRATED_ALPHA_GRID = np.linspace(0.0, 2.5, 51)


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

class UniformGate:
    """Constant uniform probability over sources (gate-disabled ablation)."""

    def __init__(self, num_sources: int):
        self.num_sources = num_sources

    def probs(self, features, lf_rows=None):
        n = np.asarray(features).shape[0]
        return np.full((n, self.num_sources), 1.0 / self.num_sources)

    def to_dict(self):
        return {"kind": "uniform", "num_sources": self.num_sources}


class LearnedGate:
    """Wraps a trained conditional source function."""

    def __init__(self, cond_fn: CondFn):
        self.cond_fn = cond_fn

    @property
    def num_sources(self):
        return self.cond_fn.num_sources

    def probs(self, features, lf_rows=None):
        return q_eval_batch(self.cond_fn, features)

    def to_dict(self):
        return {"kind": "learned", **cond_fn_to_dict(self.cond_fn)}


class HardMatchGate:
    """Per-instance normalized LF matching row (hard-matching ablation).
    Requires the weak-label rows of the evaluated instances."""

    def __init__(self, num_sources: int):
        self.num_sources = num_sources

    def probs(self, features, lf_rows=None):
        if lf_rows is None:
            raise ValidationError("hard-matching gate needs weak-label rows")
        match = (np.asarray(lf_rows) != ABSTAIN).astype(np.float64)
        totals = match.sum(axis=1)
        out = np.full(match.shape, 1.0 / self.num_sources)
        hit = totals > 0
        out[hit] = match[hit] / totals[hit, None]
        return out

    def to_dict(self):
        return {"kind": "hard", "num_sources": self.num_sources}


def gate_from_dict(doc):
    kind = doc["kind"]
    if kind == "uniform":
        return UniformGate(int(doc["num_sources"]))
    if kind == "hard":
        return HardMatchGate(int(doc["num_sources"]))
    if kind == "learned":
        return LearnedGate(cond_fn_from_dict(doc))
    raise ValidationError(f"unknown gate kind {kind!r}")


# ---------------------------------------------------------------------------
# Ensemble
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnsembleMember:
    iteration: int  # t
    source: int  # l, 1-based
    learner: BaseLearner


@dataclass(eq=False)
class Ensemble:
    label_space: LabelSpace
    members: list[EnsembleMember]
    weights: np.ndarray
    gate: object

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.members) != self.weights.shape[0] or not self.members:
            raise ValidationError("members and weights must align and be nonempty")

    @property
    def num_sources(self):
        return self.gate.num_sources


def member_gated_scores(e: Ensemble, features, lf_rows=None) -> np.ndarray:
    """M x N x C array: each member's score vectors scaled by its gate mass."""
    gate_probs = e.gate.probs(features, lf_rows)
    return np.stack(
        [
            gate_probs[:, m.source - 1][:, None]
            * predict_scores_batch(m.learner, features)
            for m in e.members
        ]
    )


def ensemble_scores_batch(e: Ensemble, features, lf_rows=None) -> np.ndarray:
    """Raw (unnormalized) ensemble score matrix, one row per instance."""
    return np.tensordot(e.weights, member_gated_scores(e, features, lf_rows), axes=1)


def _normalize_rows(raw: np.ndarray) -> np.ndarray:
    totals = raw.sum(axis=1)
    out = np.full(raw.shape, 1.0 / raw.shape[1])
    pos = totals > 0
    out[pos] = raw[pos] / totals[pos, None]
    return out


def ensemble_scores(e: Ensemble, x, lf_row=None):
    """Raw and normalized ensemble score vectors for one instance."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("expected a single feature vector")
    rows = None if lf_row is None else np.asarray(lf_row)[None, :]
    raw = ensemble_scores_batch(e, x[None, :], rows)
    return raw[0], _normalize_rows(raw)[0]


def ensemble_predict(e: Ensemble, x, lf_row=None) -> int:
    """Argmax of the ensemble score; ties break to the smallest class."""
    raw, _ = ensemble_scores(e, x, lf_row)
    return int(np.argmax(raw) + 1)


def ensemble_predict_batch(e: Ensemble, features, lf_rows=None) -> np.ndarray:
    return np.argmax(ensemble_scores_batch(e, features, lf_rows), axis=1) + 1


# ---------------------------------------------------------------------------
# Configuration and per-round records
# ---------------------------------------------------------------------------

@dataclass
class BoostConfig:
    iterations: int = 5  # T
    k: int = 5
    c1: float = 4.0
    n_p: int = 16
    mu: float = 0.0
    sigma: Optional[float] = None  # None -> 0.1 * mean |weight|
    n_min: int = DEFAULT_N_MIN
    exact_pair_threshold: int = EXACT_PAIR_THRESHOLD
    hard_error_increment: bool = False
    classic_update: bool = False  # data-weight update from the newest learner
    learner: LearnerHyper = field(default_factory=LearnerHyper)

    def __post_init__(self):
        if self.iterations < 1 or self.k < 1:
            raise ValidationError("iterations and k must be >= 1")
        if self.c1 <= 0:
            raise ValidationError("c1 must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise ValidationError("sigma must be nonnegative")


@dataclass
class RoundRecord:
    t: int
    l: int
    clean_acc: float
    clean_f1: float
    region_size: int
    fallback_anchors: int
    alpha_est: float
    alpha_final: float
    candidate_errors: list[float]
    weights: list[float]

    def to_dict(self):
        return {
            "t": self.t,
            "l": self.l,
            "clean_acc": self.clean_acc,
            "clean_f1": self.clean_f1,
            "region_size": self.region_size,
            "fallback_anchors": self.fallback_anchors,
            "alpha_est": self.alpha_est,
            "alpha_final": self.alpha_final,
            "candidate_errors": self.candidate_errors,
            "weights": self.weights,
        }


@dataclass
class BoostResult:
    ensemble: Ensemble
    rounds: list[RoundRecord]
    converged: bool


# ---------------------------------------------------------------------------
# The boosting loop
# ---------------------------------------------------------------------------

def _clip_normalize_or_uniform(v: np.ndarray) -> np.ndarray:
    clipped = np.clip(v, 0.0, None)
    total = clipped.sum()
    if total == 0:
        return np.full(v.shape, 1.0 / v.shape[0])
    return clipped / total


def _run(dl, dc, gate, config, rng_seed, mode) -> BoostResult:
    space = dl.label_space
    c = space.num_classes
    if dl.aggregated_labels is None:
        raise ValidationError("weak set needs aggregated labels (run a voting baseline first)")
    if gate.num_sources != dl.num_sources:
        raise ValidationError("gate source count does not match the weak set")

    agg = dl.aggregated_labels
    active = np.nonzero(agg != ABSTAIN)[0]
    if active.size == 0:
        raise ValidationError("every weak row is abstain; nothing to train on")
    x_act = dl.features[active]
    y_act = agg[active]
    x_clean = dc.features
    gold = dc.labels

    t_max = config.iterations
    p = gate.num_sources
    n_rounds = t_max * p
    seeds = np.random.SeedSequence(rng_seed).generate_state(2 + 2 * n_rounds)

    d_avg, _ = avg_pairwise_distance(
        dl, rng_seed=int(seeds[0]), exact_threshold=config.exact_pair_threshold
    )
    gate_act = gate.probs(x_act, dl.weak_labels[active])
    gate_clean = gate.probs(x_clean, dc.weak_labels)

    # init: slot (1, 1) is fit on all non-abstain rows with weight 1
    f_init = train_base(
        (x_act, y_act), config.learner, int(seeds[1]), num_classes=c
    )
    members = [EnsembleMember(1, 1, f_init)]
    v = np.array([1.0])
    gated_clean = [
        gate_clean[:, 0][:, None] * predict_scores_batch(f_init, x_clean)
    ]
    gated_act = [gate_act[:, 0][:, None] * predict_scores_batch(f_init, x_act)]

    err_matrix = ErrorMatrix.zeros(len(dc))
    w = init_data_weights(active.size)
    rounds: list[RoundRecord] = []
    converged = False
    seed_pos = 2

    slots = [(t, l) for t in range(1, t_max + 1) for l in range(1, p + 1)][1:]
    for t, l in slots:
        # inference with the preceding ensemble on the clean set
        stack_clean = np.stack(gated_clean)
        raw_clean = np.tensordot(v, stack_clean, axes=1)
        norm_clean = _normalize_rows(raw_clean)
        err_matrix = update_error_matrix(
            err_matrix, norm_clean, gold, hard=config.hard_error_increment
        )
        report = compute_metrics(np.argmax(raw_clean, axis=1) + 1, gold, space)
        if err_matrix.values.max() == 0:
            converged = True
            break

        # localize and fit the new base learner
        region = build_local_region(
            err_matrix, dl, dc, config.k, config.c1, d_avg, n_min=config.n_min
        )
        trainable = region.member_indices[
            agg[region.member_indices] != ABSTAIN
        ]
        if trainable.size == 0:
            # region carries no usable weak labels: nearest non-abstain rows
            anchor = dc.features[region.anchor_indices[0]]
            dists = kernels.point_distances(x_act, anchor)
            n_min = min(config.n_min, active.size)
            nearest = np.argpartition(dists, n_min - 1)[:n_min]
            x_reg, y_reg = x_act[nearest], y_act[nearest]
        else:
            x_reg, y_reg = dl.features[trainable], agg[trainable]
        learner_seed = int(seeds[seed_pos])
        seed_pos += 1
        f_new = train_base(
            (x_reg, y_reg), config.learner, learner_seed, num_classes=c
        )

        # estimate the weight on the weak labels
        preds_new = predict_labels_batch(f_new, x_act)
        err_weak = weighted_error(w, preds_new, y_act)
        alpha_est = estimate_alpha(err_weak)

        members.append(EnsembleMember(t, l, f_new))
        v = np.append(v, alpha_est)
        gated_clean.append(
            gate_clean[:, l - 1][:, None] * predict_scores_batch(f_new, x_clean)
        )
        gated_act.append(
            gate_act[:, l - 1][:, None] * predict_scores_batch(f_new, x_act)
        )

        perturb_seed = int(seeds[seed_pos])
        seed_pos += 1
        stack_clean = np.stack(gated_clean)

        # modify the weight vector on the clean set
        if mode == "weak_only_weights":
            alpha_final = alpha_est
            candidate_errors = [clean_error(stack_clean, v, gold)]
        elif mode == "integrated_mode":
            candidates = [
                _clip_normalize_or_uniform(np.append(v[:-1], g))
                for g in INTEGRATED_ALPHA_GRID
            ]
            chosen, candidate_errors = select_weights(candidates, stack_clean, gold)
            best = int(np.argmin(candidate_errors))
            alpha_final = float(INTEGRATED_ALPHA_GRID[best])
            v = chosen
        else:  # full boosting (gate ablations share this path)
            sigma = config.sigma
            if sigma is None:
                sigma = 0.1 * float(np.mean(np.abs(v))) or 0.1
            candidates = perturb_weights(
                v, config.n_p, config.mu, sigma, perturb_seed
            )
            v, candidate_errors = select_weights(candidates, stack_clean, gold)
            alpha_final = float(v[-1])

        # data-weight update uses the ensemble's predictions (set
        # classic_update for the per-learner AdaBoost form)
        if config.classic_update:
            ens_preds = preds_new
        else:
            raw_act = np.tensordot(v, np.stack(gated_act), axes=1)
            ens_preds = np.argmax(raw_act, axis=1) + 1
        # the update uses the member's weight as it stands in the ensemble,
        # i.e. after the modification step corrected any negative estimate
        w = update_data_weights(w, alpha_final, ens_preds, y_act)

        rounds.append(
            RoundRecord(
                t=t,
                l=l,
                clean_acc=report.accuracy,
                clean_f1=report.macro_f1,
                region_size=region.size,
                fallback_anchors=int(region.fallback_flags.sum()),
                alpha_est=float(alpha_est),
                alpha_final=float(alpha_final),
                candidate_errors=[float(x) for x in candidate_errors],
                weights=[float(x) for x in v],
            )
        )

    ensemble = Ensemble(space, members, v, gate)
    return BoostResult(ensemble, rounds, converged)


def run_localboost(
    dl: WeakLabeledSet,
    dc: CleanSet,
    gate,
    config: BoostConfig,
    rng_seed: int,
) -> BoostResult:
    """Full boosting run: localization, weak-label weight estimation and
    clean-set perturbation correction every round."""
    return _run(dl, dc, gate, config, rng_seed, mode="full")


def run_ablation(
    variant: str,
    dl: WeakLabeledSet,
    dc: CleanSet,
    gate,
    config: BoostConfig,
    rng_seed: int,
) -> BoostResult:
    """Run one of the framework ablations.

    no_cond_fn: constant uniform gate. hard_matching: per-instance normalized
    LF-match gate. weak_only_weights: keep the weak-label weight estimates
    (no clean correction). integrated_mode: pick each new weight by direct
    clean-error minimization instead of estimating it on weak labels.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    if variant == "no_cond_fn":
        return _run(dl, dc, UniformGate(dl.num_sources), config, rng_seed, "full")
    if variant == "hard_matching":
        return _run(dl, dc, HardMatchGate(dl.num_sources), config, rng_seed, "full")
    return _run(dl, dc, gate, config, rng_seed, variant)


# ---------------------------------------------------------------------------
# Convex-combination failure demo
# ---------------------------------------------------------------------------

def prop1_counterexample(grid_size: int = 101) -> dict:
    """Two weak sources, two points, two constant learners.

    Source 1 labels x1 positive (class 1 here, +1 in signed form), source 2
    labels x2 negative (class 2, -1). Each constant learner is perfect on its
    own source, yet every convex combination alpha*f1 + (1-alpha)*f2 has 0-1
    loss >= 1/2 on the even mixture: the signed score at both points is
    2*alpha - 1 and a zero or adverse score counts as an error (non-strict
    inequality, so alpha = 1/2 loses on both points). Gating each learner to
    its own source removes the cross terms and the loss drops to zero.
    """
    alphas = np.linspace(0.0, 1.0, grid_size)
    signed = 2.0 * alphas - 1.0
    convex_losses = 0.5 * (signed <= 0) + 0.5 * (-signed <= 0)

    alpha = 0.5
    score_x1 = alpha * 1.0  # Q(1|x1) = 1, Q(2|x1) = 0
    score_x2 = (1.0 - alpha) * -1.0  # Q(2|x2) = 1, Q(1|x2) = 0
    gated_loss = 0.5 * (score_x1 <= 0) + 0.5 * (-score_x2 <= 0)

    return {
        "alphas": alphas.tolist(),
        "convex_losses": convex_losses.tolist(),
        "min_convex_loss": float(convex_losses.min()),
        "gated_alpha": alpha,
        "gated_loss": float(gated_loss),
    }


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def ensemble_to_dict(e: Ensemble) -> dict:
    return {
        "schema_version": ENSEMBLE_SCHEMA_VERSION,
        "num_classes": e.label_space.num_classes,
        "num_sources": e.num_sources,
        "weights": [float(x) for x in e.weights],
        "members": [
            {
                "t": m.iteration,
                "l": m.source,
                "learner": m.learner.net.to_dict(),
            }
            for m in e.members
        ],
        "gate": e.gate.to_dict(),
    }


def ensemble_from_dict(doc: dict) -> Ensemble:
    if doc.get("schema_version") != ENSEMBLE_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported ensemble schema_version {doc.get('schema_version')!r}"
        )
    space = LabelSpace(int(doc["num_classes"]))
    members = [
        EnsembleMember(
            int(rec["t"]),
            int(rec["l"]),
            BaseLearner(SoftmaxNet.from_dict(rec["learner"]), space),
        )
        for rec in doc["members"]
    ]
    return Ensemble(
        space, members, np.asarray(doc["weights"]), gate_from_dict(doc["gate"])
    )
