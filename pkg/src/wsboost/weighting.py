"""Estimate-then-modify weight computation for base learners.

The weight of a new learner is first estimated AdaBoost-style on the weak
labels, then the whole weight vector is corrected by Gaussian perturbation
search minimizing exponential margin error on the clean set. The unperturbed
vector is always candidate 0, so the correction never degrades clean error.
"""

from __future__ import annotations

import numpy as np

from .datamodel import ValidationError

ERR_CLAMP = 1e-6
PERTURB_RETRIES = 8


def init_data_weights(n: int) -> np.ndarray:
    """Uniform weights 1/n over the weak training instances."""
    if n < 1:
        raise ValidationError("need at least one instance")
    return np.full(n, 1.0 / n)


def weighted_error(w: np.ndarray, preds, weak) -> float:
    """Total data weight on instances where the prediction misses the weak label."""
    preds = np.asarray(preds)
    weak = np.asarray(weak)
    if not (len(w) == len(preds) == len(weak)):
        raise ValidationError("weights/preds/labels length mismatch")
    return float(w[preds != weak].sum())


def estimate_alpha(err: float) -> float:
    """log((1 - err) / err), with err clamped away from {0, 1}."""
    err = min(max(err, ERR_CLAMP), 1.0 - ERR_CLAMP)
    return float(np.log((1.0 - err) / err))


def update_data_weights(w: np.ndarray, alpha: float, ensemble_preds, weak) -> np.ndarray:
    """Multiply weights on ensemble mismatches by e^alpha, then renormalize."""
    ensemble_preds = np.asarray(ensemble_preds)
    weak = np.asarray(weak)
    if not (len(w) == len(ensemble_preds) == len(weak)):
        raise ValidationError("weights/preds/labels length mismatch")
    out = w * np.exp(alpha * (ensemble_preds != weak))
    total = out.sum()
    if total <= 0:
        raise RuntimeError("data weights collapsed to zero")
    return out / total


def _clip_normalize(v: np.ndarray):
    clipped = np.clip(v, 0.0, None)
    total = clipped.sum()
    if total == 0:
        return None
    return clipped / total


def perturb_weights(v, n_p: int, mu: float, sigma: float, rng_seed: int):
    """Candidate weight vectors: the clip-normalized input (candidate 0) plus
    n_p entrywise Gaussian-noised copies, negatives clipped to 0, each
    normalized to sum 1. A candidate collapsing to all zeros is resampled a
    bounded number of times, then replaced by uniform."""
    v = np.asarray(v, dtype=np.float64)
    if n_p < 1:
        raise ValidationError("need at least one perturbation")
    if sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    uniform = np.full(v.shape, 1.0 / v.shape[0])
    base = _clip_normalize(v)
    candidates = [base if base is not None else uniform]
    rng = np.random.default_rng(rng_seed)
    for _ in range(n_p):
        cand = None
        for _ in range(PERTURB_RETRIES):
            cand = _clip_normalize(v + rng.normal(mu, sigma, size=v.shape))
            if cand is not None:
                break
        candidates.append(cand if cand is not None else uniform)
    return candidates


def exp_margin_error(raw_scores: np.ndarray, gold) -> float:
    """Sum over instances of exp(-margin), margin = score on the gold class
    minus the best other class, on raw (unnormalized) ensemble scores."""
    scores = np.asarray(raw_scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64)
    n = scores.shape[0]
    idx = np.arange(n)
    gold_scores = scores[idx, gold - 1]
    masked = scores.copy()
    masked[idx, gold - 1] = -np.inf
    margins = gold_scores - masked.max(axis=1)
    return float(np.exp(-margins).sum())


def clean_error(member_scores: np.ndarray, weights, gold) -> float:
    """Exponential margin error of a candidate-weighted ensemble on the clean
    set. ``member_scores`` is the M x N_c x C array of gate-modulated member
    score vectors; ``weights`` the length-M candidate."""
    raw = np.tensordot(np.asarray(weights, dtype=np.float64), member_scores, axes=1)
    return exp_margin_error(raw, gold)


def select_weights(candidates, member_scores: np.ndarray, gold):
    """Candidate with minimal clean error; ties go to the lowest index, so the
    unperturbed candidate 0 wins exact ties. Returns (winner, errors)."""
    if not candidates:
        raise ValidationError("no candidates")
    errors = [clean_error(member_scores, cand, gold) for cand in candidates]
    best = int(np.argmin(errors))  # first minimum -> lowest index
    return candidates[best], errors
