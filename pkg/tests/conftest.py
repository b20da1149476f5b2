"""Shared fixtures and the acceptance-criteria reporting hook."""

import numpy as np
import pytest

from wsboost.datamodel import CleanSet, Instance, LabelSpace, WeakLabeledSet

# One line per acceptance criterion, printed in the terminal summary so the
# pass/fail verdicts are visible regardless of output capturing.
_CRITERION_LINES = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> None:
        verdict = "PASS" if passed else "FAIL"
        _CRITERION_LINES[number] = f"CRITERION {number}: {verdict} — {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])


# ---------------------------------------------------------------------------
# Small deterministic datasets shared across unit tests
# ---------------------------------------------------------------------------

def make_blobs(n_per_class, num_classes=2, dim=2, spread=0.3, seed=0):
    """Well-separated Gaussian blobs, one per class, labels 1..C."""
    rng = np.random.default_rng(seed)
    centers = 3.0 * np.eye(max(num_classes, dim))[:num_classes, :dim]
    feats, labels = [], []
    for c in range(num_classes):
        feats.append(centers[c] + rng.normal(0, spread, size=(n_per_class, dim)))
        labels.extend([c + 1] * n_per_class)
    return np.concatenate(feats), np.asarray(labels, dtype=np.int64)


@pytest.fixture
def blob_data():
    return make_blobs(40)


@pytest.fixture
def tiny_weak_set():
    """12 instances, 2 classes, 3 weak sources with abstains."""
    feats, labels = make_blobs(6, seed=1)
    rng = np.random.default_rng(2)
    weak = np.zeros((12, 3), dtype=np.int64)
    for j in range(3):
        fire = rng.random(12) < 0.8
        noisy = rng.random(12) < 0.2
        votes = labels.copy()
        votes[noisy] = 3 - votes[noisy]  # flip 1 <-> 2
        weak[fire, j] = votes[fire]
    instances = [
        Instance(f"i{i}", feats[i], int(labels[i])) for i in range(12)
    ]
    return WeakLabeledSet(LabelSpace(2), instances, weak)


@pytest.fixture
def tiny_clean_set():
    feats, labels = make_blobs(5, seed=3)
    instances = [
        Instance(f"c{i}", feats[i], int(labels[i])) for i in range(10)
    ]
    return CleanSet(LabelSpace(2), instances)
