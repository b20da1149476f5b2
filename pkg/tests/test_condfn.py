"""The conditional source function (gate) and its hard-matching ablation."""

import numpy as np
import pytest

from wsboost.condfn import (
    CondFnHyper,
    SourceIndexSet,
    build_source_index,
    cond_fn_from_dict,
    cond_fn_to_dict,
    hard_matching_q,
    load_cond_fn,
    q_eval,
    q_eval_batch,
    save_cond_fn,
    train_cond_fn,
)
from wsboost.datamodel import MatchMatrix, ValidationError

from conftest import make_blobs


class TestSourceIndexSet:
    def test_rejects_non_simplex_targets(self):
        with pytest.raises(ValidationError):
            SourceIndexSet(np.zeros((1, 2)), np.array([[0.5, 0.6]]))

    def test_rejects_row_count_mismatch(self):
        with pytest.raises(ValidationError):
            SourceIndexSet(np.zeros((2, 2)), np.array([[1.0, 0.0]]))


class TestBuildSourceIndex:
    def test_rows_normalized(self):
        match = MatchMatrix(np.array([[1, 1, 0], [1, 0, 0]]))
        ds = build_source_index(match, np.zeros((2, 4)))
        assert np.allclose(ds.targets[0], [0.5, 0.5, 0.0])
        assert np.allclose(ds.targets[1], [1.0, 0.0, 0.0])

    def test_all_zero_rows_dropped(self):
        match = MatchMatrix(np.array([[0, 0], [1, 0]]))
        ds = build_source_index(match, np.arange(4.0).reshape(2, 2))
        assert len(ds) == 1
        assert ds.features[0].tolist() == [2.0, 3.0]

    def test_row_count_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            build_source_index(MatchMatrix(np.ones((2, 2))), np.zeros((3, 2)))


def trained_gate(epochs=25):
    # two separable blobs; source 1 fires on class-1 instances, source 2 on
    # class-2 instances, so the gate should learn the routing
    feats, labels = make_blobs(40, seed=8)
    entries = np.stack([(labels == 1), (labels == 2)], axis=1).astype(np.int8)
    ds = build_source_index(MatchMatrix(entries), feats)
    gate = train_cond_fn(ds, CondFnHyper(hidden=(16, 16), epochs=epochs), 0)
    return gate, feats, labels


class TestTrainCondFn:
    def test_learns_source_routing(self):
        gate, feats, labels = trained_gate()
        probs = q_eval_batch(gate, feats)
        routed = np.argmax(probs, axis=1) + 1
        assert (routed == labels).mean() > 0.9

    def test_outputs_on_simplex(self):
        gate, feats, _ = trained_gate(epochs=2)
        probs = q_eval_batch(gate, feats)
        assert np.allclose(probs.sum(axis=1), 1.0)
        assert probs.min() >= 0

    def test_deterministic_given_seed(self):
        a, feats, _ = trained_gate(epochs=3)
        b, _, _ = trained_gate(epochs=3)
        assert np.allclose(q_eval_batch(a, feats), q_eval_batch(b, feats))

    def test_empty_dataset_rejected(self):
        ds = SourceIndexSet(np.zeros((0, 2)), np.zeros((0, 2)))
        with pytest.raises(ValidationError):
            train_cond_fn(ds, CondFnHyper(), 0)

    def test_q_eval_dimension_checked(self):
        gate, _, _ = trained_gate(epochs=1)
        with pytest.raises(ValidationError):
            q_eval(gate, np.zeros(5))
        with pytest.raises(ValidationError):
            q_eval_batch(gate, np.zeros((2, 5)))


class TestHardMatchingQ:
    def test_normalizes_match_row(self):
        assert np.allclose(hard_matching_q([1, 0, 1]), [0.5, 0.0, 0.5])

    def test_all_zero_row_uniform(self):
        assert np.allclose(hard_matching_q([0, 0, 0, 0]), 0.25)


class TestSerialization:
    def test_dict_roundtrip(self):
        gate, feats, _ = trained_gate(epochs=2)
        clone = cond_fn_from_dict(cond_fn_to_dict(gate))
        assert np.allclose(q_eval_batch(clone, feats), q_eval_batch(gate, feats))

    def test_file_roundtrip(self, tmp_path):
        gate, feats, _ = trained_gate(epochs=2)
        path = tmp_path / "gate.json"
        save_cond_fn(gate, path)
        clone = load_cond_fn(path)
        assert clone.num_sources == gate.num_sources
        assert np.allclose(q_eval_batch(clone, feats), q_eval_batch(gate, feats))
