"""Base learners and the shared softmax network."""

import numpy as np
import pytest

from wsboost.datamodel import ValidationError
from wsboost.learner import (
    LearnerHyper,
    predict_label,
    predict_labels_batch,
    predict_scores,
    predict_scores_batch,
    train_base,
)
from wsboost.mlp import SoftmaxNet, TrainSettings, TrainingError, softmax

from conftest import make_blobs


class TestTrainBase:
    def test_learns_separable_blobs(self, blob_data):
        feats, labels = blob_data
        learner = train_base((feats, labels), LearnerHyper(epochs=30), 0)
        preds = predict_labels_batch(learner, feats)
        assert (preds == labels).mean() > 0.95

    def test_hidden_layer_variant(self, blob_data):
        feats, labels = blob_data
        learner = train_base(
            (feats, labels), LearnerHyper(hidden=8, epochs=30), 0
        )
        assert learner.net.sizes == (2, 8, 2)
        preds = predict_labels_batch(learner, feats)
        assert (preds == labels).mean() > 0.95

    def test_num_classes_fixes_score_length(self):
        feats, labels = make_blobs(10)
        learner = train_base(
            (feats, labels), LearnerHyper(epochs=2), 0, num_classes=5
        )
        assert predict_scores(learner, feats[0]).shape == (5,)

    def test_deterministic_given_seed(self, blob_data):
        feats, labels = blob_data
        a = train_base((feats, labels), LearnerHyper(epochs=5), 3)
        b = train_base((feats, labels), LearnerHyper(epochs=5), 3)
        assert all(
            np.array_equal(x, y) for x, y in zip(a.net.weights, b.net.weights)
        )

    def test_rejects_empty_region(self):
        with pytest.raises(ValidationError):
            train_base((np.zeros((0, 2)), np.zeros(0)), LearnerHyper(), 0)

    def test_rejects_abstain_labels(self):
        with pytest.raises(ValidationError):
            train_base((np.zeros((2, 2)), np.array([0, 1])), LearnerHyper(), 0)

    def test_rejects_labels_beyond_num_classes(self):
        with pytest.raises(ValidationError):
            train_base(
                (np.zeros((2, 2)), np.array([1, 3])),
                LearnerHyper(),
                0,
                num_classes=2,
            )


class TestPredict:
    def test_scores_are_simplex(self, blob_data):
        feats, labels = blob_data
        learner = train_base((feats, labels), LearnerHyper(epochs=3), 0)
        scores = predict_scores_batch(learner, feats)
        assert np.allclose(scores.sum(axis=1), 1.0)
        assert scores.min() >= 0

    def test_label_is_argmax_plus_one(self, blob_data):
        feats, labels = blob_data
        learner = train_base((feats, labels), LearnerHyper(epochs=3), 0)
        x = feats[0]
        assert predict_label(learner, x) == int(
            np.argmax(predict_scores(learner, x)) + 1
        )

    def test_dimension_checked(self, blob_data):
        feats, labels = blob_data
        learner = train_base((feats, labels), LearnerHyper(epochs=1), 0)
        with pytest.raises(ValidationError):
            predict_scores(learner, np.zeros(3))
        with pytest.raises(ValidationError):
            predict_scores_batch(learner, np.zeros((2, 3)))


class TestSoftmaxNet:
    def test_softmax_rows_sum_to_one(self):
        logits = np.random.default_rng(0).normal(size=(4, 3)) * 50
        probs = softmax(logits)
        assert np.allclose(probs.sum(axis=1), 1.0)
        assert np.isfinite(probs).all()

    def test_serialization_roundtrip(self):
        net = SoftmaxNet((3, 5, 2), rng=np.random.default_rng(1))
        clone = SoftmaxNet.from_dict(net.to_dict())
        x = np.random.default_rng(2).normal(size=(6, 3))
        assert np.allclose(net.predict_proba(x), clone.predict_proba(x))

    def test_flat_parameter_roundtrip(self):
        net = SoftmaxNet((3, 4, 2), rng=np.random.default_rng(1))
        flat = net.get_flat()
        other = SoftmaxNet((3, 4, 2), rng=np.random.default_rng(9))
        other.set_flat(flat)
        x = np.random.default_rng(2).normal(size=(5, 3))
        assert np.allclose(net.predict_proba(x), other.predict_proba(x))

    def test_training_reduces_loss(self):
        feats, labels = make_blobs(20)
        targets = np.zeros((40, 2))
        targets[np.arange(40), labels - 1] = 1.0
        rng = np.random.default_rng(0)
        net = SoftmaxNet((2, 2), rng=rng)
        before = net.loss(feats, targets)
        history = net.train(feats, targets, TrainSettings(epochs=10), rng)
        assert history[-1] < before

    def test_relu_activation_supported(self):
        feats, labels = make_blobs(20)
        learner = train_base(
            (feats, labels),
            LearnerHyper(hidden=6, epochs=10, activation="relu"),
            0,
        )
        preds = predict_labels_batch(learner, feats)
        assert (preds == labels).mean() > 0.8

    def test_unknown_activation_rejected(self):
        net = SoftmaxNet((2, 3, 2), activation="gelu")
        with pytest.raises(ValueError):
            net.predict_proba(np.zeros((1, 2)))

    def test_non_finite_loss_raises_training_error(self):
        feats, labels = make_blobs(10)
        targets = np.zeros((20, 2))
        targets[np.arange(20), labels - 1] = 1.0
        rng = np.random.default_rng(0)
        net = SoftmaxNet((2, 2), rng=rng)
        net.weights[0][:] = np.inf
        with np.errstate(invalid="ignore"), pytest.raises(TrainingError):
            net.train(feats, targets, TrainSettings(epochs=1), rng)
