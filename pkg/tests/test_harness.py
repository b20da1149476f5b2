"""Run configuration, metrics, experiment drivers and the CLI."""

import json
from pathlib import Path

import numpy as np
import pytest

from wsboost.datamodel import LabelSpace, ValidationError
from wsboost.harness import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    PROFILES,
    RunConfig,
    cli_main,
    load_config,
    majority_vote_baseline,
    prepare_data,
    run_training,
    seed_sweep,
)
from wsboost.metrics import compute_metrics


def generator_doc(**overrides):
    doc = {
        "num_classes": 2,
        "feature_dim": 4,
        "num_clusters": 4,
        "n_weak": 300,
        "n_clean": 150,
        "n_test": 100,
        "center_scale": 2.0,
        "lfs": [
            {"emitted_label": 1, "noise_rate": 0.1, "coverage": 0.5},
            {"emitted_label": 2, "noise_rate": 0.1, "coverage": 0.5},
        ],
    }
    doc.update(overrides)
    return doc


def config_doc(**overrides):
    doc = {
        "generator": generator_doc(),
        "iterations": 2,
        "clean_size": 60,
        "n_p": 4,
        "sigma": 0.3,
        "learner": {"epochs": 5},
        "gate": {"hidden": [8, 8], "epochs": 3},
    }
    doc.update(overrides)
    return doc


class TestRunConfig:
    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(config_doc(budget=3))

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(config_doc(gate={"lr": 0.1}))
        with pytest.raises(ConfigError):
            RunConfig.from_dict(
                config_doc(generator=generator_doc(extra_dim=1))
            )

    def test_generator_or_dataset_exactly_one(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"iterations": 2})
        with pytest.raises(ConfigError):
            RunConfig.from_dict(
                config_doc(dataset={"train": "a", "valid": "b", "test": "c"})
            )

    def test_profile_defaults_resolved(self):
        cfg = RunConfig.from_dict(config_doc(profile="trec"))
        assert cfg.resolved_k_c1() == PROFILES["trec"]
        cfg = RunConfig.from_dict(config_doc(k=7, c1=2.0))
        assert cfg.resolved_k_c1() == (7, 2.0)

    def test_out_of_range_values_rejected(self):
        for bad in (
            {"iterations": 0},
            {"k": 0},
            {"c1": -1.0},
            {"sigma": -0.5},
            {"n_p": 0},
            {"clean_size": 0},
            {"variant": "nope"},
            {"profile": "nope"},
            {"vote": "plurality"},
        ):
            with pytest.raises(ConfigError):
                RunConfig.from_dict(config_doc(**bad))

    def test_weighted_vote_requires_prior(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(config_doc(vote="weighted"))
        cfg = RunConfig.from_dict(
            config_doc(vote="weighted", class_prior=[0.5, 0.5])
        )
        assert cfg.vote == "weighted"

    def test_to_dict_resolves_k_c1(self):
        out = RunConfig.from_dict(config_doc()).to_dict()
        assert (out["k"], out["c1"]) == PROFILES["synthetic"]

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("[]", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(bad)


class TestPrepareData:
    def test_clean_subset_size(self):
        cfg = RunConfig.from_dict(config_doc())
        data = prepare_data(cfg, 0)
        assert len(data.clean) == 60
        assert len(data.valid) == 150
        assert data.train.aggregated_labels is not None

    def test_grouping_by_label(self):
        doc = config_doc()
        doc["generator"]["lfs"] = [
            {"emitted_label": 1, "noise_rate": 0.0, "coverage": 0.5},
            {"emitted_label": 1, "noise_rate": 0.0, "coverage": 0.5},
            {"emitted_label": 2, "noise_rate": 0.0, "coverage": 0.5},
        ]
        doc["grouping"] = {"policy": "by_label"}
        data = prepare_data(RunConfig.from_dict(doc), 0)
        assert data.train.num_sources == 2
        assert data.test.weak_labels.shape[1] == 2

    def test_manual_grouping(self):
        doc = config_doc()
        doc["grouping"] = {"policy": "manual", "group_of": [0, 0]}
        data = prepare_data(RunConfig.from_dict(doc), 0)
        assert data.train.num_sources == 1

    def test_deterministic(self):
        cfg = RunConfig.from_dict(config_doc())
        a = prepare_data(cfg, 3)
        b = prepare_data(cfg, 3)
        assert np.array_equal(a.train.weak_labels, b.train.weak_labels)
        assert np.array_equal(a.clean.labels, b.clean.labels)


class TestComputeMetrics:
    def test_perfect_predictions(self):
        report = compute_metrics([1, 2, 1], [1, 2, 1], LabelSpace(2))
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0
        assert report.binary_f1 == 1.0

    def test_all_wrong_binary(self):
        report = compute_metrics([2, 1], [1, 2], LabelSpace(2))
        assert report.accuracy == 0.0

    def test_hand_counted_half(self):
        report = compute_metrics([1, 1, 2, 2], [1, 2, 1, 2], LabelSpace(2))
        assert report.accuracy == 0.5
        assert report.confusion.tolist() == [[1, 1], [1, 1]]

    def test_accuracy_equals_trace_over_total(self):
        rng = np.random.default_rng(0)
        preds = rng.integers(1, 4, 50)
        gold = rng.integers(1, 4, 50)
        report = compute_metrics(preds, gold, LabelSpace(3))
        assert report.accuracy == pytest.approx(
            np.trace(report.confusion) / report.confusion.sum()
        )
        assert report.binary_f1 is None

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        preds = rng.integers(1, 3, 30)
        gold = rng.integers(1, 3, 30)
        perm = rng.permutation(30)
        a = compute_metrics(preds, gold, LabelSpace(2))
        b = compute_metrics(preds[perm], gold[perm], LabelSpace(2))
        assert a.accuracy == b.accuracy
        assert a.macro_f1 == b.macro_f1

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            compute_metrics([1], [1, 2], LabelSpace(2))


class TestDrivers:
    def test_run_training_writes_artifacts(self, tmp_path):
        cfg = RunConfig.from_dict(config_doc())
        report = run_training(cfg, 1, tmp_path)
        for name in (
            "config.resolved.json",
            "metrics.jsonl",
            "report.json",
            "ensemble.json",
        ):
            assert (tmp_path / name).exists()
        assert 0.0 <= report["test"]["accuracy"] <= 1.0
        resolved = json.loads(
            (tmp_path / "config.resolved.json").read_text(encoding="utf-8")
        )
        assert resolved["seed"] == 1

    def test_seed_sweep_summary(self, tmp_path):
        cfg = RunConfig.from_dict(config_doc())
        summary = seed_sweep(cfg, [1, 2], tmp_path)
        assert summary["completed"] == 2
        assert not summary["incomplete"]
        accs = [
            json.loads(
                (tmp_path / f"seed_{s}" / "report.json").read_text(
                    encoding="utf-8"
                )
            )["test"]["accuracy"]
            for s in (1, 2)
        ]
        assert summary["accuracy"]["mean"] == pytest.approx(np.mean(accs))
        assert summary["accuracy"]["std"] == pytest.approx(np.std(accs, ddof=1))

    def test_seed_sweep_needs_two_seeds(self, tmp_path):
        cfg = RunConfig.from_dict(config_doc())
        with pytest.raises(ConfigError):
            seed_sweep(cfg, [1], tmp_path)

    def test_sweep_hand_computed_stats(self):
        # mean of 0.8 and 0.9 is 0.85; sample std is about 0.0707
        assert np.mean([0.8, 0.9]) == pytest.approx(0.85)
        assert np.std([0.8, 0.9], ddof=1) == pytest.approx(0.0707, abs=1e-4)

    def test_majority_vote_baseline_reasonable(self):
        cfg = RunConfig.from_dict(config_doc())
        report = majority_vote_baseline(cfg, 0)
        assert 0.0 <= report["accuracy"] <= 1.0


class TestCli:
    def write_config(self, tmp_path, doc=None):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(doc or config_doc()), encoding="utf-8")
        return path

    def test_train_and_evaluate_roundtrip(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        out = tmp_path / "run_out"
        assert (
            cli_main(
                ["train", "--config", str(config), "--seed", "3", "--out", str(out)]
            )
            == EXIT_OK
        )
        capsys.readouterr()

        # export the generated splits, then score the ensemble on its test set
        data_dir = tmp_path / "data"
        assert (
            cli_main(
                [
                    "generate",
                    "--config",
                    str(config),
                    "--seed",
                    "3",
                    "--out",
                    str(data_dir),
                ]
            )
            == EXIT_OK
        )
        capsys.readouterr()
        assert (
            cli_main(
                [
                    "evaluate",
                    "--ensemble",
                    str(out / "ensemble.json"),
                    "--data",
                    str(data_dir / "test.json"),
                    "--out",
                    str(tmp_path / "eval"),
                ]
            )
            == EXIT_OK
        )
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0
        confusion = np.asarray(result["confusion"])
        assert confusion.sum() == 100
        assert (tmp_path / "eval" / "evaluation.json").exists()

    def test_train_determinism(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        for name in ("a", "b"):
            assert (
                cli_main(
                    [
                        "train",
                        "--config",
                        str(config),
                        "--seed",
                        "5",
                        "--out",
                        str(tmp_path / name),
                    ]
                )
                == EXIT_OK
            )
            capsys.readouterr()
        a = (tmp_path / "a" / "metrics.jsonl").read_bytes()
        b = (tmp_path / "b" / "metrics.jsonl").read_bytes()
        assert a == b

    def test_ablate_variant_required_and_used(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        out = tmp_path / "ablate_out"
        assert (
            cli_main(
                [
                    "ablate",
                    "--config",
                    str(config),
                    "--variant",
                    "no_cond_fn",
                    "--out",
                    str(out),
                ]
            )
            == EXIT_OK
        )
        report = json.loads(capsys.readouterr().out)
        assert report["variant"] == "no_cond_fn"

    def test_prop1_subcommand(self, tmp_path, capsys):
        assert cli_main(["prop1", "--out", str(tmp_path)]) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["min_convex_loss"] >= 0.5
        assert result["gated_loss"] == 0.0
        assert (tmp_path / "prop1.json").exists()

    def test_sweep_subcommand(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert (
            cli_main(
                [
                    "sweep",
                    "--config",
                    str(config),
                    "--seeds",
                    "1,2",
                    "--out",
                    str(tmp_path / "sweep"),
                ]
            )
            == EXIT_OK
        )
        summary = json.loads(capsys.readouterr().out)
        assert summary["completed"] == 2
        assert (tmp_path / "sweep" / "summary.json").exists()

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"iterations": 2, "bogus": 1}), encoding="utf-8")
        assert (
            cli_main(["train", "--config", str(bad), "--out", str(tmp_path / "x")])
            == EXIT_CONFIG
        )
        assert "error" in capsys.readouterr().err

    def test_io_failure_exits_3(self, tmp_path, capsys):
        assert (
            cli_main(
                [
                    "evaluate",
                    "--ensemble",
                    str(tmp_path / "missing.json"),
                    "--data",
                    str(tmp_path / "missing_too.json"),
                ]
            )
            == EXIT_IO
        )
        assert "io error" in capsys.readouterr().err
