"""CLI entry point, run configuration, dataset IO and experiment drivers."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .boost import (
    BoostConfig,
    BoostResult,
    UniformGate,
    VARIANTS,
    ensemble_from_dict,
    ensemble_predict_batch,
    ensemble_to_dict,
    prop1_counterexample,
    run_ablation,
    run_localboost,
)
from .boost import LearnedGate
from .condfn import CondFnHyper, build_source_index, train_cond_fn
from .datamodel import (
    CleanSet,
    LabelSpace,
    ValidationError,
    WeakLabeledSet,
    build_match_matrix,
    load_clean_set,
    load_weak_set,
    majority_vote,
    save_dataset,
    weighted_vote,
)
from .learner import LearnerHyper, predict_labels_batch, train_base
from .metrics import MetricsReport, compute_metrics
from .weaksource import (
    GeneratorConfig,
    LFSpec,
    SourceGrouping,
    generate_synthetic,
    group_lfs_by_label,
    group_weak_matrix,
)


class ConfigError(ValueError):
    """Raised for malformed or out-of-range run configuration."""


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

# Per-dataset (k, c1) defaults for WRENCH-style exports plus the synthetic
# desk-scale profile.
PROFILES = {
    "imdb": (10, 4.0),
    "yelp": (10, 4.0),
    "youtube": (5, 8.0),
    "agnews": (10, 4.0),
    "trec": (5, 10.0),
    "cdr": (5, 10.0),
    "semeval": (5, 10.0),
    "synthetic": (5, 4.0),
}


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

def _take(doc: dict, context: str, allowed: set) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


@dataclass
class GroupingPolicy:
    policy: str = "none"  # none | by_label | manual
    group_of: Optional[list[int]] = None
    column_policy: str = "majority"  # majority | first-match

    @classmethod
    def from_dict(cls, doc):
        _take(doc, "grouping", {"policy", "group_of", "column_policy"})
        out = cls(**doc)
        if out.policy not in ("none", "by_label", "manual"):
            raise ConfigError(f"unknown grouping policy {out.policy!r}")
        if out.policy == "manual" and not out.group_of:
            raise ConfigError("manual grouping needs a group_of vector")
        return out


@dataclass
class RunConfig:
    generator: Optional[GeneratorConfig] = None
    dataset: Optional[dict] = None  # {"train": path, "valid": path, "test": path}
    iterations: int = 5
    k: Optional[int] = None  # None -> profile default
    c1: Optional[float] = None
    n_p: int = 16
    mu: float = 0.0
    sigma: Optional[float] = None
    n_min: int = 32
    exact_pair_threshold: int = 2000
    clean_size: int = 500
    vote: str = "majority"
    class_prior: Optional[list[float]] = None
    grouping: GroupingPolicy = field(default_factory=GroupingPolicy)
    gate: CondFnHyper = field(default_factory=CondFnHyper)
    learner: LearnerHyper = field(default_factory=LearnerHyper)
    variant: str = "full"
    profile: str = "synthetic"
    hard_error_increment: bool = False
    classic_update: bool = False

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        _take(doc, "run config", allowed)
        doc = dict(doc)

        if "generator" in doc and doc["generator"] is not None:
            gen = dict(doc["generator"])
            _take(
                gen,
                "generator",
                {
                    "num_classes", "feature_dim", "num_clusters", "n_weak",
                    "n_clean", "n_test", "lfs", "cluster_spread", "center_scale",
                },
            )
            lfs = tuple(LFSpec(**spec) for spec in gen.pop("lfs"))
            try:
                doc["generator"] = GeneratorConfig(lf_specs=lfs, **gen)
            except (TypeError, ValidationError) as exc:
                raise ConfigError(f"bad generator settings: {exc}") from exc
        if "grouping" in doc and doc["grouping"] is not None:
            doc["grouping"] = GroupingPolicy.from_dict(doc["grouping"])
        if "gate" in doc and doc["gate"] is not None:
            gate = dict(doc["gate"])
            _take(gate, "gate", {"hidden", "epochs", "batch_size",
                                 "learning_rate", "activation"})
            if "hidden" in gate:
                gate["hidden"] = tuple(gate["hidden"])
            doc["gate"] = CondFnHyper(**gate)
        if "learner" in doc and doc["learner"] is not None:
            learner = dict(doc["learner"])
            _take(learner, "learner", {"hidden", "epochs", "batch_size",
                                       "learning_rate", "activation"})
            doc["learner"] = LearnerHyper(**learner)

        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self):
        if (self.generator is None) == (self.dataset is None):
            raise ConfigError("exactly one of generator/dataset must be given")
        if self.dataset is not None:
            _take(self.dataset, "dataset", {"train", "valid", "test"})
            missing = {"train", "valid", "test"} - set(self.dataset)
            if missing:
                raise ConfigError(f"dataset paths missing: {sorted(missing)}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.c1 is not None and self.c1 <= 0:
            raise ConfigError("c1 must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.n_p < 1:
            raise ConfigError("n_p must be >= 1")
        if self.clean_size < 1:
            raise ConfigError("clean_size must be >= 1")
        if self.vote not in ("majority", "weighted"):
            raise ConfigError(f"unknown vote strategy {self.vote!r}")
        if self.vote == "weighted" and self.class_prior is None:
            raise ConfigError("weighted vote needs a class_prior")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")

    def resolved_k_c1(self):
        k_default, c1_default = PROFILES[self.profile]
        return (
            self.k if self.k is not None else k_default,
            self.c1 if self.c1 is not None else c1_default,
        )

    def boost_config(self) -> BoostConfig:
        k, c1 = self.resolved_k_c1()
        return BoostConfig(
            iterations=self.iterations,
            k=k,
            c1=c1,
            n_p=self.n_p,
            mu=self.mu,
            sigma=self.sigma,
            n_min=self.n_min,
            exact_pair_threshold=self.exact_pair_threshold,
            hard_error_increment=self.hard_error_increment,
            classic_update=self.classic_update,
            learner=self.learner,
        )

    def to_dict(self) -> dict:
        def convert(obj):
            if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
                return {
                    f.name: convert(getattr(obj, f.name))
                    for f in dataclasses.fields(obj)
                }
            if isinstance(obj, (tuple, list)):
                return [convert(v) for v in obj]
            if isinstance(obj, dict):
                return {k: convert(v) for k, v in obj.items()}
            if isinstance(obj, (np.integer, np.floating)):
                return obj.item()
            return obj

        out = convert(self)
        k, c1 = self.resolved_k_c1()
        out["k"], out["c1"] = k, c1
        return out


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return RunConfig.from_dict(doc)


# ---------------------------------------------------------------------------
# Data preparation
# ---------------------------------------------------------------------------

@dataclass
class PreparedData:
    train: WeakLabeledSet  # grouped + aggregated
    clean: CleanSet  # |D_c| subset of the validation split
    valid: CleanSet
    test: CleanSet
    grouping: Optional[SourceGrouping]


def _derive_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def prepare_data(cfg: RunConfig, seed: int) -> PreparedData:
    if cfg.generator is not None:
        train, valid, test = generate_synthetic(
            cfg.generator, _derive_seed(seed, 0)
        )
    else:
        train = load_weak_set(cfg.dataset["train"])
        valid = load_clean_set(cfg.dataset["valid"])
        test = load_clean_set(cfg.dataset["test"])

    grouping = None
    if cfg.grouping.policy != "none":
        if cfg.grouping.policy == "by_label":
            grouping = group_lfs_by_label(train)
        else:
            group_of = np.asarray(cfg.grouping.group_of, dtype=np.int64)
            grouping = SourceGrouping(group_of, int(group_of.max()) + 1)
        c = train.label_space.num_classes
        train = WeakLabeledSet(
            train.label_space,
            train.instances,
            group_weak_matrix(train.weak_labels, grouping, c,
                              cfg.grouping.column_policy),
        )
        valid = _regroup_clean(valid, grouping, c, cfg.grouping.column_policy)
        test = _regroup_clean(test, grouping, c, cfg.grouping.column_policy)

    if cfg.vote == "majority":
        agg = majority_vote(train)
    else:
        agg = weighted_vote(train, np.asarray(cfg.class_prior))
    train = train.with_aggregated(agg)

    # D_c is a seeded-shuffle subset of the validation split
    rng = np.random.default_rng(_derive_seed(seed, 1))
    order = rng.permutation(len(valid))
    take = order[: min(cfg.clean_size, len(valid))]
    clean = CleanSet(
        valid.label_space,
        [valid.instances[i] for i in take],
        weak_labels=None if valid.weak_labels is None else valid.weak_labels[take],
    )
    return PreparedData(train, clean, valid, test, grouping)


def _regroup_clean(split: CleanSet, grouping, num_classes, policy) -> CleanSet:
    if split.weak_labels is None:
        return split
    return CleanSet(
        split.label_space,
        split.instances,
        weak_labels=group_weak_matrix(
            split.weak_labels, grouping, num_classes, policy
        ),
    )


def build_gate(cfg: RunConfig, data: PreparedData, seed: int):
    """Train the conditional source gate on the training split's match rows.
    Gate-replacing ablations get a placeholder uniform gate."""
    if cfg.variant in ("no_cond_fn", "hard_matching"):
        return UniformGate(data.train.num_sources)
    ds = build_source_index(build_match_matrix(data.train), data.train.features)
    cond = train_cond_fn(ds, cfg.gate, _derive_seed(seed, 2))
    return LearnedGate(cond)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def evaluate_ensemble(ensemble, split: CleanSet) -> MetricsReport:
    preds = ensemble_predict_batch(ensemble, split.features, split.weak_labels)
    return compute_metrics(preds, split.labels, split.label_space)


def run_training(cfg: RunConfig, seed: int, out_dir: Path) -> dict:
    """Train, evaluate on the test split and write all run artifacts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data = prepare_data(cfg, seed)
    gate = build_gate(cfg, data, seed)
    bconfig = cfg.boost_config()
    run_seed = _derive_seed(seed, 3)
    if cfg.variant == "full":
        result = run_localboost(data.train, data.clean, gate, bconfig, run_seed)
    else:
        result = run_ablation(
            cfg.variant, data.train, data.clean, gate, bconfig, run_seed
        )

    test_report = evaluate_ensemble(result.ensemble, data.test)
    clean_report = evaluate_ensemble(result.ensemble, data.clean)
    report = {
        "seed": seed,
        "variant": cfg.variant,
        "converged": result.converged,
        "num_members": len(result.ensemble.members),
        "test": test_report.to_dict(),
        "clean": clean_report.to_dict(),
    }

    resolved = cfg.to_dict()
    resolved["seed"] = seed
    _dump_json(out_dir / "config.resolved.json", resolved)
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in result.rounds]
    (out_dir / "metrics.jsonl").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    _dump_json(out_dir / "report.json", report)
    _dump_json(out_dir / "ensemble.json", ensemble_to_dict(result.ensemble))
    return report


def run_generate(cfg: RunConfig, seed: int, out_dir: Path) -> dict:
    if cfg.generator is None:
        raise ConfigError("generate requires generator settings in the config")
    out_dir.mkdir(parents=True, exist_ok=True)
    train, valid, test = generate_synthetic(cfg.generator, seed)
    space = train.label_space
    save_dataset(out_dir / "train.json", space, train.instances, train.weak_labels)
    save_dataset(out_dir / "valid.json", space, valid.instances, valid.weak_labels)
    save_dataset(out_dir / "test.json", space, test.instances, test.weak_labels)
    return {"out": str(out_dir), "splits": ["train.json", "valid.json", "test.json"]}


def seed_sweep(cfg: RunConfig, seeds: list[int], out_dir: Path) -> dict:
    """Run train+evaluate per seed; report mean and sample std per metric."""
    if len(seeds) < 2:
        raise ConfigError("a sweep needs at least two seeds")
    out_dir.mkdir(parents=True, exist_ok=True)
    accs, f1s, failures = [], [], []
    for seed in seeds:
        try:
            report = run_training(cfg, seed, out_dir / f"seed_{seed}")
            accs.append(report["test"]["accuracy"])
            f1s.append(report["test"]["macro_f1"])
        except Exception as exc:  # noqa: BLE001 - record and continue
            warnings.warn(f"seed {seed} failed: {exc}")
            failures.append({"seed": seed, "error": str(exc)})

    def stats(values):
        if not values:
            return {"mean": None, "std": None}
        return {
            "mean": float(np.mean(values)),
            "std": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
        }

    summary = {
        "seeds": seeds,
        "completed": len(accs),
        "incomplete": bool(failures),
        "failures": failures,
        "accuracy": stats(accs),
        "macro_f1": stats(f1s),
    }
    _dump_json(out_dir / "summary.json", summary)
    return summary


def majority_vote_baseline(cfg: RunConfig, seed: int) -> dict:
    """Single learner trained on aggregated-vote labels (voting baseline)."""
    data = prepare_data(cfg, seed)
    agg = data.train.aggregated_labels
    keep = agg > 0
    learner = train_base(
        (data.train.features[keep], agg[keep]),
        cfg.learner,
        _derive_seed(seed, 4),
        num_classes=data.train.label_space.num_classes,
    )
    preds = predict_labels_batch(learner, data.test.features)
    report = compute_metrics(preds, data.test.labels, data.test.label_space)
    return report.to_dict()


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsboost",
        description="Weakly-supervised boosting with localized base learners",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="runs/out", help="output directory")

    p = sub.add_parser("generate", help="write synthetic dataset splits")
    common(p)

    p = sub.add_parser("train", help="run the boosting framework")
    common(p)
    p.add_argument("--variant", choices=VARIANTS, help="override config variant")
    p.add_argument("--profile", choices=sorted(PROFILES), help="override profile")

    p = sub.add_parser("ablate", help="run an ablation variant")
    common(p)
    p.add_argument("--variant", choices=VARIANTS, required=True)

    p = sub.add_parser("evaluate", help="score a serialized ensemble on a split")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("prop1", help="convex-combination failure report")
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="seed sweep with mean/std summary")
    common(p)
    p.add_argument(
        "--seeds", required=True, help="comma-separated seed list, e.g. 1,2,3"
    )
    return parser


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg = load_config(args.config)
            result = run_generate(cfg, args.seed, Path(args.out))
        elif args.command in ("train", "ablate"):
            cfg = load_config(args.config)
            if getattr(args, "variant", None):
                cfg.variant = args.variant
            if getattr(args, "profile", None):
                cfg.profile = args.profile
            cfg.validate()
            result = run_training(cfg, args.seed, Path(args.out))
        elif args.command == "evaluate":
            doc = json.loads(Path(args.ensemble).read_text(encoding="utf-8"))
            ensemble = ensemble_from_dict(doc)
            split = load_clean_set(args.data)
            result = evaluate_ensemble(ensemble, split).to_dict()
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                _dump_json(out / "evaluation.json", result)
        elif args.command == "prop1":
            result = prop1_counterexample()
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                _dump_json(out / "prop1.json", result)
        elif args.command == "sweep":
            cfg = load_config(args.config)
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
            result = seed_sweep(cfg, seeds, Path(args.out))
        else:  # pragma: no cover - argparse enforces the choices
            return EXIT_CONFIG
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK


def main() -> None:  # console-script entry point
    sys.exit(cli_main())
