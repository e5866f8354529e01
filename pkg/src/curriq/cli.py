"""Command-line entry point.

Subcommands: ``generate`` (synthetic dataset to CSV), ``train`` (single fold),
``cv`` (cross-validation), ``ablate`` (sweeps), ``report`` (re-render a run
directory). Exit codes: 0 success, 1 usage/config error, 2 run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .data import SyntheticConfig, generate_synthetic, group_kfold, save_csv
from .harness import (ConfigError, ExperimentConfig, RunArtifacts, TrainingDiverged,
                      _derived_seed, _resolve_dataset, _TAG_SPLIT, run_ablation,
                      run_cross_validation, train_one_fold, write_artifacts)
from .metrics import FoldReport, read_metrics_csv, render_comparison_table


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--csv", type=str, default=None, help="train on an existing CSV dataset")
    p.add_argument("--n-per-class", type=int, default=None, help="majority-class sample count")
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--separation", type=float, default=None, help="distance between cluster means")
    p.add_argument("--noise-rate", type=float, default=None, help="fraction of labels flipped")
    p.add_argument("--imbalance", type=float, default=None, help="majority:minority ratio")
    p.add_argument("--flip-mode", choices=["uniform", "boundary"], default=None)
    p.add_argument("--data-seed", type=int, default=None)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="JSON config file; flags override it")
    p.add_argument("--strategy", choices=["cross_entropy", "acl", "acl_fixed_alpha"], default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--queue-length", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--warmup-epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-power", type=float, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--hidden", type=str, default=None, help="comma-separated hidden layer widths")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--seeds", type=str, default=None, help="comma-separated run seeds")
    p.add_argument("--no-oversample", action="store_true")
    p.add_argument("--out", type=str, default=None, help="artifact output directory")
    _add_dataset_args(p)


def _synthetic_from_args(args, base: SyntheticConfig | None = None) -> SyntheticConfig:
    cfg = base if isinstance(base, SyntheticConfig) else SyntheticConfig()
    updates = {}
    for flag, name in (("n_per_class", "n_per_class"), ("feature_dim", "feature_dim"),
                       ("separation", "separation"), ("noise_rate", "noise_rate"),
                       ("imbalance", "imbalance_ratio"), ("flip_mode", "flip_mode"),
                       ("data_seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    return replace(cfg, **updates)


def _config_from_args(args) -> ExperimentConfig:
    if args.config is not None:
        raw = json.loads(Path(args.config).read_text())
        base = ExperimentConfig.from_dict(raw)
    else:
        base = ExperimentConfig()

    updates = {}
    for flag, name in (("strategy", "strategy"), ("alpha", "alpha"),
                       ("queue_length", "queue_length"), ("batch_size", "batch_size"),
                       ("epochs", "epochs"), ("warmup_epochs", "warmup_epochs"),
                       ("lr", "initial_lr"), ("lr_power", "lr_power"),
                       ("momentum", "momentum"), ("folds", "folds"), ("out", "output_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if args.hidden is not None:
        updates["hidden_sizes"] = tuple(int(h) for h in args.hidden.split(","))
    if args.seeds is not None:
        updates["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.no_oversample:
        updates["oversample"] = False
    if args.csv is not None:
        updates["dataset"] = args.csv
    else:
        updates["dataset"] = _synthetic_from_args(
            args, base.dataset if isinstance(base.dataset, SyntheticConfig) else None)

    cfg = replace(base, **updates)
    cfg.validate()
    return cfg


def cmd_generate(args) -> int:
    cfg = _synthetic_from_args(args)
    dataset = generate_synthetic(cfg)
    save_csv(dataset, args.out)
    print(f"wrote {len(dataset)} samples ({int((dataset.labels == 1).sum())} positive) "
          f"to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    run_seed = config.seeds[0]
    csv_cache: dict = {}
    dataset = _resolve_dataset(config, run_seed, csv_cache)
    plan = group_kfold(dataset, config.folds, _derived_seed(run_seed, _TAG_SPLIT))
    outcome = train_one_fold(config, dataset,
                             plan.train_indices(args.fold), plan.test_indices(args.fold),
                             run_seed=run_seed, fold=args.fold)
    row = {"seed": outcome.seed, "fold": outcome.fold, **outcome.metrics}
    artifacts = RunArtifacts(config=config, outcomes=[outcome], report=FoldReport(rows=[row]))
    if config.output_dir is not None:
        write_artifacts(artifacts, Path(config.output_dir))
    print("  ".join(f"{k}={v:.4f}" for k, v in outcome.metrics.items()))
    return 0


def cmd_cv(args) -> int:
    config = _config_from_args(args)
    artifacts = run_cross_validation(config)
    print(render_comparison_table([(config.strategy, artifacts.report)]))
    if artifacts.report.incomplete:
        print("warning: one or more folds failed; report is incomplete", file=sys.stderr)
        return 2
    return 0


def cmd_ablate(args) -> int:
    config = _config_from_args(args)
    values = None
    if args.values is not None:
        values = [v if v == "theta" else (int(v) if args.axis == "queue_length" else float(v))
                  for v in args.values.split(",")]
    result = run_ablation(config, args.axis, values)
    print(result.table())
    if any(a.report.incomplete for _, a in result.entries):
        print("warning: some folds failed", file=sys.stderr)
        return 2
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    metrics_path = run_dir / "metrics.csv"
    if not metrics_path.exists():
        raise FileNotFoundError(f"{metrics_path} not found")
    report = read_metrics_csv(metrics_path)
    strategy = "run"
    config_path = run_dir / "config.json"
    if config_path.exists():
        strategy = json.loads(config_path.read_text()).get("strategy", strategy)
    table = render_comparison_table([(strategy, report)])
    (run_dir / "report.txt").write_text(table + "\n")
    print(table)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="curriq",
                     description="adaptive curriculum training engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[], help="write a synthetic dataset to CSV")
    _add_dataset_args(p)
    p.add_argument("--out", type=str, required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train and evaluate a single fold")
    _add_train_args(p)
    p.add_argument("--fold", type=int, default=0, help="held-out fold index")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="full cross-validation over all seeds and folds")
    _add_train_args(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ablate", help="sweep queue_length or alpha settings")
    _add_train_args(p)
    p.add_argument("--axis", choices=["queue_length", "alpha"], required=True)
    p.add_argument("--values", type=str, default=None,
                   help="comma-separated settings (queue_length 0 = baseline; alpha accepts 'theta')")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="re-render the table for an existing run directory")
    p.add_argument("--run-dir", type=str, required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"curriq: config error: {exc}", file=sys.stderr)
        return 1
    except (TrainingDiverged, OSError, ValueError) as exc:
        print(f"curriq: run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
