"""Experiment runner: training loops, group-aware cross-validation, sweeps,
and artifact emission.

Every run is fully reproducible from (config, seed): dataset generation,
fold assignment, weight init, oversampling, and batch shuffling all derive
their randomness from named seed-sequence branches of the run seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .data import (Dataset, SyntheticConfig, batch_iterator, generate_synthetic,
                   group_kfold, load_csv, oversample_minority)
from .metrics import FoldReport, render_ablation_table, render_comparison_table, write_metrics_csv
from .model import (Mlp, NetworkConfig, SgdOptimizer, _backward_from_cache, _forward_cached,
                    init_model, save_checkpoint, sgd_step)
from .numerics import NonFiniteError, softmax
from .scheduler import AdaptiveScheduler, SchedulerConfig

STRATEGIES = ("cross_entropy", "acl", "acl_fixed_alpha")

# Branch tags for deriving independent random streams from one run seed.
_TAG_DATASET = 101
_TAG_SPLIT = 102


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    ``strategy`` is one of ``cross_entropy`` (plain training), ``acl``
    (adaptive threshold with the certainty-driven multiplier), or
    ``acl_fixed_alpha`` (threshold with the fixed multiplier ``alpha``).
    ``dataset`` is either a SyntheticConfig or a path to a CSV file.
    """

    strategy: str = "acl"
    alpha: float = 1.0
    queue_length: int = 32
    batch_size: int = 16
    epochs: int = 50
    warmup_epochs: int = 3
    initial_lr: float = 1e-3
    lr_power: float = 0.9
    momentum: float = 0.9
    hidden_sizes: tuple[int, ...] = (64, 64, 64)
    folds: int = 5
    seeds: tuple[int, ...] = (0,)
    oversample: bool = True
    dataset: SyntheticConfig | str = field(default_factory=SyntheticConfig)
    output_dir: str | None = None

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        # warmup == epochs is allowed: the threshold never activates, which is
        # exactly the plain cross-entropy baseline
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ConfigError("warmup_epochs must satisfy 0 <= warmup <= epochs")
        if self.strategy != "cross_entropy":
            if self.queue_length < 1 or self.queue_length % self.batch_size != 0:
                raise ConfigError(
                    f"queue_length ({self.queue_length}) must be a positive multiple of "
                    f"batch_size ({self.batch_size})")
        if self.initial_lr <= 0:
            raise ConfigError("initial_lr must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ConfigError("hidden_sizes must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.dataset, SyntheticConfig):
            d["dataset"] = {"synthetic": asdict(self.dataset)}
        else:
            d["dataset"] = {"csv": str(self.dataset)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        ds = d.get("dataset")
        if isinstance(ds, dict):
            if "synthetic" in ds:
                synth = dict(ds["synthetic"])
                if "group_sizes" in synth:
                    synth["group_sizes"] = tuple(synth["group_sizes"])
                d["dataset"] = SyntheticConfig(**synth)
            elif "csv" in ds:
                d["dataset"] = str(ds["csv"])
            else:
                raise ConfigError(f"dataset spec must contain 'synthetic' or 'csv', got {ds}")
        for key in ("hidden_sizes", "seeds"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class TrajectoryRow:
    """One scheduler step: the per-batch threshold/certainty trace."""

    epoch: int
    batch: int
    t_ada: float | None
    theta: float
    hard_queue_len: int
    discard_count: int
    batch_loss: float


@dataclass
class FoldOutcome:
    seed: int
    fold: int
    metrics: dict[str, float] | None
    trajectory: list[TrajectoryRow] = field(default_factory=list, repr=False)
    discard_total: int = 0
    discard_corrupted: int = 0
    failed: bool = False
    failure: str | None = None
    model: Mlp | None = field(default=None, repr=False)


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    outcomes: list[FoldOutcome]
    report: FoldReport
    run_dir: Path | None = None


def _derived_seed(*parts: int) -> int:
    """Fold several integers into one reproducible seed."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _scheduler_for(config: ExperimentConfig) -> AdaptiveScheduler:
    if config.strategy == "cross_entropy":
        # Queues still stream (they never touch the model) but the threshold
        # stays inactive for the whole run: warmup == epochs.
        queue_length = config.queue_length
        if queue_length < 1 or queue_length % config.batch_size != 0:
            queue_length = config.batch_size
        return AdaptiveScheduler(SchedulerConfig(
            queue_length=queue_length,
            batch_size=config.batch_size,
            warmup_epochs=config.epochs,
            alpha_override=None,
        ))
    return AdaptiveScheduler(SchedulerConfig(
        queue_length=config.queue_length,
        batch_size=config.batch_size,
        warmup_epochs=config.warmup_epochs,
        alpha_override=config.alpha if config.strategy == "acl_fixed_alpha" else None,
    ))


def train_one_fold(config: ExperimentConfig, dataset: Dataset,
                   train_idx: np.ndarray, test_idx: np.ndarray,
                   *, run_seed: int, fold: int) -> FoldOutcome:
    """Train on one fold's training subset and evaluate on its held-out subset.

    Warmup epochs run with all-ones masks (queues still updating); afterwards
    each batch is masked against the freshly updated threshold. Raises
    TrainingDiverged on a non-finite loss or gradient.
    """
    init_ss, sample_ss, shuffle_ss = np.random.SeedSequence([run_seed, fold]).spawn(3)
    model = init_model(NetworkConfig(dataset.n_features, tuple(config.hidden_sizes)), init_ss)
    opt = SgdOptimizer(initial_lr=config.initial_lr, momentum=config.momentum,
                       power=config.lr_power, total_epochs=config.epochs)
    scheduler = _scheduler_for(config)

    if config.oversample:
        train_indices = oversample_minority(train_idx, dataset.labels,
                                            np.random.default_rng(sample_ss))
    else:
        train_indices = np.asarray(train_idx)
    shuffle_rng = np.random.default_rng(shuffle_ss)

    trajectory: list[TrajectoryRow] = []
    discard_total = 0
    discard_corrupted = 0
    for epoch in range(config.epochs):
        opt.current_epoch = epoch
        scheduler.begin_epoch(epoch)
        for b, batch_idx in enumerate(batch_iterator(train_indices, config.batch_size,
                                                     shuffle_rng)):
            x = dataset.features[batch_idx]
            y = dataset.labels[batch_idx]
            try:
                logits, cached = _forward_cached(model, x)
                probs = softmax(logits, axis=-1)
                mask, diag = scheduler.step(probs, y)
                grads, loss = _backward_from_cache(model, logits, cached, y, mask)
                if not math.isfinite(loss):
                    raise TrainingDiverged(epoch, b)
                sgd_step(model, opt, grads)
            except NonFiniteError as exc:
                raise TrainingDiverged(epoch, b) from exc

            discard_total += diag.discard_count
            if diag.discard_count and dataset.corrupted is not None:
                dropped = batch_idx[mask == 0.0]
                discard_corrupted += int(dataset.corrupted[dropped].sum())
            trajectory.append(TrajectoryRow(
                epoch=epoch, batch=b, t_ada=diag.t_ada, theta=diag.theta,
                hard_queue_len=diag.hard_queue_len, discard_count=diag.discard_count,
                batch_loss=loss,
            ))

    scores = softmax(forward_logits(model, dataset.features[test_idx]), axis=-1)[:, 1]
    fold_metrics = metrics_mod.evaluate(scores, dataset.labels[test_idx])
    return FoldOutcome(
        seed=run_seed, fold=fold, metrics=fold_metrics, trajectory=trajectory,
        discard_total=discard_total, discard_corrupted=discard_corrupted, model=model,
    )


def forward_logits(model: Mlp, features) -> np.ndarray:
    logits, _ = _forward_cached(model, features)
    return logits


def _resolve_dataset(config: ExperimentConfig, run_seed: int,
                     csv_cache: dict) -> Dataset:
    if isinstance(config.dataset, SyntheticConfig):
        seed = _derived_seed(config.dataset.seed, run_seed, _TAG_DATASET)
        return generate_synthetic(replace(config.dataset, seed=seed))
    path = str(config.dataset)
    if path not in csv_cache:
        csv_cache[path] = load_csv(path)
    return csv_cache[path]


def run_cross_validation(config: ExperimentConfig) -> RunArtifacts:
    """All seeds x all folds; aggregates mean±std per metric across folds.

    A diverged fold is recorded as failed and skipped in the aggregate, and
    the report is flagged incomplete.
    """
    config.validate()
    csv_cache: dict = {}
    outcomes: list[FoldOutcome] = []
    for run_seed in config.seeds:
        dataset = _resolve_dataset(config, run_seed, csv_cache)
        plan = group_kfold(dataset, config.folds, _derived_seed(run_seed, _TAG_SPLIT))
        for fold in range(config.folds):
            try:
                outcome = train_one_fold(config, dataset,
                                         plan.train_indices(fold), plan.test_indices(fold),
                                         run_seed=run_seed, fold=fold)
            except TrainingDiverged as exc:
                outcome = FoldOutcome(seed=run_seed, fold=fold, metrics=None,
                                      failed=True, failure=str(exc))
            outcomes.append(outcome)

    rows = [{"seed": o.seed, "fold": o.fold, **o.metrics} for o in outcomes if not o.failed]
    report = FoldReport(rows=rows, incomplete=any(o.failed for o in outcomes))
    artifacts = RunArtifacts(config=config, outcomes=outcomes, report=report)
    if config.output_dir is not None:
        write_artifacts(artifacts, Path(config.output_dir))
    return artifacts


def write_trajectory_csv(rows: list[TrajectoryRow], path) -> None:
    """Per-batch trace; the t_ada column is empty while the threshold is inactive."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "batch", "t_ada", "theta", "hard_queue_len",
                         "discard_count", "batch_loss"])
        for r in rows:
            writer.writerow([
                r.epoch, r.batch,
                "" if r.t_ada is None else f"{r.t_ada:.17g}",
                f"{r.theta:.17g}", r.hard_queue_len, r.discard_count,
                f"{r.batch_loss:.17g}",
            ])


def read_trajectory_csv(path) -> list[TrajectoryRow]:
    rows = []
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            rows.append(TrajectoryRow(
                epoch=int(record["epoch"]), batch=int(record["batch"]),
                t_ada=float(record["t_ada"]) if record["t_ada"] else None,
                theta=float(record["theta"]),
                hard_queue_len=int(record["hard_queue_len"]),
                discard_count=int(record["discard_count"]),
                batch_loss=float(record["batch_loss"]),
            ))
    return rows


def write_artifacts(artifacts: RunArtifacts, run_dir: Path) -> None:
    """Resolved config, per-fold trajectories and checkpoints, metrics CSV,
    and the rendered comparison table."""
    run_dir.mkdir(parents=True, exist_ok=True)
    artifacts.run_dir = run_dir
    (run_dir / "config.json").write_text(json.dumps(artifacts.config.to_dict(), indent=2) + "\n")
    for o in artifacts.outcomes:
        if o.trajectory:
            write_trajectory_csv(o.trajectory, run_dir / f"trajectory_s{o.seed}_f{o.fold}.csv")
        if o.model is not None:
            save_checkpoint(o.model, run_dir / f"checkpoint_s{o.seed}_f{o.fold}.txt")
    if artifacts.report.rows:
        write_metrics_csv(artifacts.report, run_dir / "metrics.csv")
        table = render_comparison_table([(artifacts.config.strategy, artifacts.report)])
        if artifacts.report.incomplete:
            table += "\n(incomplete: one or more folds failed)"
        (run_dir / "report.txt").write_text(table + "\n")


@dataclass
class AblationResult:
    axis: str
    entries: list[tuple[str, RunArtifacts]]

    def table(self) -> str:
        cells = []
        for label, artifacts in self.entries:
            if artifacts.report.rows:
                cells.append((label, artifacts.report.aggregate("auc")))
            else:
                cells.append((label, (float("nan"), float("nan"))))
        axis_label = {"queue_length": "Queue length", "alpha": "Multiplier"}[self.axis]
        return render_ablation_table(axis_label, cells)


def _config_for_setting(base: ExperimentConfig, axis: str, value) -> tuple[str, ExperimentConfig]:
    if axis == "queue_length":
        length = int(value)
        if length == 0:
            return "0 (baseline)", replace(base, strategy="cross_entropy")
        return str(length), replace(base, strategy="acl", queue_length=length)
    if axis == "alpha":
        if value == "theta":
            return "theta", replace(base, strategy="acl")
        return str(value), replace(base, strategy="acl_fixed_alpha", alpha=float(value))
    raise ConfigError(f"unknown ablation axis {axis!r}; expected 'queue_length' or 'alpha'")


DEFAULT_ABLATION_VALUES = {
    "queue_length": (0, 16, 32, 64),
    "alpha": (0.0, 1.0, 2.0, "theta"),
}


def run_ablation(base: ExperimentConfig, axis: str, values=None) -> AblationResult:
    """One cross-validation per setting along the requested axis.

    ``queue_length`` value 0 means the plain cross-entropy baseline; the
    ``alpha`` axis accepts numbers plus the string ``theta`` for the
    certainty-driven mode.
    """
    if values is None:
        values = DEFAULT_ABLATION_VALUES.get(axis)
        if values is None:
            raise ConfigError(f"unknown ablation axis {axis!r}")
    base_dir = Path(base.output_dir) if base.output_dir is not None else None
    entries = []
    for value in values:
        label, cfg = _config_for_setting(base, axis, value)
        if base_dir is not None:
            sub = f"{axis}_{label.split()[0]}"
            cfg = replace(cfg, output_dir=str(base_dir / sub))
        entries.append((label, run_cross_validation(cfg)))
    result = AblationResult(axis=axis, entries=entries)
    if base_dir is not None:
        base_dir.mkdir(parents=True, exist_ok=True)
        (base_dir / "ablation_table.txt").write_text(result.table() + "\n")
    return result


def standard_benchmark_config(strategy: str = "acl", *,
                              seeds: tuple[int, ...] = tuple(range(10)),
                              output_dir: str | None = None) -> ExperimentConfig:
    """The default synthetic benchmark: ~2000 2-D samples, 20% flipped labels,
    ~2:1 imbalance, 5-fold cross-validation."""
    return ExperimentConfig(strategy=strategy, seeds=tuple(seeds),
                            dataset=SyntheticConfig(), output_dir=output_dir)
