"""Synthetic inconsistent-label data, CSV ingestion, group-aware k-fold
splitting, minority oversampling, and batch iteration.

Synthetic datasets are two Gaussian clusters with a configurable fraction of
observed labels flipped; each sample carries a group id (patient analog) so
splits can keep whole groups on one side of a fold boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator parameters. Defaults give the standard benchmark: ~2000
    two-dimensional samples at ~1.96:1 class imbalance with 20% flipped labels.
    """

    n_per_class: int = 1333          # majority class; minority = round(n / imbalance_ratio)
    feature_dim: int = 2
    separation: float = 2.0          # distance between the two cluster means
    noise_rate: float = 0.2          # fraction of observed labels flipped, per class
    imbalance_ratio: float = 1.96
    flip_mode: str = "uniform"       # "uniform" or "boundary" (flips weighted toward the class boundary)
    group_sizes: tuple[int, ...] = (1, 2, 3)
    seed: int = 0


@dataclass
class Dataset:
    """Feature rows with observed labels and group ids.

    ``clean_labels``/``corrupted`` are only present for synthetic data and are
    hidden from training; ``corrupted[i]`` is True iff the observed label was
    flipped away from the clean one.
    """

    features: np.ndarray
    labels: np.ndarray
    group_ids: np.ndarray
    clean_labels: np.ndarray | None = None
    corrupted: np.ndarray | None = None

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def _assign_groups(n: int, sizes: tuple[int, ...], start: int, rng: np.random.Generator):
    """Chunk n consecutive samples into groups of random size from `sizes`."""
    ids = np.empty(n, dtype=np.int64)
    next_id = start
    pos = 0
    while pos < n:
        size = min(int(rng.choice(sizes)), n - pos)
        ids[pos:pos + size] = next_id
        next_id += 1
        pos += size
    return ids, next_id


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Two Gaussian clusters with flipped observed labels.

    Class 0 (majority) is centred at -separation/2 along the first axis and
    class 1 at +separation/2, both with unit isotropic covariance. Exactly
    round(noise_rate * n_class) samples per class get their observed label
    flipped and corrupted=True. Deterministic under config.seed.
    """
    if not 0.0 <= config.noise_rate < 0.5:
        raise ValueError(f"noise_rate must lie in [0, 0.5), got {config.noise_rate}")
    if config.separation <= 0:
        raise ValueError(f"separation must be positive, got {config.separation}")
    if config.n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {config.n_per_class}")
    if config.imbalance_ratio <= 0:
        raise ValueError(f"imbalance_ratio must be positive, got {config.imbalance_ratio}")
    if config.flip_mode not in ("uniform", "boundary"):
        raise ValueError(f"unknown flip_mode {config.flip_mode!r}")

    rng = np.random.default_rng(config.seed)
    counts = (config.n_per_class,
              max(1, int(round(config.n_per_class / config.imbalance_ratio))))

    features, clean, labels, groups = [], [], [], []
    next_group = 0
    for cls, n in enumerate(counts):
        mean = np.zeros(config.feature_dim)
        mean[0] = (config.separation / 2.0) * (1 if cls == 1 else -1)
        x = rng.normal(loc=mean, scale=1.0, size=(n, config.feature_dim))
        y = np.full(n, cls, dtype=np.int64)
        observed = y.copy()

        n_flips = int(round(config.noise_rate * n))
        if n_flips:
            if config.flip_mode == "boundary":
                # Weight flips toward the class boundary (the hyperplane x0 = 0).
                w = np.exp(-np.abs(x[:, 0]))
                flip_idx = rng.choice(n, size=n_flips, replace=False, p=w / w.sum())
            else:
                flip_idx = rng.choice(n, size=n_flips, replace=False)
            observed[flip_idx] = 1 - cls

        gid, next_group = _assign_groups(n, config.group_sizes, next_group, rng)
        features.append(x)
        clean.append(y)
        labels.append(observed)
        groups.append(gid)

    features = np.concatenate(features)
    clean = np.concatenate(clean)
    labels = np.concatenate(labels)
    groups = np.concatenate(groups)

    perm = rng.permutation(features.shape[0])
    return Dataset(
        features=features[perm],
        labels=labels[perm],
        group_ids=groups[perm],
        clean_labels=clean[perm],
        corrupted=labels[perm] != clean[perm],
    )


def _csv_header(n_features: int) -> list[str]:
    return ["group_id", "label"] + [f"f{i}" for i in range(n_features)]


def save_csv(dataset: Dataset, path) -> None:
    """Write the ``group_id,label,f0..fD`` layout. Hidden synthetic columns
    (clean labels, corruption flags) are not part of the format and are dropped.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header(dataset.n_features))
        for gid, label, row in zip(dataset.group_ids, dataset.labels, dataset.features):
            writer.writerow([gid, int(label)] + [f"{v:.17g}" for v in row])


def _parse_group_id(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def load_csv(path) -> Dataset:
    """Parse a ``group_id,label,f0..fD`` file; real-data mode (no truth columns)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        n_features = len(header) - 2
        if n_features < 1 or header != _csv_header(n_features):
            raise ValueError(f"{path}: header must be group_id,label,f0..fD, got {header}")

        groups, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            if row[1] not in ("0", "1"):
                raise ValueError(f"{path}: line {lineno}: label must be 0 or 1, got {row[1]!r}")
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: bad feature value ({exc})") from None
            groups.append(_parse_group_id(row[0]))
            labels.append(int(row[1]))

    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        group_ids=np.array(groups),
    )


@dataclass(frozen=True)
class SplitPlan:
    """Fold assignment per sample; every group lands in exactly one fold."""

    n_folds: int
    fold_of: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def group_kfold(dataset: Dataset, n_folds: int, seed) -> SplitPlan:
    """Group-aware k-fold split with greedy size balancing.

    Groups are shuffled (seeded), stably sorted largest-first, and each is
    assigned to the currently smallest fold, so the fold-size spread never
    exceeds the largest group.
    """
    if n_folds < 2:
        raise ValueError(f"n_folds must be >= 2, got {n_folds}")
    # unique in order of first appearance, so shuffling is the only seed-dependent step
    _, first_pos = np.unique(dataset.group_ids, return_index=True)
    group_order = dataset.group_ids[np.sort(first_pos)]
    if len(group_order) < n_folds:
        raise ValueError(f"need at least {n_folds} distinct groups, got {len(group_order)}")

    rng = np.random.default_rng(seed)
    shuffled = group_order[rng.permutation(len(group_order))]
    sizes = {gid: 0 for gid in shuffled.tolist()}
    for gid in dataset.group_ids.tolist():
        sizes[gid] += 1
    ordered = sorted(shuffled.tolist(), key=lambda g: -sizes[g])  # stable: ties keep shuffled order

    fold_loads = [0] * n_folds
    fold_of_group: dict = {}
    for gid in ordered:
        fold = min(range(n_folds), key=lambda f: fold_loads[f])
        fold_of_group[gid] = fold
        fold_loads[fold] += sizes[gid]

    fold_of = np.array([fold_of_group[g] for g in dataset.group_ids.tolist()], dtype=np.int64)
    return SplitPlan(n_folds=n_folds, fold_of=fold_of)


def oversample_minority(indices: np.ndarray, labels: np.ndarray, rng) -> np.ndarray:
    """Duplicate minority-class indices (with replacement) until classes balance.

    All original indices are retained; `labels` is the full dataset's label
    array and `indices` the training subset to balance.
    """
    indices = np.asarray(indices)
    subset = labels[indices]
    n_pos = int((subset == 1).sum())
    n_neg = int((subset == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("oversampling needs both classes in the training subset")
    if n_pos == n_neg:
        return indices.copy()
    minority = 1 if n_pos < n_neg else 0
    pool = indices[subset == minority]
    rng = np.random.default_rng(rng)
    extra = rng.choice(pool, size=abs(n_neg - n_pos), replace=True)
    return np.concatenate([indices, extra])


def batch_iterator(indices, batch_size: int, rng):
    """One shuffled pass over `indices` in chunks of `batch_size`.

    The final short batch is emitted as-is. Call once per epoch with a
    persistent generator (or per-epoch seed) to get epoch-wise reshuffles.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    indices = np.asarray(indices)
    rng = np.random.default_rng(rng)
    shuffled = indices[rng.permutation(indices.shape[0])]
    for start in range(0, shuffled.shape[0], batch_size):
        yield shuffled[start:start + batch_size]
