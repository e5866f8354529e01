"""Binary-classification metrics and cross-fold mean±std aggregation."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "auc")


class DegenerateMetricWarning(UserWarning):
    """A metric denominator was zero; the value was defined as 0."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    """Counts with the >= rule: score >= threshold predicts positive."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    if scores.size == 0:
        raise ValueError("cannot build a confusion matrix from empty input")
    pred = scores >= threshold
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: int, den: int, name: str) -> float:
    if den == 0:
        warnings.warn(f"{name} denominator is zero; defining it as 0", DegenerateMetricWarning)
        return 0.0
    return num / den


def accuracy(c: ConfusionCounts) -> float:
    return _ratio(c.tp + c.tn, c.total, "accuracy")


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp, "precision")


def recall(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn, "recall")


def f1(c: ConfusionCounts) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMetricWarning)
        p, r = precision(c), recall(c)
    if p + r == 0:
        warnings.warn("f1 denominator is zero; defining it as 0", DegenerateMetricWarning)
        return 0.0
    return 2.0 * p * r / (p + r)


def auc(scores, labels) -> float:
    """Rank-based AUC: the fraction of (positive, negative) pairs ranked
    correctly, ties counted 0.5. Equals trapezoidal ROC integration.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc requires both classes to be present")

    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    ranks = np.empty(labels.size, dtype=np.float64)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[j + 1] == s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank over the tie run
        i = j + 1
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def aggregate(values) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1); a single value has std 0."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty list")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def evaluate(scores, labels, threshold: float = 0.5) -> dict[str, float]:
    """All five metrics for one evaluation set."""
    c = confusion(scores, labels, threshold)
    return {
        "accuracy": accuracy(c),
        "precision": precision(c),
        "recall": recall(c),
        "f1": f1(c),
        "auc": auc(scores, labels),
    }


@dataclass
class FoldReport:
    """Per-fold metric rows plus cross-fold mean±std aggregation.

    Each row carries ``seed`` and ``fold`` keys alongside the metric values.
    ``incomplete`` is set when some fold of the run failed and was omitted.
    """

    rows: list[dict] = field(default_factory=list)
    incomplete: bool = False

    def values(self, metric: str) -> list[float]:
        return [row[metric] for row in self.rows]

    def aggregate(self, metric: str) -> tuple[float, float]:
        return aggregate(self.values(metric))

    def summary(self) -> dict[str, tuple[float, float]]:
        return {m: self.aggregate(m) for m in METRIC_NAMES}


def format_cell(mean: float, std: float) -> str:
    """Percent-scale ``mean ±std`` cell, e.g. ``79.89 ±0.89``."""
    return f"{100 * mean:.2f} ±{100 * std:.2f}"


def render_comparison_table(entries: list[tuple[str, FoldReport]]) -> str:
    """Strategy-per-row table over all five metrics, mean±std cells."""
    header = ["strategy"] + [m.capitalize() if m != "auc" else "AUC" for m in METRIC_NAMES]
    body = []
    for name, report in entries:
        cells = [format_cell(*report.aggregate(m)) for m in METRIC_NAMES]
        body.append([name] + cells)
    return _render_rows([header] + body)


def render_ablation_table(axis_label: str, entries: list[tuple[str, tuple[float, float]]]) -> str:
    """Two-row sweep table: one column per setting, AUC mean±std beneath."""
    header = [axis_label] + [label for label, _ in entries]
    values = ["AUC"] + [format_cell(mean, std) for _, (mean, std) in entries]
    return _render_rows([header, values])


def _render_rows(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines)


def write_metrics_csv(report: FoldReport, path) -> None:
    """Fold rows plus mean/std summary rows; ``kind`` column tells them apart."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "seed", "fold", *METRIC_NAMES])
        for row in report.rows:
            writer.writerow([
                "fold", row.get("seed", ""), row.get("fold", ""),
                *(f"{row[m]:.17g}" for m in METRIC_NAMES),
            ])
        if report.rows:
            summary = report.summary()
            writer.writerow(["mean", "", "", *(f"{summary[m][0]:.17g}" for m in METRIC_NAMES)])
            writer.writerow(["std", "", "", *(f"{summary[m][1]:.17g}" for m in METRIC_NAMES)])


def read_metrics_csv(path) -> FoldReport:
    """Rebuild a FoldReport from the fold rows of a metrics CSV."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for record in reader:
            if record["kind"] != "fold":
                continue
            row = {m: float(record[m]) for m in METRIC_NAMES}
            row["seed"] = int(record["seed"]) if record["seed"] else None
            row["fold"] = int(record["fold"]) if record["fold"] else None
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no fold rows found")
    return FoldReport(rows=rows)
