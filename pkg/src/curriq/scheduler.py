"""Adaptive curriculum scheduling via streaming confidence statistics.

Two bounded FIFO queues summarise the model's recent predictions:

* the hard-sample queue holds the true-class probabilities ("confidences") of
  recently misclassified samples — values below 0.5 in the binary setting;
* the certainty queue holds the winning-class probability of every recent
  sample; its mean is the model certainty, which climbs from 0.5 toward 1 as
  training stabilises.

Each batch the discard threshold is re-estimated as

    t_ada = mean(hard_queue) + multiplier * std(hard_queue)

where the multiplier is the certainty-queue mean (self-tuned mode) or a fixed
override for sweeps. Samples whose confidence falls strictly below ``t_ada``
are masked out of the loss; during the warmup epochs the threshold is inactive
and every sample is kept, but both queues keep filling so the threshold is
well-defined the moment warmup ends.

Binary classification only: the "confidence < 0.5 iff misclassified"
equivalence that the hard queue relies on does not hold for more classes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, require_finite

# Winning-class probability can never drop below 1/k; for two classes every
# certainty lies in [0.5, 1], and 0.5 is also the misclassification boundary.
MIN_CERTAINTY = 0.5


class BoundedStatQueue:
    """Fixed-capacity FIFO of scalars with mean/std over the retained window.

    New values evict the oldest ones once the queue is full; statistics are
    always computed from scratch over the current contents, so they match an
    independent pass exactly.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"queue capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: deque[float] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, value: float) -> None:
        self._items.append(float(value))

    def extend(self, values) -> None:
        for v in values:
            self._items.append(float(v))

    def values(self) -> list[float]:
        """Current contents, oldest first."""
        return list(self._items)

    def mean(self) -> float:
        if not self._items:
            raise ValueError("mean of an empty queue")
        return math.fsum(self._items) / len(self._items)

    def std(self) -> float:
        """Population standard deviation (divide by n) of the contents."""
        m = self.mean()
        return math.sqrt(math.fsum((v - m) ** 2 for v in self._items) / len(self._items))


def sample_confidence(probs, label: int) -> float:
    """Probability the model assigns to the sample's observed class.

    Below 0.5 exactly when the binary prediction is wrong; a 0.5 tie counts
    as correct.
    """
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < p.shape[-1]:
        raise ValueError(f"label {label} out of range for {p.shape[-1]} classes")
    return float(p[label])


def sample_certainty(probs) -> float:
    """Winning-class probability of one prediction; in [0.5, 1] for two classes."""
    p = np.asarray(probs, dtype=np.float64)
    return float(p.max())


def batch_confidences(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return probs[np.arange(probs.shape[0]), labels]


def batch_certainties(probs: np.ndarray) -> np.ndarray:
    return probs.max(axis=1)


@dataclass(frozen=True)
class SchedulerConfig:
    queue_length: int = 32
    batch_size: int = 16
    warmup_epochs: int = 3
    alpha_override: float | None = None


@dataclass(frozen=True)
class StepDiagnostics:
    t_ada: float | None
    theta: float
    discard_count: int
    hard_queue_len: int


class AdaptiveScheduler:
    """Owns both queues and the per-batch threshold/mask pipeline.

    Single-writer: one training loop drives it, advancing ``begin_epoch``
    once per epoch and ``step`` once per batch.
    """

    def __init__(self, config: SchedulerConfig):
        if config.queue_length < 1:
            raise ValueError(f"queue_length must be >= 1, got {config.queue_length}")
        if config.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {config.batch_size}")
        if config.queue_length % config.batch_size != 0:
            raise ValueError(
                f"queue_length ({config.queue_length}) must be a multiple of "
                f"batch_size ({config.batch_size})")
        if config.warmup_epochs < 0:
            raise ValueError(f"warmup_epochs must be >= 0, got {config.warmup_epochs}")
        self.config = config
        self.hard_queue = BoundedStatQueue(config.queue_length)
        self.certainty_queue = BoundedStatQueue(config.queue_length)
        self.epoch = 0
        self.t_ada: float | None = None

    def begin_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    @property
    def in_warmup(self) -> bool:
        return self.epoch < self.config.warmup_epochs

    def _validate_batch(self, probs, labels) -> tuple[np.ndarray, np.ndarray]:
        p = as_matrix(probs, "probabilities")
        if p.shape[1] != 2:
            raise ValueError(f"binary classification only: got {p.shape[1]} classes")
        require_finite(p, "probabilities")
        y = np.asarray(labels)
        if y.shape != (p.shape[0],):
            raise ValueError(f"labels shape {y.shape} does not match batch of {p.shape[0]}")
        if y.size and (y.min() < 0 or y.max() > 1):
            raise ValueError("labels must be 0 or 1")
        return p, y.astype(np.intp)

    def _update(self, confidences: np.ndarray, certainties: np.ndarray) -> None:
        self.certainty_queue.extend(certainties)
        # Ties at exactly 0.5 count as correctly classified and stay out of
        # the hard queue, so its contents remain strictly below 0.5.
        self.hard_queue.extend(confidences[confidences < MIN_CERTAINTY])

    def update_queues(self, probs, labels) -> None:
        """Feed one batch of predictions into both queues (FIFO eviction)."""
        p, y = self._validate_batch(probs, labels)
        self._update(batch_confidences(p, y), batch_certainties(p))

    def compute_theta(self) -> float:
        """Model certainty: mean of the certainty queue.

        Before anything is enqueued this falls back to the fixed override if
        one is configured, else to the 0.5 certainty floor.
        """
        if len(self.certainty_queue):
            return self.certainty_queue.mean()
        if self.config.alpha_override is not None:
            return self.config.alpha_override
        return MIN_CERTAINTY

    def compute_t_ada(self) -> float | None:
        """Refresh the discard threshold; None while inactive.

        Inactive during warmup and while the hard queue is empty. The std
        multiplier is the fixed override when configured, otherwise the
        certainty-queue mean.
        """
        if self.in_warmup or not len(self.hard_queue):
            self.t_ada = None
        else:
            if self.config.alpha_override is not None:
                multiplier = self.config.alpha_override
            else:
                multiplier = self.compute_theta()
            self.t_ada = self.hard_queue.mean() + multiplier * self.hard_queue.std()
        return self.t_ada

    def build_mask(self, confidences) -> np.ndarray:
        """Per-sample 0/1 keep-mask against the current threshold.

        Keeps sample i iff confidence_i >= t_ada (equality kept); all ones
        while the threshold is inactive.
        """
        conf = np.asarray(confidences, dtype=np.float64)
        if self.t_ada is None:
            return np.ones(conf.shape[0])
        return (conf >= self.t_ada).astype(np.float64)

    def step(self, probs, labels) -> tuple[np.ndarray, StepDiagnostics]:
        """Full per-batch pipeline.

        Order: extract confidences/certainties from the current predictions,
        update both queues with this batch, recompute theta then t_ada, then
        mask this batch's confidences against the fresh threshold — so the
        current batch influences its own mask.
        """
        p, y = self._validate_batch(probs, labels)
        conf = batch_confidences(p, y)
        self._update(conf, batch_certainties(p))
        theta = self.compute_theta()
        t_ada = self.compute_t_ada()
        mask = self.build_mask(conf)
        diag = StepDiagnostics(
            t_ada=t_ada,
            theta=theta,
            discard_count=int(mask.shape[0] - mask.sum()),
            hard_queue_len=len(self.hard_queue),
        )
        return mask, diag
