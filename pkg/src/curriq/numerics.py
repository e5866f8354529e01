"""Dense numeric kernels shared by the training engine.

Everything operates on float64 numpy arrays and is kept finite: an operation
that would hand NaN/Inf to the rest of the engine raises instead.
"""

from __future__ import annotations

import numpy as np

# Probabilities are floored at this value before taking a log, so a saturated
# prediction never produces -inf loss.
PROB_FLOOR = 1e-12


class NonFiniteError(ArithmeticError):
    """A value that must be finite turned out NaN or infinite."""


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def require_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit shape and finiteness checks."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return require_finite(a @ b, "matmul result")


def softmax(logits, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax along `axis` (max subtracted before exp)."""
    x = np.asarray(logits, dtype=np.float64)
    require_finite(x, "logits")
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def cross_entropy(probs, label: int) -> float:
    """Negative log-probability of `label`, floored at PROB_FLOOR before the log."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probability row must be 1-D, got shape {p.shape}")
    if not 0 <= label < p.shape[0]:
        raise ValueError(f"label {label} out of range for {p.shape[0]} classes")
    return float(-np.log(max(float(p[label]), PROB_FLOOR)))


def softmax_ce_gradient(logits, label: int) -> np.ndarray:
    """Gradient of cross_entropy(softmax(logits), label) wrt the logits.

    Equals softmax(logits) - onehot(label).
    """
    x = np.asarray(logits, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"logit row must be 1-D, got shape {x.shape}")
    if not 0 <= label < x.shape[0]:
        raise ValueError(f"label {label} out of range for {x.shape[0]} classes")
    grad = softmax(x)
    grad[label] -= 1.0
    return grad
