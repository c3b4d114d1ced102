"""Label-smoothed cross-entropy over a flat batch of positions."""
from __future__ import annotations

import numpy as np

from .functional import ShapeError, log_softmax_array
from .tensor import DTYPE, Tensor, record


def label_smoothed_ce(logits: Tensor, targets, epsilon: float = 0.1, pad_id: int | None = None) -> Tensor:
    """Mean over supervised positions of ``(1-eps)*NLL(target) + eps*mean_v NLL(v)``.

    ``logits`` is ``(positions, V)``; positions whose target equals ``pad_id``
    are excluded from the mean. The smoothing mass is spread uniformly over
    the whole vocabulary, target included.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"label smoothing epsilon must be in [0, 1), got {epsilon}")
    if logits.ndim != 2:
        raise ShapeError(f"expected logits of shape (positions, V), got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    n, vocab = logits.shape
    if targets.shape[0] != n:
        raise ShapeError(f"{targets.shape[0]} targets for {n} logit rows")
    keep = np.ones(n, dtype=bool) if pad_id is None else targets != pad_id
    count = int(keep.sum())
    if count == 0:
        raise ValueError("no supervised positions")
    if targets[keep].min(initial=0) < 0 or targets[keep].max(initial=0) >= vocab:
        raise IndexError(f"target index out of range for vocabulary of size {vocab}")

    logp = log_softmax_array(logits.data, axis=-1)
    rows = np.nonzero(keep)[0]
    nll = -logp[rows, targets[rows]]
    smooth = -logp[rows].mean(axis=-1)
    value = ((1.0 - epsilon) * nll + epsilon * smooth).sum() / count

    def backward(g):
        probs = np.exp(logp[rows])
        q = np.full_like(probs, epsilon / vocab)
        q[np.arange(rows.size), targets[rows]] += 1.0 - epsilon
        grad = np.zeros_like(logits.data)
        grad[rows] = (probs - q) * (float(g) / count)
        return (grad,)

    return record(np.asarray(value, dtype=DTYPE), (logits,), backward)
