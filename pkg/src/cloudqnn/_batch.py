"""Normalization of minibatch arguments shared by the gradient routines."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    """Coerce a batch to (feature_rows, targets) float arrays.

    Accepts either a sequence of (features, target) pairs or an already-split
    (matrix, vector) pair; rejects empty batches.
    """
    if (
        isinstance(batch, tuple)
        and len(batch) == 2
        and np.ndim(batch[0]) == 2
        and np.ndim(batch[1]) == 1
    ):
        rows = np.asarray(batch[0], dtype=float)
        targets = np.asarray(batch[1], dtype=float)
    else:
        pairs = list(batch)
        if not pairs:
            raise ValidationError("batch must be non-empty")
        rows = np.asarray([p[0] for p in pairs], dtype=float)
        targets = np.asarray([p[1] for p in pairs], dtype=float)
    if rows.shape[0] == 0:
        raise ValidationError("batch must be non-empty")
    if rows.shape[0] != targets.shape[0]:
        raise ValidationError(
            f"batch has {rows.shape[0]} feature rows but {targets.shape[0]} targets"
        )
    return rows, targets
