from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError


def rmse(predictions, targets) -> float:
    """Root of the mean squared residual."""
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.shape != t.shape:
        raise InvalidArgumentError(f"length mismatch: {p.size} predictions, {t.size} targets")
    if p.size == 0:
        raise InvalidArgumentError("rmse of an empty vector")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def standard_error(values) -> float:
    """Sample standard deviation over sqrt(count); 0 for a single value."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(np.std(v, ddof=1) / np.sqrt(v.size))
