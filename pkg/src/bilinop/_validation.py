"""Input validation for the estimator layer.

``sklearn.utils.check_array`` rejects complex input, and signals here are
complex by default, so the checks are spelled out.
"""

from __future__ import annotations

import numpy as np

from .exceptions import GridMismatch, PreconditionError


def check_signals(X, *, n_features: int | None = None, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite 2-D complex array of sampled signals (one per row)."""
    X = np.asarray(X)
    if X.ndim == 1:
        raise ValueError(f"{name} must be 2-D (n_samples, n_points); reshape a single signal with X[None, :]")
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.dtype.kind not in "biufc":
        raise ValueError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(complex, copy=False)
    if X.shape[0] == 0:
        raise ValueError(f"{name} has no samples")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise GridMismatch(f"{name} has {X.shape[1]} columns, the estimator was fitted with {n_features}")
    return X


def check_grid_size(n: int) -> int:
    """Signals must have a power-of-two length of at least 8."""
    if n < 8 or n & (n - 1):
        raise PreconditionError(f"signal length must be a power of two >= 8, got {n}")
    return n


def split_pairs(X: np.ndarray):
    """Split ``(n, 2N)`` rows into the first and second operands ``f | g``."""
    if X.shape[1] % 2:
        raise ValueError("paired input needs an even number of columns: [f | g]")
    half = X.shape[1] // 2
    return X[:, :half], X[:, half:]
