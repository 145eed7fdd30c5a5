"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def check_feature_matrix(X, *, name: str = "X", allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 2-D float array and reject non-finite entries."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0 and not allow_empty:
        raise ValueError(f"{name} must contain at least one row")
    bad = ~np.isfinite(X)
    if bad.any():
        row = int(np.flatnonzero(bad.any(axis=1))[0])
        raise ValueError(f"{name} has a non-finite value in row {row}")
    return X


def check_binary_labels(
    y,
    *,
    n: int | None = None,
    require_both: bool = False,
    name: str = "y",
) -> np.ndarray:
    """Validate a vector of -1/+1 labels, optionally requiring both classes."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {y.shape}")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    values = np.unique(y)
    if not np.all(np.isin(values, (-1, 1))):
        raise ValueError(f"{name} must contain only -1/+1 labels, found {values.tolist()}")
    if require_both and values.size < 2:
        raise ValueError(f"{name} is degenerate: only one class present ({values.tolist()})")
    return y.astype(int)


def check_feature_weights(psi, n_features: int, *, name: str = "psi") -> np.ndarray:
    """Validate non-negative per-feature weights with at least one positive entry."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (n_features,):
        raise ValueError(
            f"{name} must have shape ({n_features},), got {psi.shape}"
        )
    if not np.isfinite(psi).all():
        raise ValueError(f"{name} must be finite")
    if (psi < 0).any():
        raise ValueError(f"{name} must be non-negative")
    if not (psi > 0).any():
        raise ValueError(f"{name} must have at least one positive entry")
    return psi


def check_same_length(*arrays, names: tuple[str, ...] | None = None) -> None:
    lengths = [len(a) for a in arrays]
    if len(set(lengths)) > 1:
        labels = names if names is not None else tuple(f"arg{i}" for i in range(len(arrays)))
        detail = ", ".join(f"{lbl}={ln}" for lbl, ln in zip(labels, lengths))
        raise ValueError(f"inconsistent lengths: {detail}")
