"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np


def check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {value}")
    return value


def check_per_link(name: str, value, n_links: int, positive: bool = True) -> np.ndarray:
    """Broadcast a scalar or length-K array to a float vector of length K."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_links, float(arr))
    if arr.shape != (n_links,):
        raise ValueError(f"{name} must be a scalar or have shape ({n_links},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if positive and not np.all(arr > 0):
        raise ValueError(f"{name} must be strictly positive")
    return arr


def check_gain_matrix(G, n_links: int | None = None) -> np.ndarray:
    """Validate a single K x K gain matrix: nonnegative, finite, positive diagonal."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"gain matrix must be square, got shape {G.shape}")
    if n_links is not None and G.shape[0] != n_links:
        raise ValueError(f"gain matrix has {G.shape[0]} links, expected {n_links}")
    if not np.all(np.isfinite(G)):
        raise ValueError("gain matrix must be finite")
    if np.any(G < 0):
        raise ValueError("gain matrix must be nonnegative")
    if np.any(np.diagonal(G) <= 0):
        raise ValueError("gain matrix must have strictly positive diagonal entries")
    return G


def check_gain_samples(X, n_links: int | None = None) -> np.ndarray:
    """Validate a stack of sampled gain matrices with shape (N, K, K)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"gain samples must have shape (N, K, K), got {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one gain sample")
    if n_links is not None and X.shape[1] != n_links:
        raise ValueError(f"gain samples have {X.shape[1]} links, expected {n_links}")
    if not np.all(np.isfinite(X)):
        raise ValueError("gain samples must be finite")
    if np.any(X < 0):
        raise ValueError("gain samples must be nonnegative")
    diag = np.diagonal(X, axis1=1, axis2=2)
    if np.any(diag <= 0):
        raise ValueError("gain samples must have strictly positive diagonal entries")
    return X


def check_subset(S, n_links: int) -> np.ndarray:
    """Normalize a link subset to a sorted, duplicate-free index array."""
    idx = np.asarray(S, dtype=np.intp).ravel()
    if idx.size == 0:
        return idx
    if np.any(idx < 0) or np.any(idx >= n_links):
        raise ValueError(f"link indices must lie in [0, {n_links}), got {idx}")
    idx = np.unique(idx)
    return idx
