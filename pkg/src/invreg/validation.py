"""Input validation helpers.

Every public entry point funnels array-likes through these checks so error
messages name the offending argument instead of surfacing a numpy internal.
"""

from __future__ import annotations

import numpy as np

__all__ = ["as_matrix", "as_vector", "check_spd", "check_positive_vector"]

# Relative symmetry tolerance for SPD inputs.
SYMMETRY_RTOL = 1e-10


def as_matrix(a, name: str, *, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce to a finite float64 2-D array, optionally enforcing a shape."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    if shape is not None and m.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {m.shape}")
    return m


def as_vector(a, name: str, *, length: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 1-D array; a column/row matrix is flattened."""
    v = np.asarray(a, dtype=float)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {v.shape[0]}")
    return v


def check_spd(m, name: str) -> np.ndarray:
    """Validate a symmetric positive-definite matrix (symmetry to 1e-10 relative).

    Positive definiteness itself is established downstream by the Cholesky
    factorization; this check rejects non-square and asymmetric inputs early.
    """
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got {m.shape}")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric to relative tolerance {SYMMETRY_RTOL:g}")
    return m


def check_positive_vector(v, name: str, *, length: int | None = None) -> np.ndarray:
    v = as_vector(v, name, length=length)
    if np.any(v <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return v
