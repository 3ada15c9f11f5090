"""Input validation for complex snapshot arrays.

``sklearn.utils.check_array`` rejects complex input, so snapshots get their
own checker with the same spirit.
"""

import numpy as np


def check_snapshots(x, min_snapshots=1, n_channels=None, name="X"):
    """Return ``x`` as a finite ``(K, N)`` complex128 array.

    Real input is promoted to complex. ``n_channels`` pins the expected
    number of columns, e.g. when predicting with a fitted model.
    """
    arr = np.asarray(x)
    if arr.dtype == object or not (np.issubdtype(arr.dtype, np.number) or arr.dtype == bool):
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D with shape (n_snapshots, n_channels), got ndim={arr.ndim}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    k, n = arr.shape
    if k < min_snapshots:
        raise ValueError(f"{name} has {k} snapshots; at least {min_snapshots} required")
    if n_channels is not None and n != n_channels:
        raise ValueError(f"{name} has {n} channels, expected {n_channels}")
    return arr


def check_responsibilities(q, atol=1e-12):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2:
        raise ValueError("responsibilities must be a 2-D (K, L) table")
    if np.any(q < 0) or np.any(q > 1):
        raise ValueError("responsibilities must lie in [0, 1]")
    if not np.allclose(q.sum(axis=1), 1.0, rtol=0, atol=atol * max(1, q.shape[1]) * 10):
        raise ValueError("responsibility rows must sum to one")
    return q
