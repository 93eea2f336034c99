"""Input validation helpers.

``sklearn.utils.check_array`` refuses complex input, and every matrix in
this package is complex, so the estimators validate through these instead.
"""
import numpy as np

from .exceptions import NonFinite, ShapeError


def as_matrix(x, name="x", copy=False):
    """Return ``x`` as a finite 2-D complex128 array."""
    a = np.array(x, dtype=np.complex128) if copy else np.asarray(x, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def as_vector(x, name="x"):
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim == 2 and 1 in a.shape:
        a = a.ravel()
    if a.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def check_unit_interval(value, name):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def is_real_valued(a):
    """True when ``a`` carries no imaginary part at all."""
    a = np.asarray(a)
    return (not np.iscomplexobj(a)) or not np.any(a.imag)
