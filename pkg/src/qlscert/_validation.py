"""Input validation helpers shared by the public API."""

import numbers

import numpy as np


def as_complex_matrix(value, name="matrix", shape=None):
    """Coerce ``value`` to a 2-D complex array.

    Scalars become 1x1 and 1-D inputs become a single row. ``shape`` may
    contain ``None`` entries for unconstrained axes.
    """
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be at most 2-D, got ndim={arr.ndim}")
    if shape is not None:
        for axis, want in enumerate(shape):
            if want is not None and arr.shape[axis] != want:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def check_square(A, name="matrix"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive real, got {value!r}")
    return float(value)


def check_nonnegative(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite non-negative real, got {value!r}")
    return float(value)


def hermitian_part(A):
    return 0.5 * (A + A.conj().T)


def relative_asymmetry(A, B):
    """``||A - B|| / max(1, ||A||)`` in the Frobenius norm."""
    return float(np.linalg.norm(A - B) / max(1.0, np.linalg.norm(A)))
