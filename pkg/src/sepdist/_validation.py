"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import numbers

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
RAW_TRACE_TOL = 1e-8
PSD_TOL = -1e-9


def check_square_matrix(matrix, name="matrix"):
    """Return ``matrix`` as a 2-D complex array, raising if it is not square and finite."""
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_dims(dims, size):
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("dims must be non-empty")
    if any(d < 2 for d in dims):
        raise ValueError(f"every subsystem dimension must be >= 2, got {dims}")
    if int(np.prod(dims)) != size:
        raise ValueError(f"product of dims {dims} does not match matrix size {size}")
    return dims


def hermiticity_error(matrix):
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def check_hermitian(matrix, tol=HERMITIAN_TOL, name="matrix"):
    err = hermiticity_error(matrix)
    if err > tol:
        raise ValueError(f"{name} is not Hermitian (max deviation {err:.3e} > {tol:.0e})")


def check_probability(p, name="p"):
    if not isinstance(p, numbers.Real) or not np.isfinite(p):
        raise ValueError(f"{name} must be a finite real number, got {p!r}")
    if p < 0.0 or p > 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return float(p)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    if isinstance(seed, (list, tuple)):
        return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))
    raise TypeError(f"cannot build a random generator from {seed!r}")


def check_unit_vector(vec, tol=1e-12, name="vector"):
    arr = np.asarray(vec, dtype=complex).ravel()
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} is not normalised (norm {norm!r})")
    return arr
