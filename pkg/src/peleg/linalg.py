"""Dense small-dimension linear algebra shared by the whole package.

Everything here is plain float64 numpy with value semantics: no function
mutates its arguments, so callers in concurrent trial runners need no
locking.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "quad_form",
    "inv_quad_form",
    "rank_one_update",
    "min_eigenvalue",
    "spd_factor",
    "spd_solve",
]

# Relative tolerance for the symmetry check on matrices used as norm inducers.
SYMMETRY_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Matrix is singular (or indefinite) within the pivot tolerance."""


def _check_vector(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    return x


def _check_square(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def _check_symmetric(A):
    A = _check_square(A)
    scale = max(np.max(np.abs(A)), 1.0)
    if np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return A


def quad_form(x, A) -> float:
    """Return the quadratic form x^T A x."""
    x = _check_vector(x)
    A = _check_square(A)
    if A.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: x has {x.shape[0]}, A has {A.shape[0]}")
    return float(x @ A @ x)


def spd_factor(A) -> np.ndarray:
    """Cholesky factor L (lower) of a symmetric positive definite matrix.

    Raises SingularMatrixError when the factorization fails or the smallest
    pivot L_ii^2 falls below 1e-12 * trace(A)/d (scale-relative threshold).
    """
    A = _check_symmetric(A)
    d = A.shape[0]
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorization failed: {exc}") from exc
    pivot_floor = 1e-12 * np.trace(A) / d
    min_pivot = float(np.min(np.diagonal(L)) ** 2)
    if min_pivot < pivot_floor:
        raise SingularMatrixError(
            f"smallest Cholesky pivot {min_pivot:.3e} below threshold {pivot_floor:.3e}"
        )
    return L


def _cho_solve(L, b):
    y = np.linalg.solve(L, b) if L.shape[0] > 1 else b / L[0, 0]
    # forward then backward substitution via triangular structure
    return np.linalg.solve(L.T, y) if L.shape[0] > 1 else y / L[0, 0]


def spd_solve(A, b) -> np.ndarray:
    """Solve A z = b for symmetric positive definite A via Cholesky."""
    b = np.asarray(b, dtype=np.float64)
    L = spd_factor(A)
    return _cho_solve(L, b)


def inv_quad_form(x, A) -> float:
    """Return x^T A^{-1} x for positive definite A, via a linear solve."""
    x = _check_vector(x)
    A = _check_square(A)
    if A.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: x has {x.shape[0]}, A has {A.shape[0]}")
    z = spd_solve(A, x)
    return float(x @ z)


def rank_one_update(A, x) -> np.ndarray:
    """Return A + x x^T (symmetry preserved exactly)."""
    x = _check_vector(x)
    A = _check_square(A)
    if A.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: x has {x.shape[0]}, A has {A.shape[0]}")
    return A + np.outer(x, x)


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue of a symmetric matrix (dense symmetric eigensolve)."""
    A = _check_symmetric(A)
    return float(np.linalg.eigvalsh(A)[0])
