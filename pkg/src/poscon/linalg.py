"""Dense linear-algebra substrate for the toolkit.

Every matrix in the toolkit is a small, dense, real ``numpy.ndarray`` (the
largest stacked system in practice is a few dozen states), so all routines
here wrap LAPACK-backed factorizations with the validation and error
semantics the rest of the package relies on: finiteness is enforced on the
way in, singularity and asymmetry are reported as typed exceptions, and
symmetric eigendecompositions always return ascending eigenvalues.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotSymmetric, Overflow, SingularMatrix

#: Pivot magnitude below which an LU factorization is declared singular.
SINGULARITY_THRESHOLD = 1e-12

#: Maximum allowed entrywise asymmetry for symmetric eigendecompositions.
SYMMETRY_TOLERANCE = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array, rejecting NaN/Inf entries.

    Vectors of shape ``(n,)`` are promoted to column matrices ``(n, 1)``.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise Overflow(f"{name} contains non-finite entries")
    return m


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce ``a`` to a 1-D float64 array, rejecting NaN/Inf entries."""
    v = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise Overflow(f"{name} contains non-finite entries")
    return v


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A @ Z = b`` for square ``A`` by LU factorization with partial pivoting.

    Parameters
    ----------
    A : (n, n) array_like
    b : (n, k) or (n,) array_like

    Returns
    -------
    (n, k) ndarray

    Raises
    ------
    SingularMatrix
        If any pivot magnitude falls below ``SINGULARITY_THRESHOLD``.
    DimensionMismatch
        If ``A`` is not square or row counts differ.
    """
    A = as_matrix(A, "A")
    b = as_matrix(b, "b")
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if b.shape[0] != n:
        raise DimensionMismatch(f"b has {b.shape[0]} rows, expected {n}")
    with warnings.catch_warnings():
        # singularity is detected from the pivots below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() < SINGULARITY_THRESHOLD:
        raise SingularMatrix(
            f"pivot magnitude {pivots.min():.3e} below {SINGULARITY_THRESHOLD:.0e}"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def sym_eigen(S, tol: float = SYMMETRY_TOLERANCE):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input is checked against ``tol`` for entrywise asymmetry and then
    symmetrized as ``(S + S.T) / 2`` before the decomposition, so tiny
    round-off asymmetry never leaks into the spectrum.

    Returns
    -------
    (eigenvalues, eigenvectors)
        ``eigenvalues`` is a 1-D array sorted ascending and ``eigenvectors``
        has the matching eigenvectors as columns, so
        ``S @ V == V @ diag(w)`` up to round-off.

    Raises
    ------
    NotSymmetric
        If ``max|S - S.T|`` exceeds ``tol``.
    """
    S = as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"S must be square, got {S.shape}")
    skew = np.abs(S - S.T).max() if S.size else 0.0
    if skew > tol:
        raise NotSymmetric(f"max|S - S.T| = {skew:.3e} exceeds {tol:.0e}")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return w, V


def expm(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``e^{A t}`` via scaling-and-squaring with a Pade core.

    Raises
    ------
    Overflow
        If the result leaves the representable range.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if not np.isfinite(t):
        raise Overflow("t must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A * t)
    if not np.all(np.isfinite(E)):
        raise Overflow(f"expm overflowed for ||A t|| = {np.abs(A * t).max():.3e}")
    return E


def spectral_norm(A) -> float:
    """Largest singular value of ``A`` (equals ``sqrt(lambda_max(A.T @ A))``)."""
    A = as_matrix(A, "A")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def max_sym_eigenvalue(S) -> float:
    """Largest eigenvalue of a symmetric matrix (symmetrized internally)."""
    w, _ = sym_eigen(S)
    return float(w[-1])
