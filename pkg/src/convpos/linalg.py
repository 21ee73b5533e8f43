"""Dense matrix kernels: SPD roots, generalized polar factors, exponentials,
Haar rotations, Hadamard bases and nonnegative least squares."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import (
    ConditioningError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    UnsupportedDimensionError,
)

__all__ = [
    "AffineMap",
    "check_spd",
    "spd_sqrt",
    "spd_inv_sqrt",
    "sym",
    "antisym",
    "generalized_polar_decompose",
    "classical_polar",
    "matrix_exp",
    "haar_orthogonal",
    "sylvester_hadamard_basis",
    "nonneg_least_squares",
    "orthogonality_residual",
]

SYM_TOL = 1e-12


@dataclass(frozen=True)
class AffineMap:
    """The map ``x -> linear @ x + shift``."""

    linear: NDArray
    shift: NDArray = field(default=None)

    def __post_init__(self):
        A = np.asarray(self.linear, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"linear part must be square, got shape {A.shape}")
        z = np.zeros(A.shape[0]) if self.shift is None else np.asarray(self.shift, dtype=float).ravel()
        if z.shape != (A.shape[0],):
            raise ValueError("shift dimension does not match linear part")
        object.__setattr__(self, "linear", A)
        object.__setattr__(self, "shift", z)

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def __call__(self, x: ArrayLike) -> NDArray:
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.shift

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Return ``self ∘ inner``."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.shift + self.shift)


def sym(A: NDArray) -> NDArray:
    """Symmetric part ``(A + A^T)/2``."""
    return 0.5 * (A + A.T)


def antisym(A: NDArray) -> NDArray:
    """Antisymmetric part ``(A - A^T)/2``."""
    return 0.5 * (A - A.T)


def orthogonality_residual(U: NDArray) -> float:
    """Frobenius norm of ``U^T U - I``."""
    U = np.asarray(U, dtype=float)
    return float(np.linalg.norm(U.T @ U - np.eye(U.shape[0])))


def _square(A: ArrayLike, name: str = "matrix") -> NDArray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def check_spd(S: ArrayLike, name: str = "matrix") -> tuple[NDArray, NDArray]:
    """Validate a symmetric positive-definite matrix.

    Returns
    -------
    w, V : ndarray
        Eigenvalues (ascending) and orthonormal eigenvectors.

    Raises
    ------
    NotPositiveDefiniteError
        If the matrix is not symmetric to 1e-12 relative, or an eigenvalue is
        not strictly positive (the offending eigenvalue is named).
    """
    S = _square(S, name)
    scale = max(np.linalg.norm(S), np.finfo(float).tiny)
    asym = np.linalg.norm(S - S.T) / scale
    if asym > SYM_TOL:
        raise NotPositiveDefiniteError(f"{name} is not symmetric (relative asymmetry {asym:.3e})")
    w, V = np.linalg.eigh(sym(S))
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"{name} is not positive-definite: eigenvalue {w[0]:.6e} <= 0"
        )
    return w, V


def spd_sqrt(S: ArrayLike) -> NDArray:
    """Positive square root of an SPD matrix via eigendecomposition.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric positive-definite matrix.

    Returns
    -------
    ndarray
        The unique SPD ``R`` with ``R @ R == S``.
    """
    w, V = check_spd(S)
    return sym((V * np.sqrt(w)) @ V.T)


def spd_inv_sqrt(S: ArrayLike) -> NDArray:
    """Inverse of the positive square root of an SPD matrix."""
    w, V = check_spd(S)
    return sym((V / np.sqrt(w)) @ V.T)


def classical_polar(A: ArrayLike) -> tuple[NDArray, NDArray]:
    """Left polar decomposition ``A = P U`` via the SVD."""
    A = _square(A, "A")
    X, s, Zt = np.linalg.svd(A)
    if s[-1] <= s[0] * np.finfo(float).eps * A.shape[0]:
        raise SingularMatrixError("A is singular")
    return sym((X * s) @ X.T), X @ Zt


def generalized_polar_decompose(A: ArrayLike, M: ArrayLike, check_tol: float = 1e-8) -> tuple[NDArray, NDArray]:
    """Factor ``A = P M U`` with ``P`` SPD and ``U`` orthogonal, for fixed ``M``.

    ``P = Y^{-1/2} (Y^{1/2} A A^T Y^{1/2})^{1/2} Y^{-1/2}`` with ``Y = M M^T``,
    then ``U = (P M)^{-1} A``.  The two square roots are taken from singular
    value decompositions of ``M`` and ``Y^{1/2} A``, which is the same formula
    evaluated without squaring condition numbers.

    Parameters
    ----------
    A, M : array_like, shape (n, n)
        Nonsingular matrices.
    check_tol : float
        Maximum accepted ``‖U^T U - I‖_F``.

    Returns
    -------
    P : ndarray
        Symmetric positive-definite factor.
    U : ndarray
        Orthogonal factor.

    Raises
    ------
    SingularMatrixError
        If ``A`` or ``M`` is singular.
    ConditioningError
        If the orthogonal factor misses orthogonality by more than ``check_tol``.
    """
    A = _square(A, "A")
    M = _square(M, "M")
    if A.shape != M.shape:
        raise ValueError("A and M must have the same shape")
    eps = np.finfo(float).eps * A.shape[0]
    Xm, sm, _ = np.linalg.svd(M)
    if sm[-1] <= sm[0] * eps:
        raise SingularMatrixError("M is singular")
    sa = np.linalg.svd(A, compute_uv=False)
    if sa[-1] <= sa[0] * eps:
        raise SingularMatrixError("A is singular")
    y_half = (Xm * sm) @ Xm.T            # Y^{1/2}
    y_inv_half = (Xm / sm) @ Xm.T        # Y^{-1/2}
    Xc, sc, _ = np.linalg.svd(y_half @ A)
    root = (Xc * sc) @ Xc.T              # (Y^{1/2} A A^T Y^{1/2})^{1/2}
    P = sym(y_inv_half @ root @ y_inv_half)
    U = np.linalg.solve(P @ M, A)
    res = orthogonality_residual(U)
    if res > check_tol:
        raise ConditioningError(f"orthogonal factor residual {res:.3e} exceeds {check_tol:.1e}", res)
    return P, U


def matrix_exp(A: ArrayLike) -> NDArray:
    """Matrix exponential by scaling and squaring (Padé).

    Antisymmetric input is re-orthogonalized by one polar step, so the output
    is orthogonal to rounding error.
    """
    A = _square(A, "A")
    E = scipy.linalg.expm(A)
    if np.allclose(A, -A.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(A).max())):
        # polar projection removes the O(eps·‖A‖) drift off O_n
        X, _, Zt = np.linalg.svd(E)
        E = X @ Zt
    return E


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_orthogonal(n: int, seed=0) -> NDArray:
    """Haar-distributed orthogonal matrix, deterministic in ``seed``.

    A Gaussian matrix is QR-factored and the columns of ``Q`` are multiplied by
    the signs of ``diag(R)``, which makes the factorization unique.

    Parameters
    ----------
    n : int
        Dimension, at least 1.
    seed : int, SeedSequence or Generator
        Source of randomness.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _as_generator(seed)
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def sylvester_hadamard_basis(n: int) -> NDArray:
    """Orthonormal Sylvester-Hadamard basis with entries ``±1/√n``.

    Raises
    ------
    UnsupportedDimensionError
        If ``n`` is not a power of two.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise UnsupportedDimensionError(f"Sylvester construction needs n a power of two, got {n}")
    H = np.ones((1, 1))
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(n)


def nonneg_least_squares(
    columns: Sequence[ArrayLike] | NDArray,
    target: ArrayLike,
    tol: float = 1e-12,
    max_iter: int | None = None,
) -> tuple[NDArray, float]:
    """Lawson-Hanson active-set solver for ``min ‖C w − t‖`` with ``w >= 0``.

    Parameters
    ----------
    columns : sequence of vectors or ndarray of shape (m, k)
        Columns ``col_i``; a 2-D array is read column-wise.
    target : array_like, shape (m,)
    tol : float
        Dual feasibility tolerance, relative to ``‖C‖_F ‖t‖``.
    max_iter : int, optional
        Outer iteration cap, default ``3 k``.

    Returns
    -------
    weights : ndarray, shape (k,)
    residual : float
        ``‖C w − t‖``.
    """
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        C = np.asarray(columns, dtype=float)
    else:
        cols = [np.asarray(c, dtype=float).ravel() for c in columns]
        if not cols:
            raise ValueError("column list is empty")
        C = np.column_stack(cols)
    t = np.asarray(target, dtype=float).ravel()
    if C.shape[0] != t.shape[0]:
        raise ValueError(f"column length {C.shape[0]} != target length {t.shape[0]}")
    m, k = C.shape
    max_iter = 3 * k + 10 if max_iter is None else max_iter
    scale = max(np.linalg.norm(C) * max(np.linalg.norm(t), 1.0), 1.0)
    dual_tol = tol * scale

    w = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    grad = C.T @ (t - C @ w)
    it = 0
    while it < max_iter:
        cand = np.where(~passive & (grad > dual_tol))[0]
        if cand.size == 0:
            break
        it += 1
        passive[cand[np.argmax(grad[cand])]] = True
        while True:
            s = np.zeros(k)
            idx = np.where(passive)[0]
            s[idx] = np.linalg.lstsq(C[:, idx], t, rcond=None)[0]
            if np.all(s[idx] > 0.0):
                break
            bad = idx[s[idx] <= 0.0]
            alpha = np.min(w[bad] / (w[bad] - s[bad]))
            w = w + alpha * (s - w)
            passive &= w > 1e-15 * max(1.0, np.abs(w).max())
            w[~passive] = 0.0
            if not passive.any():
                s = np.zeros(k)
                break
        w = s
        grad = C.T @ (t - C @ w)
    return w, float(np.linalg.norm(C @ w - t))
