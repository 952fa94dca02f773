"""Tridiagonal operators on the interior nodes of a Dirichlet grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvals, lapack

from .errors import NoConvergence, SingularOperator

RCOND_MIN = 1e-14


@dataclass(frozen=True)
class TridiagonalOperator:
    """Matrix acting on the n - 2 interior unknowns.

    ``lower[i]`` couples row i + 1 to column i, ``upper[i]`` couples row i to
    column i + 1.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        m = len(self.diag)
        if len(self.lower) != m - 1 or len(self.upper) != m - 1:
            raise ValueError("off-diagonals must have one entry fewer than the diagonal")

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        return out

    def __add__(self, other: "TridiagonalOperator") -> "TridiagonalOperator":
        return TridiagonalOperator(
            self.lower + other.lower, self.diag + other.diag, self.upper + other.upper
        )

    def scaled(self, s: float) -> "TridiagonalOperator":
        return TridiagonalOperator(s * self.lower, s * self.diag, s * self.upper)

    def shifted(self, s: float) -> "TridiagonalOperator":
        """Operator plus s times the identity."""
        return TridiagonalOperator(self.lower, self.diag + s, self.upper)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """LU with partial pivoting; raises SingularOperator when ill-conditioned."""
        dl, d, du, du2, ipiv, info = lapack.dgttrf(self.lower, self.diag, self.upper)
        if info != 0:
            raise SingularOperator(f"zero pivot at row {info - 1}")
        anorm = np.max(
            np.abs(self.diag)
            + np.concatenate([np.abs(self.lower), [0.0]])
            + np.concatenate([[0.0], np.abs(self.upper)])
        )
        rcond, info = lapack.dgtcon(dl, d, du, du2, ipiv, anorm, norm="1")
        if rcond < RCOND_MIN:
            raise SingularOperator(f"reciprocal condition number {rcond:.2e}")
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, np.asarray(rhs, dtype=float))
        if info != 0:
            raise SingularOperator("tridiagonal back substitution failed")
        return x


def dirichlet_laplacian(n: int) -> TridiagonalOperator:
    """Second difference on an n-node grid over [-1, 1], interior block."""
    h = 2.0 / (n - 1)
    m = n - 2
    off = np.full(m - 1, 1.0 / h**2)
    return TridiagonalOperator(off, np.full(m, -2.0 / h**2), off.copy())


def matrix_spectrum(op: TridiagonalOperator, k: int) -> np.ndarray:
    """The k eigenvalues of largest real part, in decreasing order.

    When every product lower[i] * upper[i] is positive the matrix is similar to a
    symmetric tridiagonal one (diagonal scaling), whose spectrum is computed
    exactly by LAPACK. Otherwise the dense matrix is diagonalised.
    """
    k = min(k, op.size)
    prod = op.lower * op.upper
    try:
        if np.all(prod > 0):
            off = np.sqrt(prod)
            m = op.size
            vals = eigh_tridiagonal(
                op.diag, off, eigvals_only=True, select="i", select_range=(m - k, m - 1)
            )
            return np.sort(vals)[::-1]
        vals = eigvals(op.to_dense())
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed: {exc}") from exc
    order = np.argsort(-vals.real, kind="stable")
    vals = vals[order][:k]
    if np.all(np.abs(vals.imag) <= 1e-12 * np.maximum(1.0, np.abs(vals.real))):
        vals = vals.real
    return vals


def leading_mode(op: TridiagonalOperator, iterations: int = 6):
    """Eigenvalue of largest real part and its eigenvector by shifted inverse iteration.

    The vector is scaled to max-norm 1 with a positive largest entry.
    """
    mu = float(np.real(matrix_spectrum(op, 1)[0]))
    shifted = op.shifted(-(mu + 1e-6 * max(1.0, abs(mu))))
    x = 1.0 + np.linspace(0.0, 0.5, op.size)
    for _ in range(iterations):
        x = shifted.solve(x)
        x /= np.max(np.abs(x))
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return mu, x
