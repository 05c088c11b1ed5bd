"""Matrix decompositions, the isotropic inner product and the left-invariant metric.

Matrices are plain ``numpy.ndarray`` objects of shape ``(n, n)`` and dtype
float64.  Functions here never mutate their arguments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MetricParams",
    "SingularMatrixError",
    "as_matrix",
    "parse_matrix",
    "matrix_from_rows",
    "sym_part",
    "skew_part",
    "dev_part",
    "frob_inner",
    "iso_inner",
    "iso_norm",
    "metric_at",
    "commutator",
    "cofactor",
    "inverse",
    "rcond",
]

RCOND_MIN = 1e-12


class SingularMatrixError(ValueError):
    """Raised when a matrix that must be invertible is (numerically) singular."""


@dataclass(frozen=True)
class MetricParams:
    """Weights of the deviatoric, skew and volumetric parts of the inner product."""

    mu: float = 1.0
    mu_c: float = 1.0
    kappa: float = 1.0
    omega: float = field(init=False)

    def __post_init__(self):
        for name in ("mu", "mu_c", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        object.__setattr__(self, "omega", self.mu_c / self.mu)


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate ``M`` as a finite square real matrix and return a float64 copy."""
    A = np.array(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def parse_matrix(text: str) -> np.ndarray:
    """Parse a JSON array-of-rows literal such as ``[[1,0],[0,1]]``.

    Ragged rows, non-numeric entries and NaN/Infinity are rejected.
    """

    def _reject_constant(token):
        raise ValueError(f"non-finite literal {token!r} in matrix")

    try:
        rows = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed matrix literal: {exc}") from None
    return matrix_from_rows(rows)


def matrix_from_rows(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ValueError("matrix literal must be a non-empty array of rows")
    n = len(rows)
    for row in rows:
        if not isinstance(row, list) or len(row) != n:
            raise ValueError("matrix literal must be square with equal-length rows")
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValueError(f"matrix entry {x!r} is not a number")
    return as_matrix(rows)


def _check_same_shape(M: np.ndarray, N: np.ndarray) -> None:
    if M.shape != N.shape:
        raise ValueError(f"dimension mismatch: {M.shape} vs {N.shape}")


def sym_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def skew_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - M.T)


def dev_part(M: np.ndarray) -> np.ndarray:
    """Trace-free part ``M - tr(M)/n * Id``."""
    n = M.shape[0]
    return M - (np.trace(M) / n) * np.eye(n)


def frob_inner(M: np.ndarray, N: np.ndarray) -> float:
    _check_same_shape(M, N)
    return float(np.sum(M * N))


def iso_inner(p: MetricParams, M: np.ndarray, N: np.ndarray) -> float:
    """Isotropic inner product weighting dev-sym, skew and trace parts by mu, mu_c, kappa/n."""
    _check_same_shape(M, N)
    n = M.shape[0]
    dev_term = frob_inner(dev_part(sym_part(M)), dev_part(sym_part(N)))
    skew_term = frob_inner(skew_part(M), skew_part(N))
    return p.mu * dev_term + p.mu_c * skew_term + (p.kappa / n) * np.trace(M) * np.trace(N)


def iso_norm(p: MetricParams, M: np.ndarray) -> float:
    # clamp tiny negative round-off before the square root
    return math.sqrt(max(iso_inner(p, M, M), 0.0))


def rcond(A: np.ndarray) -> float:
    """Reciprocal 1-norm condition number, ``1 / (|A|_1 |A^-1|_1)``; 0 for singular A."""
    norm = np.linalg.norm(A, 1)
    if norm == 0.0:
        return 0.0
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return 0.0
    if not np.all(np.isfinite(inv)):
        return 0.0
    return 1.0 / (norm * np.linalg.norm(inv, 1))


def inverse(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    """LU-based inverse that refuses numerically singular input."""
    if rcond(A) < RCOND_MIN:
        raise SingularMatrixError(f"{name} is singular or too ill-conditioned to invert")
    return np.linalg.inv(A)


def metric_at(p: MetricParams, A: np.ndarray, M: np.ndarray, N: np.ndarray) -> float:
    """Left-invariant metric ``g_A(M, N) = <A^-1 M, A^-1 N>``."""
    _check_same_shape(A, M)
    _check_same_shape(M, N)
    A_inv = inverse(A, "base point")
    return iso_inner(p, A_inv @ M, A_inv @ N)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    _check_same_shape(A, B)
    return A @ B - B @ A


def _minor(M: np.ndarray, i: int, j: int) -> np.ndarray:
    return np.delete(np.delete(M, i, axis=0), j, axis=1)


def cofactor(M: np.ndarray) -> np.ndarray:
    """Cofactor matrix, so that ``cofactor(M).T @ M == det(M) * Id``.

    Small matrices use explicit minors.  Larger ones go through an SVD
    ``M = U diag(s) V^T``, which gives ``Cof M = det(U V^T) U diag(prod_{j!=i} s_j) V^T``
    and stays well defined for singular M.
    """
    n = M.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n <= 3:
        C = np.empty_like(M)
        for i in range(n):
            for j in range(n):
                C[i, j] = (-1) ** (i + j) * np.linalg.det(_minor(M, i, j))
        return C
    U, s, Vt = np.linalg.svd(M)
    sign = np.linalg.det(U) * np.linalg.det(Vt)
    partial = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    return sign * (U * partial) @ Vt
