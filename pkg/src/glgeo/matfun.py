"""Matrix exponential, its Frechet derivative, and logarithms/square roots.

The exponential uses scaling and squaring with diagonal Pade approximants
(Higham 2005).  Symmetric eigenproblems are solved with a cyclic Jacobi
iteration, which is accurate to a few ulps for the small dense matrices
used throughout the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import as_matrix, inverse, skew_part, sym_part

__all__ = [
    "NotPositiveDefiniteError",
    "NotNormalError",
    "PolarDecomposition",
    "LogBranch",
    "mat_exp",
    "dexp",
    "dexp_operator",
    "sym_eig",
    "log_psym",
    "sqrt_psym",
    "polar_decompose",
    "is_normal",
    "normal_log",
]

DEFAULT_MAX_WINDING = 2


class NotPositiveDefiniteError(ValueError):
    pass


class NotNormalError(ValueError):
    pass


# Pade coefficients b_0..b_m and the 1-norm bounds theta_m below which a
# degree-m approximant is accurate to unit roundoff without scaling.
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(A: np.ndarray, m: int):
    b = _PADE_COEFFS[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    if m < 13:
        powers = [ident, A2]
        for _ in range(2, (m - 1) // 2 + 1):
            powers.append(powers[-1] @ A2)
        U = sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
        V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
        return A @ U, V
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return U, V


def mat_exp(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant."""
    A = np.asarray(M, dtype=float)
    n = A.shape[0]
    if n == 1:
        return np.exp(A)
    norm1 = np.linalg.norm(A, 1)
    if norm1 == 0.0:
        return np.eye(n)
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
    U, V = _pade_uv(A / 2.0**s, 13)
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    return X


def dexp(M: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Frechet derivative of ``exp`` at ``M`` in direction ``T``.

    Read off the upper-right block of ``exp([[M, T], [0, M]])``.
    """
    M = np.asarray(M, dtype=float)
    T = np.asarray(T, dtype=float)
    if M.shape != T.shape:
        raise ValueError(f"dimension mismatch: {M.shape} vs {T.shape}")
    n = M.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = M
    block[n:, n:] = M
    block[:n, n:] = T
    return mat_exp(block)[:n, n:]


def dexp_operator(M: np.ndarray) -> np.ndarray:
    """Matrix ``K`` of the linear map ``T -> dexp(M, T)`` on row-major ``vec(T)``.

    ``K = int_0^1 exp(sM) (x) exp((1-s)M)^T ds``, read off the upper-right
    block of ``exp([[I (x) M^T, I], [0, M (x) I]])``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    ident = np.eye(n)
    m = n * n
    block = np.zeros((2 * m, 2 * m))
    block[:m, :m] = np.kron(ident, M.T)
    block[m:, m:] = np.kron(M, ident)
    block[:m, m:] = np.eye(m)
    return mat_exp(block)[:m, m:]


def sym_eig(S: np.ndarray, max_sweeps: int = 64):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Off-diagonal entries too small to change either diagonal entry in
    floating point are zeroed (Rutishauser's rule); sweeps stop once every
    off-diagonal entry is zero.  Returns ``(w, V)`` with ascending eigenvalues
    ``w`` and orthonormal eigenvectors in the columns of ``V``.
    """
    A = np.array(S, dtype=float)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1 or not np.any(A):
        return np.diag(A).copy(), V
    for sweep in range(max_sweeps):
        if not np.any(A - np.diag(np.diag(A))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app, aqq = A[p, p], A[q, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    A[p, q] = A[q, p] = 0.0
                    continue
                diff = aqq - app
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _psym_eig(P: np.ndarray, name: str):
    P = as_matrix(P, name)
    scale = np.linalg.norm(P)
    if np.linalg.norm(P - P.T) > 1e-10 * scale:
        raise ValueError(f"{name} is not symmetric")
    w, V = sym_eig(P)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"{name} is not positive definite (smallest eigenvalue {w[0]:.6g})"
        )
    return w, V


def log_psym(P: np.ndarray) -> np.ndarray:
    """Principal (symmetric) logarithm of a symmetric positive definite matrix."""
    w, V = _psym_eig(P, "P")
    L = (V * np.log(w)) @ V.T
    return sym_part(L)


def sqrt_psym(P: np.ndarray) -> np.ndarray:
    """Symmetric positive definite square root."""
    w, V = _psym_eig(P, "P")
    R = (V * np.sqrt(w)) @ V.T
    return sym_part(R)


@dataclass(frozen=True)
class PolarDecomposition:
    rotation: np.ndarray
    stretch: np.ndarray


def polar_decompose(F: np.ndarray) -> PolarDecomposition:
    """Right polar decomposition ``F = R U`` with ``R`` in SO(n), ``U`` SPD."""
    F = as_matrix(F, "F")
    if np.linalg.det(F) <= 0.0:
        raise ValueError("polar decomposition requires det F > 0")
    U = sqrt_psym(F.T @ F)
    R = F @ inverse(U, "stretch")
    R = 0.5 * R @ (3.0 * np.eye(F.shape[0]) - R.T @ R)
    return PolarDecomposition(rotation=R, stretch=U)


def is_normal(M: np.ndarray, tol: float = 1e-9) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=float)
    return bool(np.linalg.norm(M @ M.T - M.T @ M) <= tol * np.linalg.norm(M) ** 2)


@dataclass(frozen=True)
class LogBranch:
    value: np.ndarray
    branch_index: tuple


@dataclass(frozen=True)
class _RotationBlock:
    log_radius: float
    angle: float  # principal angle in (-pi, pi]
    v: np.ndarray
    w: np.ndarray


def _orthonormal_complement(B: np.ndarray, drop: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(B) minus the orthonormal columns of ``drop``."""
    P = B @ B.T - drop @ drop.T
    w, V = sym_eig(P)
    keep = B.shape[1] - drop.shape[1]
    return V[:, len(w) - keep:] if keep > 0 else V[:, :0]


def _real_normal_form(A: np.ndarray):
    """Split a normal matrix into real eigen-directions and 2x2 rotation planes.

    Returns ``(reals, blocks)`` where ``reals`` is a list of (eigenvalue, unit
    vector) and ``blocks`` a list of ``(a, b, v, w)`` with ``A v = a v + b w``,
    ``A w = -b v + a w`` and ``b > 0``.
    """
    n = A.shape[0]
    scale = max(np.linalg.norm(A), 1e-300)
    S = sym_part(A)
    K = skew_part(A)
    s, Vs = sym_eig(S)

    clusters = [[0]]
    for i in range(1, n):
        if s[i] - s[clusters[-1][-1]] <= 1e-8 * scale:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    reals, blocks = [], []
    for idx in clusters:
        B = Vs[:, idx]
        while B.shape[1] > 0:
            Kb = B.T @ K @ B
            g, G = sym_eig(-(Kb @ Kb))
            if B.shape[1] < 2 or g[-1] <= (1e-10 * scale) ** 2:
                Ab = sym_part(B.T @ A @ B)
                lam, Q = sym_eig(Ab)
                reals.extend((lam[j], B @ Q[:, j]) for j in range(len(lam)))
                break
            v = B @ G[:, -1]
            v /= np.linalg.norm(v)
            w = K @ v
            w -= (v @ w) * v
            w /= np.linalg.norm(w)
            a = 0.5 * (v @ A @ v + w @ A @ w)
            b = 0.5 * (w @ A @ v - v @ A @ w)
            if b < 0:
                w, b = -w, -b
            blocks.append((a, b, v, w))
            B = _orthonormal_complement(B, np.column_stack([v, w]))
    return reals, blocks


def _group_equal(values, tol):
    """Group sorted (value, payload) pairs whose values agree within ``tol``."""
    groups = []
    for item in sorted(values, key=lambda x: x[0]):
        if groups and abs(item[0] - groups[-1][-1][0]) <= tol:
            groups[-1].append(item)
        else:
            groups.append([item])
    return groups


def normal_log(A: np.ndarray, max_winding: int = DEFAULT_MAX_WINDING) -> list[LogBranch]:
    """Enumerate real normal logarithms of a normal matrix with positive determinant.

    Every 2x2 rotation plane of ``A`` contributes angles ``theta + 2 pi k``
    with ``|k| <= max_winding``.  Pairs of equal positive eigenvalues are
    treated as rotation planes of angle 0 and pairs of equal negative
    eigenvalues as rotation planes of angle pi.  Branches are returned in
    ascending Frobenius norm.
    """
    A = as_matrix(A, "A")
    if max_winding < 0:
        raise ValueError("max_winding must be non-negative")
    if not is_normal(A, 1e-9):
        raise NotNormalError("A is not normal")
    if np.linalg.det(A) <= 0.0:
        raise ValueError("normal_log requires det A > 0")
    scale = np.linalg.norm(A)

    reals, planes = _real_normal_form(A)
    singles: list[tuple[float, np.ndarray]] = []
    blocks: list[_RotationBlock] = [
        _RotationBlock(0.5 * math.log(a * a + b * b), math.atan2(b, a), v, w)
        for a, b, v, w in planes
    ]
    for group in _group_equal(reals, 1e-8 * scale):
        lam = group[0][0]
        if lam < 0 and len(group) % 2:
            raise ValueError(
                f"negative eigenvalue {lam:.6g} has odd multiplicity; no real logarithm exists"
            )
        while len(group) >= 2:
            (l1, v), (l2, w) = group.pop(0), group.pop(0)
            mag = 0.5 * (abs(l1) + abs(l2))
            blocks.append(_RotationBlock(math.log(mag), 0.0 if lam > 0 else math.pi, v, w))
        singles.extend((math.log(l), u) for l, u in group)

    n = A.shape[0]
    base = np.zeros((n, n))
    for log_l, u in singles:
        base += log_l * np.outer(u, u)
    for blk in blocks:
        base += blk.log_radius * (np.outer(blk.v, blk.v) + np.outer(blk.w, blk.w))
    gens = [np.outer(blk.w, blk.v) - np.outer(blk.v, blk.w) for blk in blocks]

    branches = []
    for ks in itertools.product(range(-max_winding, max_winding + 1), repeat=len(blocks)):
        L = base.copy()
        for k, blk, gen in zip(ks, blocks, gens):
            L += (blk.angle + 2.0 * math.pi * k) * gen
        branches.append(LogBranch(value=L, branch_index=tuple(ks)))
    branches.sort(key=lambda br: (round(float(np.linalg.norm(br.value)), 12),
                                  tuple(abs(k) for k in br.branch_index), br.branch_index))
    return branches
