"""Geodesic distance on GL(n) and its closed-form special cases.

The distance between A and B equals the smallest isotropic norm of a tangent
M whose geodesic from the identity ends at ``A^{-1} B``.  No closed form
exists in general, so :func:`solve_log_bvp` runs a multi-start
Levenberg-Marquardt shooting method and keeps every converged tangent.  The
smallest one is a certified upper bound on the distance and, for nearby
points, the distance itself.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    MetricParams,
    SingularMatrixError,
    as_matrix,
    dev_part,
    iso_norm,
    rcond,
    RCOND_MIN,
    skew_part,
)
from .geodesics import _split, phi
from .matfun import (
    NotNormalError,
    dexp_operator,
    is_normal,
    log_psym,
    mat_exp,
    normal_log,
    polar_decompose,
    sqrt_psym,
)

__all__ = [
    "SolverOptions",
    "DistanceStatus",
    "DistanceResult",
    "DistanceQuery",
    "NoConvergenceError",
    "solve_log_bvp",
    "geodesic_distance",
    "dist_gl1",
    "dist_identity_normal",
    "dist_to_SOn",
]

log = logging.getLogger(__name__)

_DEDUP_DISTANCE = 1e-6
_LAMBDA_MIN, _LAMBDA_MAX = 1e-12, 1e6
# iterates this far out are treated as divergent
_MAX_TANGENT_NORM = 100.0
# random restarts stop after this many in a row fail to improve the best candidate
_RESTART_PATIENCE = 10


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = 1e-10
    max_iterations: int = 200
    max_starts: int = 40
    max_winding: int = 2
    seed: int = 0
    damping_init: float = 1e-3

    def __post_init__(self):
        if not self.residual_tol > 0 or not self.damping_init > 0:
            raise ValueError("residual_tol and damping_init must be positive")
        if self.max_iterations < 1 or self.max_starts < 1 or self.max_winding < 0:
            raise ValueError("iteration and start budgets must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


class DistanceStatus(str, enum.Enum):
    EXACT_CLOSED_FORM = "exact_closed_form"
    SOLVER_CONVERGED = "solver_converged"
    BEST_UPPER_BOUND = "best_upper_bound"
    INFINITE = "infinite"


@dataclass(frozen=True)
class DistanceResult:
    minimizer: Optional[np.ndarray]
    value: float
    residual: float
    starts_used: int
    converged_starts: int
    status: DistanceStatus

    def to_json(self) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else "Infinity",
            "minimizer": None if self.minimizer is None else self.minimizer.tolist(),
            "residual": self.residual,
            "status": self.status.value,
            "starts_used": self.starts_used,
            "converged_starts": self.converged_starts,
        }


class NoConvergenceError(RuntimeError):
    """No start met the residual tolerance.  ``best`` holds the lowest-residual iterate."""

    def __init__(self, message, best, best_residual, starts_used):
        super().__init__(message)
        self.best = best
        self.best_residual = best_residual
        self.starts_used = starts_used


@dataclass
class _SearchState:
    candidates: list = field(default_factory=list)
    starts_used: int = 0
    converged_starts: int = 0
    best_fail: Optional[np.ndarray] = None
    best_fail_residual: float = math.inf


def _basis(n: int) -> np.ndarray:
    return np.eye(n * n).reshape(n * n, n, n)


def _jacobian(M: np.ndarray, p: MetricParams, basis: np.ndarray):
    """Value of ``phi(M)`` and the Jacobian of ``vec(phi)`` w.r.t. ``vec(M)``.

    Column ``k`` is ``dphi(M, E_k)`` for the ``k``-th unit matrix, assembled
    by the product rule from Frechet derivatives of both exponential factors.
    """
    n = M.shape[0]
    m = n * n
    first, second = _split(M, p.omega)
    E1, E2 = mat_exp(first), mat_exp(second)
    d_sym = 0.5 * (basis + basis.transpose(0, 2, 1))
    d_skew = 0.5 * (basis - basis.transpose(0, 2, 1))
    dirs1 = (d_sym - p.omega * d_skew).reshape(m, m).T
    dirs2 = ((1.0 + p.omega) * d_skew).reshape(m, m).T
    D1 = (dexp_operator(first) @ dirs1).T.reshape(m, n, n)
    D2 = (dexp_operator(second) @ dirs2).T.reshape(m, n, n)
    cols = D1 @ E2 + E1 @ D2
    return E1 @ E2, cols.reshape(m, m).T


def _levenberg_marquardt(C, M0, p, opts, basis):
    """Damped Gauss-Newton on ``phi(M) = C``.  Returns ``(M, relative residual)``."""
    c_norm = np.linalg.norm(C)
    M = M0.copy()
    value, J = _jacobian(M, p, basis)
    r = (value - C).ravel()
    cost = np.linalg.norm(r)
    lam = opts.damping_init
    for _ in range(opts.max_iterations):
        if cost <= opts.residual_tol * c_norm:
            break
        H = J.T @ J
        g = J.T @ r
        accepted = False
        while lam <= _LAMBDA_MAX:
            try:
                step = np.linalg.solve(H + lam * np.diag(np.diag(H) + 1e-300), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = M + step.reshape(M.shape)
            if np.linalg.norm(trial) > _MAX_TANGENT_NORM:
                lam *= 10.0
                continue
            trial_r = (phi(trial, p) - C).ravel()
            trial_cost = np.linalg.norm(trial_r)
            if trial_cost < cost:
                M, r, cost = trial, trial_r, trial_cost
                lam = max(lam / 10.0, _LAMBDA_MIN)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        _, J = _jacobian(M, p, basis)
    if cost <= opts.residual_tol * c_norm:
        M, cost = _polish(C, M, cost, p, basis)
    return M, cost / c_norm


def _polish(C, M, cost, p, basis, steps: int = 3):
    """Undamped Gauss-Newton steps from a converged tangent, kept while they help."""
    for _ in range(steps):
        value, J = _jacobian(M, p, basis)
        r = (value - C).ravel()
        try:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        trial = M + step.reshape(M.shape)
        trial_cost = np.linalg.norm(phi(trial, p) - C)
        if not trial_cost < cost:
            break
        M, cost = trial, trial_cost
    return M, cost


def _structured_starts(C: np.ndarray, p: MetricParams, opts: SolverOptions):
    n = C.shape[0]
    yield np.zeros((n, n))
    if is_normal(C, 1e-9):
        try:
            for br in normal_log(C, opts.max_winding):
                yield br.value
        except ValueError:
            pass
    try:
        polar = polar_decompose(C)
        log_stretch = log_psym(polar.stretch)
        left_stretch = log_psym(sqrt_psym(C @ C.T))
        rotation_logs = [br.value for br in normal_log(polar.rotation, opts.max_winding)]
    except (ValueError, SingularMatrixError):
        return
    for W in rotation_logs:
        W = skew_part(W)
        yield log_stretch + W
        yield left_stretch + W / (1.0 + p.omega)


def _add_candidate(state: _SearchState, M: np.ndarray, residual: float) -> None:
    for i, (existing, existing_res) in enumerate(state.candidates):
        if np.linalg.norm(existing - M) <= _DEDUP_DISTANCE:
            if residual < existing_res:
                state.candidates[i] = (M, residual)
            return
    state.candidates.append((M, residual))


def _sort_key(p: MetricParams):
    return lambda cand: (iso_norm(p, cand[0]), tuple(cand[0].ravel()))


def _best_norm(state: _SearchState, p: MetricParams) -> float:
    return min((iso_norm(p, M) for M, _ in state.candidates), default=math.inf)


def _search(C: np.ndarray, p: MetricParams, opts: SolverOptions) -> _SearchState:
    n = C.shape[0]
    basis = _basis(n)
    rng = np.random.default_rng(opts.seed)
    state = _SearchState()
    seen_starts: list[np.ndarray] = []

    def run(start):
        for s in seen_starts:
            if np.linalg.norm(s - start) <= 1e-12 * (1.0 + np.linalg.norm(start)):
                return
        seen_starts.append(start)
        state.starts_used += 1
        M, res = _levenberg_marquardt(C, start, p, opts, basis)
        if res <= opts.residual_tol:
            state.converged_starts += 1
            _add_candidate(state, M, res)
        elif res < state.best_fail_residual:
            state.best_fail, state.best_fail_residual = M, res

    structured_budget = max(1, opts.max_starts // 2)
    for start in _structured_starts(C, p, opts):
        if state.starts_used >= structured_budget:
            break
        run(start)

    # random restarts around the current best tangent, at growing spread
    spreads = (0.05, 0.2, 0.5, 1.0, 2.0)
    i = 0
    stale = 0
    while state.starts_used < opts.max_starts and stale < _RESTART_PATIENCE:
        if state.candidates:
            centre = min(state.candidates, key=_sort_key(p))[0]
        elif state.best_fail is not None:
            centre = state.best_fail
        else:
            centre = np.zeros((n, n))
        best_before = _best_norm(state, p)
        sigma = spreads[i % len(spreads)] * (1.0 + np.linalg.norm(centre))
        G = rng.standard_normal((n, n))
        run(centre + sigma * G / np.linalg.norm(G))
        i += 1
        if state.candidates and _best_norm(state, p) >= best_before - _DEDUP_DISTANCE:
            stale += 1
        else:
            stale = 0
    state.candidates.sort(key=_sort_key(p))
    return state


def _check_positive_det(C: np.ndarray) -> None:
    if np.linalg.det(C) <= 0.0:
        raise ValueError("target must have positive determinant")


def solve_log_bvp(C, p: MetricParams, opts: SolverOptions = SolverOptions()) -> list[np.ndarray]:
    """All distinct tangents ``M`` found with ``phi(M) = C``, ascending in isotropic norm.

    Raises :class:`NoConvergenceError` when no start converged.
    """
    C = as_matrix(C, "C")
    _check_positive_det(C)
    state = _search(C, p, opts)
    if not state.candidates:
        raise NoConvergenceError(
            f"no start reached the residual tolerance (best {state.best_fail_residual:.3g})",
            state.best_fail, state.best_fail_residual, state.starts_used,
        )
    return [M.copy() for M, _ in state.candidates]


def _invertible(A: np.ndarray, name: str) -> None:
    if rcond(A) < RCOND_MIN:
        raise SingularMatrixError(f"{name} is singular")


def _relative_residual(M, C, p) -> float:
    return float(np.linalg.norm(phi(M, p) - C) / np.linalg.norm(C))


def geodesic_distance(A, B, p: MetricParams, opts: SolverOptions = SolverOptions()) -> DistanceResult:
    """Geodesic distance between ``A`` and ``B``, computed as ``d(Id, A^{-1} B)``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    _invertible(A, "A")
    _invertible(B, "B")
    if np.linalg.det(A) * np.linalg.det(B) < 0.0:
        return DistanceResult(None, math.inf, 0.0, 0, 0, DistanceStatus.INFINITE)

    C = np.linalg.solve(A, B)
    n = C.shape[0]
    if n == 1:
        m = math.log(C[0, 0])
        M = np.array([[m]])
        return DistanceResult(
            minimizer=M,
            value=iso_norm(p, M),
            residual=_relative_residual(M, C, p),
            starts_used=0,
            converged_starts=0,
            status=DistanceStatus.EXACT_CLOSED_FORM,
        )

    state = _search(C, p, opts)
    if state.candidates:
        M = state.candidates[0][0]
        status = DistanceStatus.SOLVER_CONVERGED
    else:
        log.warning("no start converged; reporting best iterate (residual %.3g)",
                    state.best_fail_residual)
        M = state.best_fail
        status = DistanceStatus.BEST_UPPER_BOUND
    return DistanceResult(
        minimizer=M,
        value=iso_norm(p, M),
        residual=_relative_residual(M, C, p),
        starts_used=state.starts_used,
        converged_starts=state.converged_starts,
        status=status,
    )


@dataclass(frozen=True)
class DistanceQuery:
    """Endpoints plus metric and solver settings for one distance evaluation."""

    source: np.ndarray
    target: np.ndarray
    params: MetricParams = MetricParams()
    options: SolverOptions = SolverOptions()

    def __post_init__(self):
        object.__setattr__(self, "source", as_matrix(self.source, "source"))
        object.__setattr__(self, "target", as_matrix(self.target, "target"))
        if self.source.shape != self.target.shape:
            raise ValueError("source and target must have the same dimension")
        _invertible(self.source, "source")
        _invertible(self.target, "target")

    def run(self) -> DistanceResult:
        return geodesic_distance(self.source, self.target, self.params, self.options)


def dist_gl1(p_val: float, q_val: float, kappa: float) -> float:
    """Distance between two positive reals, ``sqrt(kappa) |ln(q/p)|``."""
    if not (p_val > 0 and q_val > 0 and kappa > 0):
        raise ValueError("dist_gl1 needs positive p, q and kappa")
    return math.sqrt(kappa) * abs(math.log(q_val / p_val))


def dist_identity_normal(A, p: MetricParams, max_winding: int = 2) -> float:
    """Smallest isotropic norm among the normal logarithms of ``A``.

    This is the distance from the identity when ``A`` is close to it and an
    upper bound otherwise.
    """
    A = as_matrix(A, "A")
    if not is_normal(A, 1e-9):
        raise NotNormalError("A is not normal")
    return min(iso_norm(p, br.value) for br in normal_log(A, max_winding))


def dist_to_SOn(F, mu: float, kappa: float) -> float:
    """Distance from ``F`` to the rotation group: the Hencky norm of ``log sqrt(F^T F)``."""
    F = as_matrix(F, "F")
    if not (mu > 0 and kappa > 0):
        raise ValueError("mu and kappa must be positive")
    if np.linalg.det(F) <= 0.0:
        raise ValueError("dist_to_SOn requires det F > 0")
    n = F.shape[0]
    L = log_psym(polar_decompose(F).stretch)
    dev = dev_part(L)
    return math.sqrt(mu * float(np.sum(dev * dev)) + (kappa / n) * np.trace(L) ** 2)
