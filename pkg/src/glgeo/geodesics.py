"""Geodesic curves on GL+(n) for the left-invariant, right-O(n)-invariant metric.

Geodesics through ``A`` with initial tangent ``A M`` are given in closed form by

    X(t) = A exp(t (sym M - omega skew M)) exp(t (1 + omega) skew M),

with ``omega = mu_c / mu``.  The module also carries an RK4 integrator for
the underlying ODE, length/energy quadrature for sampled curves and a
finite-difference residual of the geodesic equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    MetricParams,
    SingularMatrixError,
    as_matrix,
    cofactor,
    inverse,
    iso_norm,
    matrix_from_rows,
    metric_at,
    skew_part,
    sym_part,
)
from .matfun import dexp, mat_exp

__all__ = [
    "GeodesicSpec",
    "DiscreteCurve",
    "ConservedQuantities",
    "GeodesicIntegrationError",
    "phi",
    "dphi",
    "geodesic_point",
    "geodesic_velocity",
    "geodesic_tangent",
    "geodesic_length_closed",
    "sample_geodesic",
    "integrate_geodesic_ivp",
    "curve_length",
    "curve_energy",
    "reparam_constant_speed",
    "geodesic_residual",
    "conserved_quantities",
    "gauss_pairing",
]


class GeodesicIntegrationError(RuntimeError):
    """The discrete flow left GL+(n); the step size is too large."""


@dataclass(frozen=True)
class GeodesicSpec:
    base: np.ndarray
    tangent: np.ndarray
    params: MetricParams

    def __post_init__(self):
        base = as_matrix(self.base, "base")
        tangent = as_matrix(self.tangent, "tangent")
        if base.shape != tangent.shape:
            raise ValueError("base and tangent must have the same dimension")
        if np.linalg.det(base) <= 0.0:
            raise ValueError("base point must have positive determinant")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "tangent", tangent)


@dataclass(frozen=True)
class DiscreteCurve:
    """Sampled curve ``t_i -> X_i`` in GL+(n).

    ``tangents`` optionally holds ``U_i = X_i^{-1} dX/dt`` when the producer
    knows it exactly (closed form or integrator state).
    """

    times: np.ndarray
    points: np.ndarray
    tangents: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("a curve needs at least two sample times")
        if not np.all(np.diff(times) > 0):
            raise ValueError("sample times must be strictly increasing")
        if points.ndim != 3 or points.shape[0] != len(times) or points.shape[1] != points.shape[2]:
            raise ValueError("points must be an array of square matrices, one per time")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(points))):
            raise ValueError("curve has non-finite values")
        if np.any(np.linalg.det(points) <= 0.0):
            raise ValueError("every curve point must have positive determinant")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        if self.tangents is not None:
            object.__setattr__(self, "tangents", np.asarray(self.tangents, dtype=float))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.times)


class ConservedQuantities(NamedTuple):
    norm: float
    trace: float
    det: float
    trace_cofactor: float


def _split(M: np.ndarray, omega: float):
    K = skew_part(M)
    return sym_part(M) - omega * K, (1.0 + omega) * K


def phi(M: np.ndarray, p: MetricParams) -> np.ndarray:
    """Geodesic exponential at the identity: endpoint at t=1 of the geodesic with tangent M."""
    first, second = _split(M, p.omega)
    return mat_exp(first) @ mat_exp(second)


def dphi(M: np.ndarray, T: np.ndarray, p: MetricParams) -> np.ndarray:
    """Directional derivative of :func:`phi` at ``M`` along ``T``."""
    first, second = _split(M, p.omega)
    d_first, d_second = _split(T, p.omega)
    return dexp(first, d_first) @ mat_exp(second) + mat_exp(first) @ dexp(second, d_second)


def _factors(spec: GeodesicSpec, t: float):
    first, second = _split(spec.tangent, spec.params.omega)
    return mat_exp(t * first), mat_exp(t * second)


def geodesic_point(spec: GeodesicSpec, t: float) -> np.ndarray:
    E, Q = _factors(spec, t)
    return spec.base @ E @ Q


def geodesic_velocity(spec: GeodesicSpec, t: float) -> np.ndarray:
    E, Q = _factors(spec, t)
    return spec.base @ E @ spec.tangent @ Q


def geodesic_tangent(spec: GeodesicSpec, t: float) -> np.ndarray:
    """Body-frame velocity ``X^{-1} dX/dt = Q(t)^T M Q(t)``."""
    _, Q = _factors(spec, t)
    return Q.T @ spec.tangent @ Q


def geodesic_length_closed(spec: GeodesicSpec, t0: float) -> float:
    if t0 < 0:
        raise ValueError("t0 must be non-negative")
    return t0 * iso_norm(spec.params, spec.tangent)


def sample_geodesic(spec: GeodesicSpec, times) -> DiscreteCurve:
    times = np.asarray(times, dtype=float)
    points = np.array([geodesic_point(spec, t) for t in times])
    tangents = np.array([geodesic_tangent(spec, t) for t in times])
    return DiscreteCurve(times, points, tangents)


def integrate_geodesic_ivp(A, M0, p: MetricParams, t_end: float, steps: int) -> DiscreteCurve:
    """Classical RK4 on ``X' = X U``, ``U' = (1 + omega)/2 (U^T U - U U^T)``."""
    A = as_matrix(A, "A")
    M0 = as_matrix(M0, "M0")
    if A.shape != M0.shape:
        raise ValueError("A and M0 must have the same dimension")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if np.linalg.det(A) <= 0.0:
        raise ValueError("initial point must have positive determinant")
    c = 0.5 * (1.0 + p.omega)
    h = t_end / steps

    def rhs(X, U):
        if np.linalg.det(X) <= 0.0:
            raise GeodesicIntegrationError(
                "integrated curve left GL+(n); reduce the step size"
            )
        return X @ U, c * (U.T @ U - U @ U.T)

    X, U = A.copy(), M0.copy()
    xs, us = [X], [U]
    for _ in range(steps):
        k1x, k1u = rhs(X, U)
        k2x, k2u = rhs(X + 0.5 * h * k1x, U + 0.5 * h * k1u)
        k3x, k3u = rhs(X + 0.5 * h * k2x, U + 0.5 * h * k2u)
        k4x, k4u = rhs(X + h * k3x, U + h * k3u)
        X = X + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        U = U + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        if np.linalg.det(X) <= 0.0:
            raise GeodesicIntegrationError("integrated curve left GL+(n); reduce the step size")
        xs.append(X)
        us.append(U)
    times = np.linspace(0.0, t_end, steps + 1)
    return DiscreteCurve(times, np.array(xs), np.array(us))


def _segment_speeds(c: DiscreteCurve, p: MetricParams) -> np.ndarray:
    """Speed on each segment: difference quotient seen from the segment midpoint."""
    dt = np.diff(c.times)
    speeds = np.empty(len(dt))
    for i, h in enumerate(dt):
        mid = 0.5 * (c.points[i] + c.points[i + 1])
        try:
            mid_inv = inverse(mid, f"curve midpoint {i}")
        except SingularMatrixError:
            raise SingularMatrixError(f"curve passes through a singular point near sample {i}") from None
        V = (c.points[i + 1] - c.points[i]) / h
        speeds[i] = iso_norm(p, mid_inv @ V)
    return speeds


def curve_length(c: DiscreteCurve, p: MetricParams) -> float:
    return float(np.sum(_segment_speeds(c, p) * np.diff(c.times)))


def curve_energy(c: DiscreteCurve, p: MetricParams) -> float:
    return float(np.sum(_segment_speeds(c, p) ** 2 * np.diff(c.times)))


def reparam_constant_speed(c: DiscreteCurve, p: MetricParams) -> DiscreteCurve:
    """Resample ``c`` on a uniform time grid so that arc length grows linearly in time.

    New points are linear interpolants between neighbouring samples at the
    parameter where the cumulative length reaches its uniform target.
    """
    seg = _segment_speeds(c, p) * np.diff(c.times)
    total = float(np.sum(seg))
    if total <= 0.0 or not math.isfinite(total):
        raise ValueError("cannot reparametrize a curve of zero length")
    if np.any(seg <= 1e-14 * total):
        raise ValueError("curve has a stationary segment; it is not regular")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    cum[-1] = total
    m = len(c.times)
    targets = np.linspace(0.0, total, m)
    new_points = np.empty_like(c.points)
    for j, s in enumerate(targets):
        k = min(int(np.searchsorted(cum, s, side="right")) - 1, m - 2)
        alpha = (s - cum[k]) / seg[k]
        new_points[j] = (1.0 - alpha) * c.points[k] + alpha * c.points[k + 1]
    new_points[0] = c.points[0]
    new_points[-1] = c.points[-1]
    if np.any(np.linalg.det(new_points) <= 0.0):
        raise ValueError("resampled curve left GL+(n); refine the input sampling")
    times = np.linspace(c.times[0], c.times[-1], m)
    return DiscreteCurve(times, new_points)


def _check_uniform(times: np.ndarray) -> float:
    dt = np.diff(times)
    h = (times[-1] - times[0]) / len(dt)
    if np.max(np.abs(dt - h)) > 1e-9 * h:
        raise ValueError("geodesic residual requires a uniform time grid")
    return h


def finite_difference_tangents(c: DiscreteCurve):
    """Central-difference ``U = X^{-1} X'`` and ``U' = X^{-1} X'' - U^2`` at interior samples."""
    if len(c) < 3:
        raise ValueError("need at least three samples")
    h = _check_uniform(c.times)
    X = c.points
    us, udots = [], []
    for i in range(1, len(c) - 1):
        X_inv = inverse(X[i], f"sample {i}")
        U = X_inv @ (X[i + 1] - X[i - 1]) / (2.0 * h)
        acc = X_inv @ (X[i + 1] - 2.0 * X[i] + X[i - 1]) / (h * h)
        us.append(U)
        udots.append(acc - U @ U)
    return np.array(us), np.array(udots)


def geodesic_residual(c: DiscreteCurve, p: MetricParams) -> float:
    """Largest Frobenius defect of the geodesic equation over interior samples."""
    us, udots = finite_difference_tangents(c)
    coeff = 0.5 * (1.0 + p.omega)
    worst = 0.0
    for U, Udot in zip(us, udots):
        worst = max(worst, float(np.linalg.norm(Udot - coeff * (U.T @ U - U @ U.T))))
    return worst


def conserved_quantities(U: np.ndarray, p: MetricParams) -> ConservedQuantities:
    U = np.asarray(U, dtype=float)
    return ConservedQuantities(
        norm=iso_norm(p, U),
        trace=float(np.trace(U)),
        det=float(np.linalg.det(U)),
        trace_cofactor=float(np.trace(cofactor(U))),
    )


def gauss_pairing(p: MetricParams, A: np.ndarray, M: np.ndarray, T: np.ndarray) -> float:
    """``g_{Phi_A(M)}(DPhi_A[M].M, DPhi_A[M].T)``; equals ``iso_inner(p, M, T)``."""
    A = as_matrix(A, "A")
    if np.linalg.det(A) <= 0.0:
        raise ValueError("base point must have positive determinant")
    X = A @ phi(M, p)
    return metric_at(p, X, A @ dphi(M, M, p), A @ dphi(M, T, p))


def curve_to_json(c: DiscreteCurve) -> dict:
    return {"times": c.times.tolist(), "points": c.points.tolist()}


def curve_from_json(obj) -> DiscreteCurve:
    if not isinstance(obj, dict) or "times" not in obj or "points" not in obj:
        raise ValueError('curve JSON must be an object with "times" and "points"')
    times = obj["times"]
    if not isinstance(times, list) or not all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in times
    ):
        raise ValueError("times must be an array of numbers")
    if not isinstance(obj["points"], list):
        raise ValueError("points must be an array of matrices")
    points = [matrix_from_rows(P) for P in obj["points"]]
    if len({P.shape for P in points}) > 1:
        raise ValueError("all curve points must share one dimension")
    return DiscreteCurve(np.array(times, dtype=float), np.array(points))
