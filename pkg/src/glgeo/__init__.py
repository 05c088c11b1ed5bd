"""Geodesics and geodesic distances on GL+(n) under left-invariant, right-O(n)-invariant metrics."""

from .core import (
    MetricParams,
    SingularMatrixError,
    cofactor,
    commutator,
    dev_part,
    frob_inner,
    iso_inner,
    iso_norm,
    metric_at,
    parse_matrix,
    skew_part,
    sym_part,
)
from .distance import (
    DistanceQuery,
    DistanceResult,
    DistanceStatus,
    NoConvergenceError,
    SolverOptions,
    dist_gl1,
    dist_identity_normal,
    dist_to_SOn,
    geodesic_distance,
    solve_log_bvp,
)
from .geodesics import (
    ConservedQuantities,
    DiscreteCurve,
    GeodesicIntegrationError,
    GeodesicSpec,
    conserved_quantities,
    curve_energy,
    curve_length,
    gauss_pairing,
    geodesic_length_closed,
    geodesic_point,
    geodesic_residual,
    geodesic_tangent,
    geodesic_velocity,
    integrate_geodesic_ivp,
    phi,
    reparam_constant_speed,
    sample_geodesic,
)
from .matfun import (
    LogBranch,
    NotNormalError,
    NotPositiveDefiniteError,
    PolarDecomposition,
    dexp,
    is_normal,
    log_psym,
    mat_exp,
    normal_log,
    polar_decompose,
    sqrt_psym,
)

__version__ = "0.1.0"

__all__ = [
    "MetricParams",
    "SingularMatrixError",
    "cofactor",
    "commutator",
    "dev_part",
    "frob_inner",
    "iso_inner",
    "iso_norm",
    "metric_at",
    "parse_matrix",
    "skew_part",
    "sym_part",
    "DistanceQuery",
    "DistanceResult",
    "DistanceStatus",
    "NoConvergenceError",
    "SolverOptions",
    "dist_gl1",
    "dist_identity_normal",
    "dist_to_SOn",
    "geodesic_distance",
    "solve_log_bvp",
    "ConservedQuantities",
    "DiscreteCurve",
    "GeodesicIntegrationError",
    "GeodesicSpec",
    "conserved_quantities",
    "curve_energy",
    "curve_length",
    "gauss_pairing",
    "geodesic_length_closed",
    "geodesic_point",
    "geodesic_residual",
    "geodesic_tangent",
    "geodesic_velocity",
    "integrate_geodesic_ivp",
    "phi",
    "reparam_constant_speed",
    "sample_geodesic",
    "LogBranch",
    "NotNormalError",
    "NotPositiveDefiniteError",
    "PolarDecomposition",
    "dexp",
    "is_normal",
    "log_psym",
    "mat_exp",
    "normal_log",
    "polar_decompose",
    "sqrt_psym",
]
