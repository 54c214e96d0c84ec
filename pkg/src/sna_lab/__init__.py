"""Numerical lab for strange non-chaotic attractors in quasiperiodically forced interval maps.

Submodules: ``torus_dynamics`` (rotation and fiber maps), ``boundary_lines``,
``bifurcation``, ``multiscale``, ``dimension``, ``suite`` (property checks) and
``cli``.
"""

from .bifurcation import (BetaCBracket, ClassifyResult, LyapunovEstimate, classify, find_beta_c,
                          lyapunov, minimality_probe, pinched_points)
from .boundary_lines import (CurveSample, GapProfile, gap_profile, grid, local_lipschitz,
                             lower_line, monotonicity_defect, stabilization_profile, upper_line)
from .dimension import (PointCloud, ScalingFit, box_dimension, information_dimension,
                        pointwise_dimension)
from .errors import (BudgetInconclusive, ConfigError, DegenerateMaskError, DivergentSeries,
                     DomainError, EmptyRegion, InsufficientScales, InverseDomainError,
                     MismatchError, SnaLabError)
from .torus_dynamics import (AffineFamily, ArctanFamily, InverseSystem, QpfMap, Rotation,
                             TorusPoint, iterate, rotate, torus_distance, wrap)

__version__ = "0.1.0"

__all__ = [
    "AffineFamily", "ArctanFamily", "BetaCBracket", "BudgetInconclusive", "ClassifyResult",
    "ConfigError", "CurveSample", "DegenerateMaskError", "DivergentSeries", "DomainError",
    "EmptyRegion", "GapProfile", "InsufficientScales", "InverseDomainError", "InverseSystem",
    "LyapunovEstimate", "MismatchError", "PointCloud", "QpfMap", "Rotation", "ScalingFit",
    "SnaLabError", "TorusPoint", "box_dimension", "classify", "find_beta_c", "gap_profile",
    "grid", "information_dimension", "iterate", "local_lipschitz", "lower_line", "lyapunov",
    "minimality_probe", "monotonicity_defect", "pinched_points", "pointwise_dimension",
    "rotate", "stabilization_profile", "torus_distance", "upper_line", "wrap",
]
