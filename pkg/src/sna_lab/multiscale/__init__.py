"""Multiscale critical-region construction and its combinatorial checks."""

from .conditions import (ConditionResult, check_E, check_F1, check_F2, omega_mask,
                         omega_measure_bound, union_bound)
from .constants import (FitDiagnostics, Infeasible, LipschitzBound, MultiscaleConstants,
                        SearchGrid, b_limit, fit_constants, lipschitz_bound)
from .counters import (check_B, contraction_flags, contraction_bound, count_P, count_Q, i_index, p_index,
                       p_index_profile)
from .report import Certificate, certify
from .regions import (Arc, CriticalRegion, RegionFamily, arc_contains_arc, arc_distance,
                      arcs_intersect, build_regions, compute_I0, refine_critical_region)

__all__ = [
    "Arc", "Certificate", "certify", "CriticalRegion", "RegionFamily", "ConditionResult", "FitDiagnostics", "Infeasible",
    "LipschitzBound", "MultiscaleConstants", "SearchGrid",
    "arc_contains_arc", "arc_distance", "arcs_intersect", "b_limit", "build_regions",
    "check_B", "check_E", "contraction_flags", "check_F1", "check_F2", "compute_I0", "contraction_bound", "count_P",
    "count_Q", "fit_constants", "i_index", "lipschitz_bound", "omega_mask", "omega_measure_bound",
    "p_index", "p_index_profile", "refine_critical_region", "union_bound",
]
