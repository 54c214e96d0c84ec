"""One-call certificate: fitted constants, critical regions and condition verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DivergentSeries
from ..torus_dynamics import QpfMap, Rotation
from .conditions import ConditionResult, check_E, check_F1, check_F2
from .constants import (FitDiagnostics, Infeasible, LipschitzBound, MultiscaleConstants,
                        SearchGrid, fit_constants, lipschitz_bound)
from .regions import CriticalRegion, RegionFamily, arc_contains_arc, build_regions

__all__ = ["Certificate", "certify"]


@dataclass
class Certificate:
    constants: MultiscaleConstants
    diagnostics: FitDiagnostics
    regions: list[CriticalRegion]
    stop_reason: str
    conditions: list[ConditionResult] = field(default_factory=list)
    nested: dict[int, bool] = field(default_factory=dict)
    lipschitz: list[LipschitzBound] = field(default_factory=list)
    lipschitz_error: str | None = None

    @property
    def depth(self) -> int:
        return max((r.level for r in self.regions), default=-1)

    def condition(self, name: str, level: int) -> ConditionResult | None:
        for c in self.conditions:
            if c.name == name and c.level == level:
                return c
        return None

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions) and all(self.nested.values())

    def to_dict(self) -> dict:
        k = self.constants
        return {
            "constants": k.to_dict(),
            "diagnostics": vars(self.diagnostics),
            "truncation_depth": self.depth,
            "stop_reason": self.stop_reason,
            "regions": [r.to_dict(k.eps(r.level)) for r in self.regions],
            "conditions": [c.to_dict() for c in self.conditions],
            "nested": {str(j): v for j, v in self.nested.items()},
            "lipschitz": [vars(b) for b in self.lipschitz],
            "lipschitz_error": self.lipschitz_error,
            "all_hold": self.all_hold,
        }


def certify(fmap: QpfMap, rotation: Rotation, grid: SearchGrid | None = None, m: int = 4096,
            max_level: int = 2) -> Certificate | Infeasible:
    """Fit constants, build ``I_0 .. I_max_level`` and evaluate every condition.

    ``F1`` and ``E`` are checked at each computed level, ``F2`` at levels
    ``j >= 1`` against ``V_{j-1}, W_{j-1}``, and nesting between each pair.
    """
    fit = fit_constants(fmap, grid)
    if isinstance(fit, Infeasible):
        return fit
    constants, diag = fit
    regions, reason = build_regions(fmap, rotation, constants, max_level=max_level, m=m)
    cert = Certificate(constants, diag, regions, reason)
    for r in regions:
        cert.conditions.append(check_F1(r, rotation, constants))
        if r.level >= 1:
            fam = RegionFamily.build(regions, rotation, constants, n=r.level - 1)
            cert.conditions.append(check_F2(r, fam, rotation, constants))
        cert.conditions.append(check_E(r, constants))
    for outer, inner in zip(regions, regions[1:]):
        ok = inner.empty or (not outer.empty and arc_contains_arc(outer.arc, inner.arc, 1e-12))
        cert.nested[inner.level] = bool(ok)
    try:
        cert.lipschitz = [lipschitz_bound(j, constants) for j in range(1, max(cert.depth, 1) + 1)]
    except DivergentSeries as exc:
        cert.lipschitz_error = str(exc)
    return cert
