"""Recurrence and size conditions on the critical regions, and the Omega sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..torus_dynamics import Rotation, frac_multiple
from .constants import MultiscaleConstants
from .regions import CriticalRegion, RegionFamily, arc_distance, arcs_intersect

__all__ = [
    "ConditionResult",
    "check_F1",
    "check_F2",
    "check_E",
    "omega_mask",
    "omega_measure_bound",
]


F1_CHUNK = 1 << 20


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    name: str
    level: int
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {"name": self.name, "level": self.level, "holds": self.holds, "witness": self.witness}


def check_F1(I_j: CriticalRegion, rotation: Rotation, constants: MultiscaleConstants,
             k_max: int | None = None, eps: float | None = None) -> ConditionResult:
    """``d(I_j, I_j + k omega) > eps_j`` for every ``k = 1 .. 2 K_j M_j``.

    The witness names the first violating ``k`` (or the closest one when the
    condition holds) and the distance there.
    """
    j = I_j.level
    if I_j.empty:
        return ConditionResult(False, "F1", j, {"reason": "empty region"})
    if k_max is None:
        k_max = 2 * constants.K(j) * constants.M_at(j)
    if eps is None:
        eps = constants.eps(j)
    best = (np.inf, 0)
    for start in range(1, k_max + 1, F1_CHUNK):
        ks = np.arange(start, min(k_max, start + F1_CHUNK - 1) + 1, dtype=np.int64)
        shift = frac_multiple(ks, rotation)
        # equal-length arcs: the gap is the circle distance of the shift minus the length
        dist = np.maximum(0.0, np.minimum(shift, 1.0 - shift) - I_j.length)
        if I_j.arc.full:
            dist[:] = 0.0
        bad = np.flatnonzero(dist <= eps)
        if bad.size:
            return ConditionResult(False, "F1", j, {"k": int(ks[bad[0]]), "distance": float(dist[bad[0]]),
                                                    "eps": eps, "k_max": int(k_max)})
        i = int(np.argmin(dist))
        if dist[i] < best[0]:
            best = (float(dist[i]), int(ks[i]))
    return ConditionResult(True, "F1", j, {"k": best[1], "distance": best[0], "eps": eps,
                                           "k_max": int(k_max)})


def arc_distance_direct(I_j: CriticalRegion, k: int, rotation: Rotation) -> float:
    """``d(I_j, I_j + k omega)`` via the general arc distance (cross-check of F1)."""
    return arc_distance(I_j.arc, I_j.shifted(k, rotation))


def check_F2(I_j: CriticalRegion, region_family: RegionFamily, rotation: Rotation,
             constants: MultiscaleConstants) -> ConditionResult:
    """``(I_j - (M_j-1) omega  u  I_j + (M_j+1) omega)`` misses ``V_{j-1} u W_{j-1}``."""
    j = I_j.level
    if I_j.empty:
        return ConditionResult(False, "F2", j, {"reason": "empty region"})
    Mj = constants.M_at(j)
    probes = [(-(Mj - 1), I_j.shifted(-(Mj - 1), rotation)), (Mj + 1, I_j.shifted(Mj + 1, rotation))]
    for name, arcs in (("V", region_family.V), ("W", region_family.W)):
        for level, l, arc in arcs:
            for shift, probe in probes:
                if arcs_intersect(probe, arc):
                    return ConditionResult(False, "F2", j, {
                        "probe_shift": shift, "probe": [probe.lo, probe.hi],
                        "set": name, "level": level, "shift": l, "arc": [arc.lo, arc.hi],
                    })
    return ConditionResult(True, "F2", j, {"arcs_checked": len(region_family.V) + len(region_family.W)})


def check_E(I_n: CriticalRegion, constants: MultiscaleConstants) -> ConditionResult:
    """``|I_n| < eps_n``; an empty region passes."""
    eps = constants.eps(I_n.level)
    return ConditionResult(I_n.empty or I_n.length < eps, "E", I_n.level,
                           {"length": I_n.length, "eps": eps})


# ---------------------------------------------------------------------------
# Omega sets
# ---------------------------------------------------------------------------


def omega_mask(j: int, n: int, regions, rotation: Rotation, constants: MultiscaleConstants,
               m: int) -> np.ndarray:
    """Grid points avoiding every ``I_k + l omega``, ``k >= j``, ``M_{k-1} <= l <= min(n, 2 K_k M_k)``.

    Only the computed levels in ``regions`` contribute; deeper levels are
    truncated away.
    """
    thetas = np.arange(m) / m
    keep = np.ones(m, dtype=bool)
    for r in regions:
        k = r.level
        if k < j or r.empty:
            continue
        l_lo = constants.M_at(k - 1)
        l_hi = min(n, 2 * constants.K(k) * constants.M_at(k))
        for l in range(l_lo, l_hi + 1):
            keep &= ~r.arc.shifted(l, rotation).contains(thetas)
    return keep


def union_bound(j: int, regions, constants: MultiscaleConstants, n: int | None = None) -> float:
    """``sum_k (#shifts) |I_k|`` over the computed levels ``k >= j``."""
    total = 0.0
    for r in regions:
        if r.level < j or r.empty:
            continue
        l_lo = constants.M_at(r.level - 1)
        l_hi = 2 * constants.K(r.level) * constants.M_at(r.level)
        if n is not None:
            l_hi = min(n, l_hi)
        total += max(0, l_hi - l_lo + 1) * r.length
    return total


def _log_term(k: int, constants: MultiscaleConstants) -> float:
    return math.log(2 * constants.K(k)) + math.log(constants.M_at(k)) + constants.log_eps(k)


def omega_measure_bound(j: int, constants: MultiscaleConstants, k_max: int) -> float:
    """``sum_{k=j}^{k_max} 2 K_k M_k eps_k`` plus a bound for ``k > k_max``.

    Past ``k_max`` terms are added one by one until two successive ratios are
    below 1/2; the rest is then bounded by the last term (geometric ratio 1/2).
    """
    logs = [_log_term(k, constants) for k in range(j, k_max + 1)]
    head = float(np.exp(logs).sum()) if logs else 0.0
    tail = 0.0
    k = max(j, k_max + 1)
    prev = _log_term(k, constants)
    tail += math.exp(prev)
    small = 0
    while small < 2:
        k += 1
        cur = _log_term(k, constants)
        tail += math.exp(cur)
        small = small + 1 if cur - prev < -math.log(2) else 0
        prev = cur
        if cur < -745:
            break
    tail += math.exp(prev)
    return head + tail
