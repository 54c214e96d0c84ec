"""Property checks shared by the ``verify`` command and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary_lines import local_lipschitz, monotonicity_defect, upper_line
from .multiscale import (MultiscaleConstants, RegionFamily, check_B, constants as _c, contraction_bound,
                         i_index, omega_mask, p_index_profile)
from .multiscale.counters import contraction_flags
from .torus_dynamics import QpfMap, Rotation, iterate, rotate

__all__ = [
    "CheckResult",
    "STABILIZATION_FLOOR",
    "check_monotonicity",
    "check_recurrence",
    "check_inverse_residual",
    "check_orbit_roundtrip",
    "check_contraction_count",
    "check_index_bound",
    "check_stabilization",
    "check_lipschitz",
]

# rounding noise between consecutive lines once the true difference underflows
STABILIZATION_FLOOR = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    vacuous: bool = False
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "vacuous": self.vacuous,
                "detail": self.detail}


def check_monotonicity(fmap: QpfMap, rotation: Rotation, N: int, m: int,
                       slack: float = 1e-12, workers=None) -> CheckResult:
    up = monotonicity_defect(fmap, rotation, N, m, "upper", workers)
    lo = monotonicity_defect(fmap, rotation, N, m, "lower", workers)
    return CheckResult("monotonicity", up <= slack and lo <= slack,
                       detail={"upper_defect": up, "lower_defect": lo, "slack": slack, "N": N, "m": m})


def check_recurrence(fmap: QpfMap, rotation: Rotation, n: int, m: int) -> CheckResult:
    """Each stored step reproduces the next one bitwise."""
    curve = upper_line(fmap, rotation, n, m, keep_history=True)
    h = curve.history
    bad = 0
    for k in range(n):
        bad += int(np.count_nonzero(fmap.apply(h.bases[k], h.values[k]) != h.values[k + 1]))
    bad += int(np.count_nonzero(h.values[n] != curve.values))
    return CheckResult("recurrence", bad == 0, detail={"mismatches": bad, "n": n, "m": m})


def check_inverse_residual(fmap: QpfMap, samples: int = 100_000, seed: int = 0,
                           tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    th = rng.random(samples)
    x = fmap.x_lo + (fmap.x_hi - fmap.x_lo) * rng.random(samples)
    res = float(np.max(np.abs(fmap.apply_inverse(th, fmap.apply(th, x)) - x)))
    return CheckResult("inverse_residual", res <= tol,
                       detail={"max_residual": res, "tol": tol, "samples": samples})


def check_orbit_roundtrip(fmap: QpfMap, rotation: Rotation, length: int = 5, samples: int = 1000,
                          seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """Forward ``length`` steps from random seeds in ``[0,1]`` fibers, then back."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for th0, x0 in zip(rng.random(samples), rng.random(samples)):
        ths, xs = iterate(fmap, rotation, th0, x0, length)
        _, back = iterate(fmap, rotation, ths[-1], xs[-1], -length)
        worst = max(worst, float(abs(back[-1] - x0)))
    return CheckResult("orbit_roundtrip", bool(worst <= tol),
                       detail={"max_residual": worst, "tol": tol, "length": length, "samples": samples})


def _P_profile(fmap, rotation, theta0, x, n, constants, I0):
    flags = contraction_flags(fmap, rotation, theta0, x, n, constants, I0)
    # P_k^n for k = 0 .. n-1
    return np.cumsum(flags[::-1])[::-1]


def check_contraction_count(fmap: QpfMap, rotation: Rotation, regions, constants: MultiscaleConstants,
                           n: int = 1000, samples: int = 200, seed: int = 0,
                           max_draws: int | None = None) -> CheckResult:
    """Contraction-count lower bound on samples that satisfy the ``B1`` precondition.

    ``theta`` is uniform and ``x`` uniform on ``C``; a draw is kept when
    ``(theta - n omega, x)`` satisfies ``B1`` at level ``p_0^n(theta) + 1``.
    """
    rng = np.random.default_rng(seed)
    max_draws = 20 * samples if max_draws is None else max_draws
    I0 = regions[0]
    families = {lvl: RegionFamily.build(regions, rotation, constants, n=lvl)
                for lvl in range(-1, len(regions) + 1)}
    kept = draws = violations = 0
    first = None
    while kept < samples and draws < max_draws:
        draws += 1
        theta = float(rng.random())
        x = constants.c + (1.0 - constants.c) * float(rng.random())
        prof = p_index_profile(theta, n, regions, rotation, constants)
        theta0 = float(rotate(theta, rotation, -n))
        level = int(prof[0]) + 1
        if not check_B(theta0, x, level, regions, constants, "B1", rotation, families[level - 1]):
            continue
        kept += 1
        P = _P_profile(fmap, rotation, theta0, x, n, constants, I0)
        for k in range(n):
            if P[k] < contraction_bound(int(prof[k]), n, k, constants):
                violations += 1
                if first is None:
                    first = {"theta": theta, "x": x, "k": k, "P": int(P[k]),
                             "bound": contraction_bound(int(prof[k]), n, k, constants)}
                break
    return CheckResult("contraction_count", kept > 0 and violations == 0, vacuous=kept == 0,
                       detail={"retained": kept, "draws": draws, "violating_samples": violations,
                               "first_violation": first, "n": n})


def _omega_samples(j, n, regions, rotation, constants, m, samples, seed):
    mask = omega_mask(j, n, regions, rotation, constants, m)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return mask, idx
    rng = np.random.default_rng(seed)
    pick = rng.choice(idx, size=min(samples, idx.size), replace=False)
    return mask, np.sort(pick)


def check_index_bound(fmap: QpfMap, rotation: Rotation, regions, constants: MultiscaleConstants,
                      j: int = 1, n: int = 1000, m: int = 4096, samples: int = 200,
                      seed: int = 0) -> CheckResult:
    """On Omega-masked samples: ``P_k^n >= b^2 (n-k)`` and ``i_k^n >= p_k^n(theta)``
    for ``0 <= k <= n - threshold_j``."""
    mask, picks = _omega_samples(j, n, regions, rotation, constants, m, samples, seed)
    k_hi = n - constants.stabilization_threshold(j)
    detail = {"j": j, "n": n, "m": m, "mask_size": int(mask.sum()), "samples": int(picks.size),
              "k_max": k_hi}
    if picks.size == 0 or k_hi < 0:
        return CheckResult("index_bound", False, vacuous=True, detail=detail)
    b2 = constants.b**2
    i_k = np.array([i_index(k, n, constants) for k in range(k_hi + 1)])
    p_bad = i_bad = 0
    for i in picks:
        theta = i / m
        theta0 = float(rotate(theta, rotation, -n))
        P = _P_profile(fmap, rotation, theta0, 1.0, n, constants, regions[0])
        ks = np.arange(min(k_hi, n - 1) + 1)
        p_bad += int(np.count_nonzero(P[ks] < b2 * (n - ks)))
        prof = p_index_profile(theta, n, regions, rotation, constants)
        i_bad += int(np.count_nonzero(i_k < prof[:k_hi + 1]))
    detail.update({"P_violations": p_bad, "index_violations": i_bad})
    return CheckResult("index_bound", p_bad == 0 and i_bad == 0, detail=detail)


def check_stabilization(fmap: QpfMap, rotation: Rotation, regions, constants: MultiscaleConstants,
                        j: int = 1, n: int = 1000, m: int = 4096, workers=None) -> CheckResult:
    """``|phi_n^+ - phi_{n-1}^+| <= alpha^{-lambda (n-1)}`` on the Omega mask, above a rounding floor."""
    mask = omega_mask(j, n, regions, rotation, constants, m)
    detail = {"j": j, "n": n, "m": m, "mask_size": int(mask.sum()),
              "threshold": constants.stabilization_threshold(j)}
    if not mask.any() or n <= constants.stabilization_threshold(j):
        return CheckResult("stabilization", False, vacuous=True, detail=detail)
    d = np.abs(upper_line(fmap, rotation, n, m, workers=workers).values
               - upper_line(fmap, rotation, n - 1, m, workers=workers).values)[mask]
    bound = math.exp(-constants.lam * (n - 1) * constants.log_alpha) + STABILIZATION_FLOOR
    detail.update({"max_step": float(d.max()), "bound": bound})
    return CheckResult("stabilization", bool(d.max() <= bound), detail=detail)


def check_lipschitz(fmap: QpfMap, rotation: Rotation, regions, constants: MultiscaleConstants,
                    j: int = 1, n: int = 1000, m: int = 4096, workers=None) -> CheckResult:
    """Local Lipschitz constant of ``phi_n^+`` on the Omega mask against the closed-form ``L_j``."""
    mask = omega_mask(j, n, regions, rotation, constants, m)
    detail = {"j": j, "n": n, "m": m, "mask_size": int(mask.sum())}
    if mask.sum() < 2:
        return CheckResult("lipschitz", False, vacuous=True, detail=detail)
    L = _c.lipschitz_bound(j, constants)
    emp = local_lipschitz(upper_line(fmap, rotation, n, m, workers=workers), mask)
    ok = emp == 0 or math.log(emp) <= L.log_value
    detail.update({"empirical": emp, "log_bound": L.log_value})
    return CheckResult("lipschitz", bool(ok), detail=detail)
