"""Orbit counters for time spent contracting or expanding, and the level indices."""

from __future__ import annotations

import numpy as np

from ..torus_dynamics import QpfMap, Rotation, iterate, rotate
from .constants import MultiscaleConstants
from .regions import CriticalRegion, RegionFamily

__all__ = [
    "count_P",
    "count_Q",
    "contraction_flags",
    "p_index",
    "p_index_profile",
    "i_index",
    "check_B",
    "contraction_bound",
]


def contraction_flags(fmap: QpfMap, rotation: Rotation, theta, x, n: int,
                      constants: MultiscaleConstants, I0: CriticalRegion) -> np.ndarray:
    """``flags[l]`` for ``l = 0 .. n-1``: ``f^l_theta(x) in C`` and ``theta + l omega`` outside ``I_0``."""
    if n <= 0:
        return np.zeros(0, dtype=bool)
    thetas, xs = iterate(fmap, rotation, theta, x, n - 1)
    return (xs >= constants.c) & (xs <= 1.0) & ~np.asarray(I0.contains(thetas), dtype=bool)


def count_P(fmap: QpfMap, rotation: Rotation, theta, x, k: int, n: int,
            constants: MultiscaleConstants, I0: CriticalRegion) -> int:
    """``#{l in [k, n-1] : f^l_theta(x) in C and theta + l omega not in I_0}``."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    flags = contraction_flags(fmap, rotation, theta, x, n, constants, I0)
    return int(np.count_nonzero(flags[k:]))


def count_Q(fmap: QpfMap, rotation: Rotation, theta, x, k: int, n: int,
            constants: MultiscaleConstants, I0: CriticalRegion) -> int:
    """``#{l in [k, n-1] : f^{-l}_theta(x) in E and theta - l omega not in I_0 + omega}``."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    if n == 0:
        return 0
    thetas, xs = iterate(fmap, rotation, theta, x, -(n - 1))
    shifted = I0.shifted(1, rotation)
    outside = ~np.asarray(shifted.contains(thetas), dtype=bool) if shifted is not None else np.ones(n, bool)
    flags = (xs >= 0.0) & (xs <= constants.e) & outside
    return int(np.count_nonzero(flags[k:]))


def p_index(theta, k: int, n: int, regions, rotation: Rotation,
            constants: MultiscaleConstants) -> int:
    """Deepest level ``p`` with ``theta - l omega in I_p`` for some ``l in [M_{p-1}, min(n, n-k+M_p+1)]``.

    Only computed levels are scanned; ``-1`` when no level qualifies.
    """
    best = -1
    for r in regions:
        if r.empty or r.level <= best:
            continue
        p = r.level
        l_lo = constants.M_at(p - 1)
        l_hi = min(n, n - k + constants.M_at(p) + 1)
        if l_hi < l_lo:
            continue
        ls = np.arange(l_lo, l_hi + 1, dtype=np.int64)
        if np.any(r.contains(rotate(float(theta), rotation, -ls))):
            best = p
    return best


def p_index_profile(theta, n: int, regions, rotation: Rotation,
                    constants: MultiscaleConstants) -> np.ndarray:
    """``p_k^n(theta)`` for every ``k = 0 .. n`` at once.

    A level ``p`` qualifies at ``k`` iff its first hit ``l* >= M_{p-1}`` obeys
    ``l* <= n - k + M_p + 1``, so each level contributes a prefix of ``k``.
    """
    out = np.full(n + 1, -1, dtype=np.int64)
    ks = np.arange(n + 1)
    for r in regions:
        if r.empty:
            continue
        p = r.level
        l_lo = constants.M_at(p - 1)
        if n < l_lo:
            continue
        ls = np.arange(l_lo, n + 1, dtype=np.int64)
        hits = np.flatnonzero(r.contains(rotate(float(theta), rotation, -ls)))
        if hits.size == 0:
            continue
        first = int(ls[hits[0]])
        ok = ks <= n + constants.M_at(p) + 1 - first
        out[ok] = np.maximum(out[ok], p)
    return out


def i_index(k: int, n: int, constants: MultiscaleConstants, max_level: int = 64) -> int:
    """``max{l : n - k >= 2 K_l M_l - M_l - 1}``, ``-1`` when even ``l = 0`` fails."""
    best = -1
    for l in range(max_level + 1):
        Ml = constants.M_at(l)
        if n - k >= 2 * constants.K(l) * Ml - Ml - 1:
            best = l
        else:
            break
    return best


def check_B(theta, x, level: int, regions, constants: MultiscaleConstants, which: str,
            rotation: Rotation, family: RegionFamily | None = None) -> bool:
    """``B1``: ``x in C`` and ``theta`` outside ``Z^-_{level-1}``; ``B2``: ``x in E`` and outside ``Z^+_{level-1}``.

    ``family`` may pass a prebuilt ``RegionFamily`` of level ``level - 1``.
    """
    if which not in ("B1", "B2"):
        raise ValueError("which must be 'B1' or 'B2'")
    if family is None:
        family = RegionFamily.build(regions, rotation, constants, n=level - 1)
    elif family.n != level - 1:
        raise ValueError("family level does not match level - 1")
    if which == "B1":
        return bool(constants.c <= x <= 1.0) and not family.in_Z_minus(theta)
    return bool(0.0 <= x <= constants.e) and not family.in_Z_plus(theta)


def contraction_bound(p: int, n: int, k: int, constants: MultiscaleConstants) -> float:
    """``b_{p+1} (n - k - sum_{j=0}^{p} (M_j + 2))``, the lower bound on the contraction count."""
    return constants.b_n(p + 1) * (n - k - sum(constants.M_at(j) + 2 for j in range(p + 1)))
