"""Arcs on the circle, the critical regions and their shifted unions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyRegion
from ..torus_dynamics import QpfMap, Rotation, rotate, wrap
from .constants import MultiscaleConstants

__all__ = [
    "Arc",
    "CriticalRegion",
    "RegionFamily",
    "arc_distance",
    "arcs_intersect",
    "arc_contains_arc",
    "compute_I0",
    "refine_critical_region",
    "build_regions",
]

BISECT_TOL = 1e-12


@dataclass(frozen=True)
class Arc:
    """Closed arc ``[lo, lo + length]`` taken mod 1; ``length >= 1`` is the full circle."""

    lo: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "lo", wrap(float(self.lo)))
        object.__setattr__(self, "length", max(0.0, float(self.length)))

    @property
    def hi(self) -> float:
        return wrap(self.lo + self.length)

    @property
    def full(self) -> bool:
        return self.length >= 1.0

    def contains(self, theta):
        if self.full:
            return np.ones(np.shape(theta), dtype=bool) if np.ndim(theta) else True
        return wrap(np.subtract(theta, self.lo)) <= self.length

    def shifted(self, k: int, rotation: Rotation) -> "Arc":
        return Arc(rotate(self.lo, rotation, k), self.length)


def arcs_intersect(a: Arc, b: Arc) -> bool:
    if a.full or b.full:
        return True
    return bool(wrap(b.lo - a.lo) <= a.length or wrap(a.lo - b.lo) <= b.length)


def arc_distance(a: Arc, b: Arc) -> float:
    """Circle distance between two closed arcs (0 when they meet)."""
    if arcs_intersect(a, b):
        return 0.0
    return float(min(wrap(b.lo - a.lo) - a.length, wrap(a.lo - b.lo) - b.length))


def arc_contains_arc(outer: Arc, inner: Arc, slack: float = 0.0) -> bool:
    if outer.full:
        return True
    if inner.full:
        return False
    start = wrap(inner.lo - outer.lo)
    if start > outer.length + slack and start < 1.0 - slack:
        return False
    if start >= 1.0 - slack:
        start -= 1.0
    return bool(start + inner.length <= outer.length + slack)


@dataclass(frozen=True)
class CriticalRegion:
    """The critical region of a given level; ``arc is None`` means empty.

    ``connected`` is False when the underlying set had several components and
    ``arc`` is their smallest enclosing arc.
    """

    level: int
    arc: Arc | None
    connected: bool = True
    components: int = 1

    @property
    def empty(self) -> bool:
        return self.arc is None

    @property
    def lo(self) -> float:
        return math.nan if self.arc is None else self.arc.lo

    @property
    def hi(self) -> float:
        return math.nan if self.arc is None else self.arc.hi

    @property
    def length(self) -> float:
        return 0.0 if self.arc is None else min(1.0, self.arc.length)

    def contains(self, theta):
        if self.arc is None:
            return np.zeros(np.shape(theta), dtype=bool) if np.ndim(theta) else False
        return self.arc.contains(theta)

    def shifted(self, k: int, rotation: Rotation) -> Arc | None:
        return None if self.arc is None else self.arc.shifted(k, rotation)

    def to_dict(self, eps: float | None = None) -> dict:
        out = {"level": self.level, "empty": self.empty}
        if not self.empty:
            out.update(lo=self.lo, hi=self.hi, length=self.length,
                       connected=self.connected, components=self.components)
        if eps is not None:
            out["eps"] = eps
        return out


# ---------------------------------------------------------------------------
# locating sets of the form {theta : pred(theta)}
# ---------------------------------------------------------------------------


def _bisect_edge(pred, t_out: float, t_in: float) -> float:
    """Boundary between a point outside and one inside; returns the inside side."""
    for _ in range(200):
        if abs(t_in - t_out) <= BISECT_TOL:
            break
        mid = 0.5 * (t_in + t_out)
        if pred(np.array([mid]))[0]:
            t_in = mid
        else:
            t_out = mid
    return t_in


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index runs of True in a linear boolean array."""
    idx = np.flatnonzero(np.diff(np.concatenate(([0], flags.astype(np.int8), [0]))))
    return [(int(s), int(e) - 1) for s, e in zip(idx[::2], idx[1::2])]


def _locate_on_circle(pred, m: int, level: int) -> CriticalRegion:
    thetas = np.arange(m) / m
    flags = np.asarray(pred(thetas), dtype=bool)
    if not flags.any():
        raise EmptyRegion(f"no grid point qualifies at level {level}", level=level)
    if flags.all():
        return CriticalRegion(level, Arc(0.0, 1.0))
    # rotate the index so that position 0 is outside the set
    shift = int(np.flatnonzero(~flags)[0])
    order = (np.arange(m) + shift) % m
    wpred = lambda t: pred(wrap(t))
    arcs = []
    for s, e in _runs(flags[order]):
        # unwrapped coordinates along the rotated index
        t_s, t_e = (shift + s) / m, (shift + e) / m
        lo = _bisect_edge(wpred, t_s - 1.0 / m, t_s)
        hi = _bisect_edge(wpred, t_e + 1.0 / m, t_e)
        arcs.append((wrap(lo), hi - lo))
    return _enclose(arcs, level)


def _enclose(arcs: list[tuple[float, float]], level: int) -> CriticalRegion:
    """Smallest arc containing all given arcs: complement of the largest gap."""
    if len(arcs) == 1:
        return CriticalRegion(level, Arc(*arcs[0]))
    arcs = sorted(arcs)
    best_gap, best_i = -1.0, 0
    for i in range(len(arcs)):
        s, ln = arcs[i]
        nxt = arcs[(i + 1) % len(arcs)][0]
        gap = wrap(nxt - (s + ln))
        if gap > best_gap:
            best_gap, best_i = gap, i
    start = arcs[(best_i + 1) % len(arcs)][0]
    return CriticalRegion(level, Arc(start, 1.0 - best_gap), connected=False, components=len(arcs))


def compute_I0(fmap: QpfMap, constants: MultiscaleConstants, m: int = 4096) -> CriticalRegion:
    """Smallest closed arc containing ``{theta : f_theta(e) < c}``.

    By monotonicity ``f_theta([e, 1]) subset C`` fails exactly where
    ``f_theta(e) < c``. Edges are bisected to 1e-12.
    """
    e, c = constants.e, constants.c

    def pred(t):
        return np.asarray(fmap.apply(t, np.full(np.shape(t), e)), dtype=float) < c

    return _locate_on_circle(pred, m, 0)


def _forward_image(fmap, rotation, thetas, steps, x0):
    x = np.full(thetas.shape, float(x0))
    for k in range(steps):
        x = fmap.apply(rotate(thetas, rotation, -(steps - k)), x)
    return x


def _backward_image(fmap, rotation, thetas, steps, y0):
    # f^{-steps}_{theta + steps omega}(y0), saturating to +-inf past the pole
    y = np.full(thetas.shape, float(y0))
    for k in range(steps):
        y = fmap.inverse_extended(rotate(thetas, rotation, steps - k - 1), y)
    return np.asarray(y, dtype=float)


def refine_critical_region(fmap: QpfMap, rotation: Rotation, I_n: CriticalRegion,
                           constants: MultiscaleConstants, m: int = 4096) -> CriticalRegion:
    """Next level: the ``theta`` in ``I_n`` whose forward image of ``C`` meets the backward image of ``E``.

    With ``M = M_n`` the two fiber intervals at ``theta`` are
    ``f^{M-1}_{theta-(M-1)omega}([c, 1])`` and ``f^{-(M+1)}_{theta+(M+1)omega}([0, e])``;
    by monotonicity their endpoint images suffice. The set is scanned on an
    ``m``-point grid across ``I_n`` and its edges bisected.
    """
    if I_n.empty:
        raise EmptyRegion("parent region is empty", level=I_n.level + 1)
    M = constants.M_at(I_n.level)
    c, e = constants.c, constants.e
    arc = I_n.arc

    def pred(t):
        t = wrap(np.asarray(t, dtype=float))
        a_lo = _forward_image(fmap, rotation, t, M - 1, c)
        a_hi = _forward_image(fmap, rotation, t, M - 1, 1.0)
        b_lo = _backward_image(fmap, rotation, t, M + 1, 0.0)
        b_hi = _backward_image(fmap, rotation, t, M + 1, e)
        return np.maximum(a_lo, b_lo) <= np.minimum(a_hi, b_hi)

    level = I_n.level + 1
    span = min(arc.length, 1.0)
    if arc.full:
        return _locate_on_circle(pred, m, level)
    local = np.linspace(0.0, span, m)
    flags = pred(arc.lo + local)
    if not flags.any():
        raise EmptyRegion(f"no grid point qualifies at level {level}", level=level)
    runs = _runs(flags)
    pieces = []
    for s, e_idx in runs:
        lo = local[s] if s == 0 else _bisect_edge(lambda t: pred(arc.lo + t), local[s - 1], local[s])
        hi = local[e_idx] if e_idx == m - 1 else _bisect_edge(
            lambda t: pred(arc.lo + t), local[e_idx + 1], local[e_idx])
        pieces.append((lo, hi))
    lo, hi = pieces[0][0], pieces[-1][1]
    return CriticalRegion(level, Arc(arc.lo + lo, hi - lo), connected=len(pieces) == 1,
                          components=len(pieces))


def build_regions(fmap: QpfMap, rotation: Rotation, constants: MultiscaleConstants,
                  max_level: int = 2, m: int = 4096, min_length: float = 1e-10,
                  max_orbit: int = 100_000):
    """``I_0 .. I_k`` up to ``max_level``; returns ``(regions, stop_reason)``.

    Recursion stops early at an empty region, an arc below ``min_length``, or
    when ``M_n`` exceeds ``max_orbit`` steps.
    """
    regions = [compute_I0(fmap, constants, m)]
    reason = "max_level"
    while regions[-1].level < max_level:
        cur = regions[-1]
        if cur.length <= min_length:
            reason = "length"
            break
        if constants.M_at(cur.level) + 1 > max_orbit:
            reason = "orbit budget"
            break
        try:
            regions.append(refine_critical_region(fmap, rotation, cur, constants, m))
        except EmptyRegion:
            regions.append(CriticalRegion(cur.level + 1, None))
            reason = "empty"
            break
    return regions, reason


# ---------------------------------------------------------------------------
# shifted unions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionFamily:
    """Shifted unions of ``I_0 .. I_n`` keyed by ``(level, shift)``.

    ``Z^-_n``: shifts ``-(M_j-2) .. 0``; ``Z^+_n``: ``1 .. M_j``;
    ``V_n``: ``1 .. M_j+1``; ``W_n``: ``-(M_j-1) .. 0``. With no regions all
    four are empty, which is the level ``-1`` convention.
    """

    n: int
    Z_minus: tuple = field(repr=False)
    Z_plus: tuple = field(repr=False)
    V: tuple = field(repr=False)
    W: tuple = field(repr=False)

    @classmethod
    def build(cls, regions, rotation: Rotation, constants: MultiscaleConstants,
              n: int | None = None) -> "RegionFamily":
        regions = [r for r in regions if n is None or r.level <= n]
        level = n if n is not None else (max((r.level for r in regions), default=-1))

        def union(lo_fn, hi_fn):
            out = []
            for r in regions:
                if r.empty:
                    continue
                Mj = constants.M_at(r.level)
                for l in range(lo_fn(Mj), hi_fn(Mj) + 1):
                    out.append((r.level, l, r.shifted(l, rotation)))
            return tuple(out)

        return cls(
            level,
            union(lambda M: -(M - 2), lambda M: 0),
            union(lambda M: 1, lambda M: M),
            union(lambda M: 1, lambda M: M + 1),
            union(lambda M: -(M - 1), lambda M: 0),
        )

    @staticmethod
    def _hits(arcs, theta):
        for _, _, a in arcs:
            if a.contains(theta):
                return True
        return False

    def in_Z_minus(self, theta) -> bool:
        return self._hits(self.Z_minus, theta)

    def in_Z_plus(self, theta) -> bool:
        return self._hits(self.Z_plus, theta)

    def contains_V_arc_set(self) -> bool:
        """``V_n`` contains ``Z^+_n`` and ``W_n`` contains ``Z^-_n`` as indexed arc sets."""
        keys = lambda arcs: {(j, l) for j, l, _ in arcs}
        return keys(self.Z_plus) <= keys(self.V) and keys(self.Z_minus) <= keys(self.W)
