"""Survive/collapse classification, critical parameter search, exponents.

Collapse test
-------------
The band ``[phi_n^-, phi_n^+]`` is empty over some base point exactly when
``f^n_{theta - n omega}(1) < f^{-n}_{theta + n omega}(0)``. Applying the
increasing map ``f^n`` to both sides turns this into ``f^{2n}_{theta - n omega}(1) < 0``.
So a negative gap at iterate ``n`` is witnessed by a forward orbit of the top
line that drops below 0 within ``2n`` steps, and once below 0 it stays there
because every ``f_theta(0) <= 0``. The default ``method="forward"`` runs those
``m`` forward orbits for ``2 budget_N`` steps. ``method="lines"`` evaluates both
boundary lines for every ``n`` instead; it is quadratic in the budget and kept
as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._parallel import map_chunks
from .boundary_lines import GapProfile, gap_profile, grid, lower_line, upper_line
from .errors import BudgetInconclusive, InverseDomainError
from .torus_dynamics import ArctanFamily, QpfMap, Rotation, backward_orbit, forward_orbit, rotate, wrap

__all__ = [
    "SURVIVES",
    "COLLAPSES",
    "ClassifyResult",
    "TraceRow",
    "BetaCBracket",
    "LyapunovEstimate",
    "classify",
    "find_beta_c",
    "lyapunov",
    "pinched_points",
    "minimality_probe",
]

SURVIVES = "Survives"
COLLAPSES = "Collapses"


@dataclass(frozen=True)
class ClassifyResult:
    beta: float
    verdict: str
    budget_N: int
    collapse_step: int | None = None
    min_gap_at_budget: float | None = None
    domain_errors: int = 0

    @property
    def collapses(self) -> bool:
        return self.verdict == COLLAPSES


@dataclass(frozen=True)
class TraceRow:
    step: int
    beta: float
    verdict: str
    collapse_step: int | None
    min_gap: float | None


@dataclass(frozen=True)
class BetaCBracket:
    lo: float
    hi: float
    tol: float
    evaluations: int
    budget_N: int
    m: int
    trace: tuple[TraceRow, ...] = field(default=(), repr=False)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def estimate(self) -> float:
        """The working critical value: the surviving end of the bracket."""
        return self.lo

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _first_negative_generic(fmap, rotation, thetas, n_steps, margin):
    x = np.ones_like(thetas)
    for k in range(n_steps):
        x = fmap.apply(rotate(thetas, rotation, k), x)
        if np.any(x < -margin):
            return k + 1
    return -1


def _first_negative(fmap, rotation, m, n_steps, margin, workers):
    thetas = grid(m)
    if isinstance(fmap, ArctanFamily):
        args = (fmap.a, fmap.beta) + rotation.split

        def chunk(lo, hi):
            return _kernels.first_negative_step(thetas[lo:hi], n_steps, margin, *args)

        hits = [h for h in map_chunks(chunk, m, workers) if h > 0]
        return min(hits) if hits else -1
    return _first_negative_generic(fmap, rotation, thetas, n_steps, margin)


def classify(family: QpfMap, rotation: Rotation, beta: float, budget_N: int, m: int,
             safety_margin: float = 0.0, method: str = "forward",
             workers: int | None = None) -> ClassifyResult:
    """Decide whether the band between the boundary lines survives ``budget_N`` iterates.

    A gap counts as negative only below ``-safety_margin``. Survives verdicts
    carry the grid minimum of ``phi_N^+ - phi_N^-``.
    """
    if budget_N < 1:
        raise ValueError("budget_N must be at least 1")
    if safety_margin < 0:
        raise ValueError("safety_margin must be nonnegative")
    fmap = family.with_beta(beta)
    if method == "lines":
        return _classify_lines(fmap, rotation, beta, budget_N, m, safety_margin, workers)
    if method != "forward":
        raise ValueError(f"unknown method {method!r}")
    k = _first_negative(fmap, rotation, m, 2 * budget_N, safety_margin, workers)
    if k > 0:
        return ClassifyResult(beta, COLLAPSES, budget_N, collapse_step=(k + 1) // 2)
    try:
        gap = gap_profile(upper_line(fmap, rotation, budget_N, m, workers=workers),
                          lower_line(fmap, rotation, budget_N, m, workers=workers))
    except InverseDomainError as exc:
        return ClassifyResult(beta, COLLAPSES, budget_N, collapse_step=exc.step, domain_errors=1)
    return ClassifyResult(beta, SURVIVES, budget_N, min_gap_at_budget=gap.min_gap)


def _classify_lines(fmap, rotation, beta, budget_N, m, margin, workers):
    gap = None
    for n in range(1, budget_N + 1):
        try:
            gap = gap_profile(upper_line(fmap, rotation, n, m, workers=workers),
                              lower_line(fmap, rotation, n, m, workers=workers))
        except InverseDomainError:
            return ClassifyResult(beta, COLLAPSES, budget_N, collapse_step=n, domain_errors=1)
        if gap.min_gap < -margin:
            return ClassifyResult(beta, COLLAPSES, budget_N, collapse_step=n)
    return ClassifyResult(beta, SURVIVES, budget_N, min_gap_at_budget=gap.min_gap)


def find_beta_c(family: QpfMap, rotation: Rotation, tol: float, budget_N: int, m: int,
                safety_margin: float = 0.0, lo: float = 0.0, hi: float = 1.0,
                check_endpoints: bool = True, workers: int | None = None) -> BetaCBracket:
    """Bisect on the classify verdict until the bracket is at most ``tol`` wide.

    Raises :class:`BudgetInconclusive` when the surviving end collapses once
    the budget is doubled, i.e. the bracket was limited by the budget rather
    than by ``tol``.
    """
    if not 0 < tol:
        raise ValueError("tol must be positive")

    def run(beta, budget=budget_N):
        return classify(family, rotation, beta, budget, m, safety_margin, workers=workers)

    if check_endpoints:
        if run(lo).collapses:
            raise ValueError(f"lower end beta={lo} already collapses")
        if not run(hi).collapses:
            raise ValueError(f"upper end beta={hi} survives")
    trace = []
    evaluations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = run(mid)
        evaluations += 1
        trace.append(TraceRow(evaluations, mid, res.verdict, res.collapse_step, res.min_gap_at_budget))
        if res.collapses:
            hi = mid
        else:
            lo = mid
    bracket = BetaCBracket(lo, hi, tol, evaluations, budget_N, m, tuple(trace))
    recheck = run(lo, 2 * budget_N)
    if recheck.collapses:
        raise BudgetInconclusive(
            f"beta={lo!r} survives at budget {budget_N} but collapses at {2 * budget_N}",
            bracket=bracket,
        )
    return bracket


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovEstimate:
    exponent: float
    stderr: float
    N: int
    burn_in: int
    n_blocks: int
    direction: int

    def __float__(self) -> float:
        return self.exponent


def lyapunov(fmap: QpfMap, rotation: Rotation, theta0: float, x0: float, N: int,
             burn_in: int = 10_000, direction: int = 1, n_blocks: int = 100) -> LyapunovEstimate:
    """Birkhoff average of ``log f'_theta(x)`` along an orbit.

    ``direction=-1`` walks the backward orbit, which follows a repelling graph;
    the average is still of the forward derivative, so it estimates the
    forward exponent of that graph. The standard error comes from
    ``n_blocks`` consecutive block means.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    n_blocks = max(1, min(n_blocks, N))
    if isinstance(fmap, ArctanFamily):
        means, counts = _kernels.log_derivative_blocks(
            float(wrap(theta0)), float(x0), int(burn_in), int(N), int(n_blocks), direction,
            fmap.a, fmap.beta, *rotation.split)
        if not np.all(np.isfinite(means)):
            raise InverseDomainError("backward orbit left the domain of the inverse")
    else:
        orbit = forward_orbit if direction > 0 else backward_orbit
        th, xs = orbit(fmap, rotation, theta0, x0, N, burn_in)
        logs = np.log(fmap.fiber_derivative(th, xs))
        size = N // n_blocks
        edges = [b * size for b in range(n_blocks)] + [N]
        means = np.array([logs[edges[b]:edges[b + 1]].mean() for b in range(n_blocks)])
        counts = np.diff(edges).astype(float)
    exponent = float(np.dot(means, counts) / counts.sum())
    stderr = float(np.std(means, ddof=1) / math.sqrt(n_blocks)) if n_blocks > 1 else math.inf
    return LyapunovEstimate(exponent, stderr, int(N), int(burn_in), int(n_blocks), direction)


def pinched_points(gap: GapProfile, tol: float) -> np.ndarray:
    """Grid indices where the gap is below ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    return np.flatnonzero(gap.gaps < tol)


# ---------------------------------------------------------------------------
# minimality
# ---------------------------------------------------------------------------


def _region_tiles(reference_gap: GapProfile, box_eps: float):
    n_cols = int(math.ceil(1.0 / box_eps - 1e-12))
    n_rows = int(math.ceil(1.0 / box_eps - 1e-12))
    thetas = reference_gap.upper.thetas
    cols = np.minimum((thetas / box_eps).astype(np.int64), n_cols - 1)
    lo = np.full(n_cols, np.inf)
    hi = np.full(n_cols, -np.inf)
    np.minimum.at(lo, cols, reference_gap.lower.values)
    np.maximum.at(hi, cols, reference_gap.upper.values)
    tiles = np.zeros((n_cols, n_rows), dtype=bool)
    for c in range(n_cols):
        if not np.isfinite(lo[c]):
            continue
        r0 = max(0, int(math.floor(max(lo[c], 0.0) / box_eps)))
        r1 = min(n_rows - 1, int(math.floor(min(hi[c], 1.0) / box_eps)))
        tiles[c, r0:r1 + 1] = True
    return tiles


def minimality_probe(fmap: QpfMap, rotation: Rotation, seed: tuple[float, float], orbit_len: int,
                     box_eps: float, reference_gap: GapProfile) -> float:
    """Fraction of the band's ``box_eps`` tiles visited by the orbit of ``seed``.

    The band between the reference lower and upper lines is covered by square
    tiles on a grid anchored at ``(0, 0)``; rows above ``x = 1`` are clipped.
    The orbit has ``orbit_len`` steps after the seed.
    """
    if not 0 < box_eps <= 1:
        raise ValueError("box_eps must lie in (0, 1]")
    tiles = _region_tiles(reference_gap, box_eps)
    n_cols, n_rows = tiles.shape
    th, xs = forward_orbit(fmap, rotation, seed[0], seed[1], int(orbit_len) + 1)
    c = np.minimum((th / box_eps).astype(np.int64), n_cols - 1)
    r = np.floor(xs / box_eps).astype(np.int64)
    ok = (r >= 0) & (r < n_rows)
    visited = np.zeros_like(tiles)
    visited[c[ok], r[ok]] = True
    return float(np.count_nonzero(visited & tiles) / np.count_nonzero(tiles))
