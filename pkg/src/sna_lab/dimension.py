"""Box-counting, pointwise and information dimension estimates.

Base coordinates are periodic; the fiber coordinate is not. Ball measures use
the sup metric on ``T^1 x R`` through a periodic k-d tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .boundary_lines import CurveSample, local_lipschitz, upper_line
from .errors import DegenerateMaskError, InsufficientScales
from .torus_dynamics import QpfMap, Rotation, forward_orbit, wrap

__all__ = [
    "PointCloud",
    "ScalingFit",
    "box_count",
    "box_dimension",
    "pointwise_dimension",
    "information_dimension",
    "dyadic_ladder",
    "graph_cloud",
    "orbit_cloud",
    "unit_square_cloud",
    "sine_graph_cloud",
    "atom_cloud",
    "DecompositionEntry",
    "lipschitz_decomposition_report",
    "R2_MIN",
]

R2_MIN = 0.98
MIN_COUNT = 16
SATURATION = 0.5
EMPTY_BALL_FRACTION = 0.5


@dataclass(frozen=True)
class PointCloud:
    thetas: np.ndarray
    xs: np.ndarray
    provenance: str = "sample"

    def __post_init__(self):
        th = wrap(np.asarray(self.thetas, dtype=float))
        xs = np.asarray(self.xs, dtype=float)
        if th.shape != xs.shape or th.ndim != 1:
            raise ValueError("thetas and xs must be 1-d arrays of equal length")
        if not np.all(np.isfinite(xs)):
            raise ValueError("fiber coordinates must be finite")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "xs", xs)

    def __len__(self) -> int:
        return int(self.xs.size)


@dataclass(frozen=True)
class ScalingFit:
    """Log-log regression over a scale ladder; ``fit_window`` is a half-open index range."""

    scales: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    fit_window: tuple[int, int]
    kind: str

    @property
    def inconclusive(self) -> bool:
        return not self.r_squared >= R2_MIN

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "slope": self.slope, "intercept": self.intercept,
            "r_squared": self.r_squared, "fit_window": list(self.fit_window),
            "inconclusive": self.inconclusive,
            "scales": [float(s) for s in self.scales], "values": [float(v) for v in self.values],
        }


def dyadic_ladder(eps_max: float, eps_min: float) -> np.ndarray:
    """``eps_max, eps_max/2, ...`` down to ``eps_min`` inclusive."""
    if not 0 < eps_min <= eps_max <= 1:
        raise ValueError("need 0 < eps_min <= eps_max <= 1")
    n = int(math.floor(math.log2(eps_max / eps_min) + 1e-9))
    return eps_max * 2.0 ** -np.arange(n + 1)


def _regress(xv: np.ndarray, yv: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(xv, yv, 1)
    resid = yv - (slope * xv + intercept)
    ss_res = float(resid @ resid)
    dev = yv - yv.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------------------
# box counting
# ---------------------------------------------------------------------------


def _cell_keys(cloud: PointCloud, eps: float) -> np.ndarray:
    n_cols = int(math.ceil(1.0 / eps - 1e-9))
    col = np.floor(cloud.thetas / eps).astype(np.int64) % n_cols
    row = np.floor((cloud.xs - cloud.xs.min()) / eps).astype(np.int64)
    return row * n_cols + col


def box_count(cloud: PointCloud, eps: float) -> int:
    """Occupied cells of side ``eps``; columns wrap in ``theta``, rows start at ``min x``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return int(np.unique(_cell_keys(cloud, eps)).size)


def _nested_counts(cloud: PointCloud, ladder: np.ndarray) -> np.ndarray:
    """Counts on a dyadic ladder from one pass over the finest cells."""
    eps_max = ladder[0]
    if abs(1.0 / eps_max - round(1.0 / eps_max)) > 1e-9:
        return np.array([box_count(cloud, e) for e in ladder])
    finest = ladder[-1]
    n_cols = int(round(1.0 / finest))
    col = np.floor(cloud.thetas / finest).astype(np.int64) % n_cols
    row = np.floor((cloud.xs - cloud.xs.min()) / finest).astype(np.int64)
    cells = np.unique(row * n_cols + col)
    row, col = np.divmod(cells, n_cols)
    counts = []
    for e in ladder:
        f = int(round(e / finest))
        cols_e = n_cols // f
        counts.append(np.unique((row // f) * cols_e + col // f).size)
    return np.array(counts)


def box_dimension(cloud: PointCloud, eps_max: float, eps_min: float) -> ScalingFit:
    """Slope of ``log N(eps)`` against ``-log eps`` over the trimmed ladder.

    Scales with ``N < 16`` or ``N >= n_points / 2`` are trimmed away.
    """
    ladder = dyadic_ladder(eps_max, eps_min)
    if ladder.size < 5:
        raise InsufficientScales(f"ladder has {ladder.size} rungs; need at least 5")
    counts = _nested_counts(cloud, ladder)
    ok = (counts >= MIN_COUNT) & (counts < SATURATION * len(cloud))
    idx = np.flatnonzero(ok)
    if idx.size < 4:
        raise InsufficientScales(f"only {idx.size} scales survive trimming")
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    slope, intercept, r2 = _regress(-np.log(ladder[lo:hi]), np.log(counts[lo:hi]))
    return ScalingFit(ladder, counts.astype(float), slope, intercept, r2, (lo, hi), "box")


# ---------------------------------------------------------------------------
# ball measures
# ---------------------------------------------------------------------------


def _tree(cloud: PointCloud):
    x0 = cloud.xs.min()
    span = cloud.xs.max() - x0
    pts = np.column_stack([cloud.thetas, cloud.xs - x0])
    # the fiber box is wide enough that no ball ever wraps in x
    box = np.array([1.0, 4.0 * span + 4.0])
    return cKDTree(pts, boxsize=box), pts


def _ball_counts(tree, pts, centers: np.ndarray, eps: float) -> np.ndarray:
    return np.asarray(tree.query_ball_point(pts[centers], r=eps, p=np.inf,
                                            return_length=True), dtype=float)


def _measure_fit(cloud: PointCloud, centers: np.ndarray, ladder: np.ndarray, kind: str) -> ScalingFit:
    ladder = np.asarray(ladder, dtype=float)
    if ladder.size < 2 or np.any(np.diff(ladder) >= 0):
        raise ValueError("eps ladder must be strictly decreasing")
    tree, pts = _tree(cloud)
    n = float(len(cloud))
    values = np.full(ladder.size, np.nan)
    keep = np.zeros(ladder.size, dtype=bool)
    for i, eps in enumerate(ladder):
        counts = _ball_counts(tree, pts, centers, eps)
        # balls holding only their own center carry no scaling information;
        # a scale is kept while most centers still see a neighbour
        if np.mean(counts >= 2) >= EMPTY_BALL_FRACTION:
            keep[i] = True
            values[i] = float(np.mean(np.log(counts / n)))
    idx = np.flatnonzero(keep)
    if idx.size < 4:
        raise InsufficientScales(f"only {idx.size} non-empty scales")
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    slope, intercept, r2 = _regress(np.log(ladder[idx]), values[idx])
    return ScalingFit(ladder, values, slope, intercept, r2, (lo, hi), kind)


def pointwise_dimension(cloud: PointCloud, center_index: int, eps_ladder) -> ScalingFit:
    """Slope of ``log mu(B_eps(p))`` against ``log eps`` at one cloud point."""
    return _measure_fit(cloud, np.array([int(center_index)]), eps_ladder, "pointwise")


def information_dimension(cloud: PointCloud, num_centers: int, eps_ladder, seed: int = 0) -> ScalingFit:
    """Slope of the center-averaged ``log mu(B_eps)`` against ``log eps``.

    Centers are drawn from the cloud without replacement, so they follow the
    empirical measure. The same seed gives a bitwise identical fit.
    """
    rng = np.random.default_rng(seed)
    k = min(int(num_centers), len(cloud))
    centers = np.sort(rng.choice(len(cloud), size=k, replace=False))
    return _measure_fit(cloud, centers, eps_ladder, "information")


# ---------------------------------------------------------------------------
# clouds
# ---------------------------------------------------------------------------


def graph_cloud(fmap: QpfMap, rotation: Rotation, m: int, N: int,
                workers: int | None = None) -> PointCloud:
    """``{(theta_i, phi_N^+(theta_i))}``: uniform base marginal, one point per grid cell."""
    curve = upper_line(fmap, rotation, N, m, workers=workers)
    return PointCloud(curve.thetas, curve.values, f"graph n={N} m={m}")


def orbit_cloud(fmap: QpfMap, rotation: Rotation, n_points: int, burn_in: int = 10_000,
                theta0: float = 0.0, x0: float = 1.0) -> PointCloud:
    """One forward orbit started at ``(theta0, x0)`` after ``burn_in`` steps."""
    th, xs = forward_orbit(fmap, rotation, theta0, x0, n_points, burn_in)
    return PointCloud(th, xs, f"orbit n={n_points}")


def unit_square_cloud(n: int, seed: int = 0) -> PointCloud:
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    return PointCloud(pts[:, 0], pts[:, 1], "unit square")


def sine_graph_cloud(m: int) -> PointCloud:
    th = np.arange(m) / m
    return PointCloud(th, np.sin(2 * np.pi * th), "sine graph")


def atom_cloud(n: int, point: tuple[float, float] = (0.25, 0.5)) -> PointCloud:
    return PointCloud(np.full(n, point[0]), np.full(n, point[1]), "atom")


# ---------------------------------------------------------------------------
# Lipschitz decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionEntry:
    j: int
    n: int
    retained: int
    empirical_lipschitz: float | None
    log_bound: float
    lipschitz_ok: bool | None
    masked_out_measure: float
    measure_bound: float
    measure_ok: bool
    note: str = ""

    @property
    def verdict(self) -> bool:
        return bool(self.lipschitz_ok) and self.measure_ok

    def to_dict(self) -> dict:
        return {
            "j": self.j, "n": self.n, "retained": self.retained,
            "empirical_lipschitz": self.empirical_lipschitz, "log_bound": self.log_bound,
            "lipschitz_ok": self.lipschitz_ok, "masked_out_measure": self.masked_out_measure,
            "measure_bound": self.measure_bound, "measure_ok": self.measure_ok,
            "verdict": self.verdict, "note": self.note,
        }


def lipschitz_decomposition_report(curves, masks, log_bounds, measure_bounds) -> list[DecompositionEntry]:
    """Compare each restricted curve's empirical slope with its bound.

    All four arguments are mappings keyed by ``j``: ``curves[j]`` a
    :class:`CurveSample`, ``masks[j]`` a boolean grid mask, ``log_bounds[j]`` the
    natural log of ``L_j`` and ``measure_bounds[j]`` a bound on the masked-out
    measure. The empirical constant is compared in log space so that bounds
    beyond float range still compare correctly.
    """
    out = []
    for j in sorted(curves):
        curve: CurveSample = curves[j]
        mask = np.asarray(masks[j], dtype=bool)
        retained = int(mask.sum())
        masked_out = 1.0 - retained / mask.size
        mb = float(measure_bounds[j])
        lb = float(log_bounds[j])
        try:
            emp = local_lipschitz(curve, mask)
            ok = bool(emp == 0.0 or math.log(emp) <= lb)
            note = ""
        except DegenerateMaskError as exc:
            emp, ok, note = None, None, str(exc)
        out.append(DecompositionEntry(j, curve.n, retained, emp, lb, ok, masked_out, mb,
                                      masked_out <= mb + 1e-12, note))
    return out
