"""Iterated upper and lower boundary lines and derived quantities.

``phi_n^+(theta) = f^n_{theta - n omega}(1)`` is the fiber coordinate reached
after ``n`` forward steps from the top of the band, and ``phi_n^-`` is its
mirror image under the inverse system, ``f^{-n}_{theta + n omega}(0)``. Both are
evaluated per grid point from their own orbit; nothing is interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._parallel import map_chunks
from .errors import DegenerateMaskError, InverseDomainError, MismatchError
from .torus_dynamics import ArctanFamily, InverseSystem, QpfMap, Rotation, rotate, torus_distance

__all__ = [
    "CurveSample",
    "LineHistory",
    "GapProfile",
    "grid",
    "upper_line",
    "lower_line",
    "gap_profile",
    "stabilization_profile",
    "monotonicity_defect",
    "local_lipschitz",
]


def grid(m: int) -> np.ndarray:
    """The uniform base grid ``theta_i = i / m``."""
    return np.arange(m, dtype=float) / m


@dataclass(frozen=True)
class LineHistory:
    """All intermediate orbit points of a line computation.

    ``bases[k, i]`` is ``theta_i - (n - k) omega`` and ``values[k, i]`` the fiber
    coordinate there after ``k`` steps, i.e. ``phi_k(theta_i - (n - k) omega)``.
    """

    bases: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class CurveSample:
    """A boundary line sampled at ``theta_i = i / m``."""

    values: np.ndarray
    kind: str
    n: int
    a: float
    beta: float
    clamped: int = 0
    history: LineHistory | None = field(default=None, repr=False, compare=False)

    @property
    def grid_size(self) -> int:
        return int(self.values.shape[0])

    @property
    def thetas(self) -> np.ndarray:
        return grid(self.grid_size)


@dataclass(frozen=True)
class GapProfile:
    upper: CurveSample
    lower: CurveSample
    gaps: np.ndarray
    min_gap: float
    argmin: int

    @property
    def grid_size(self) -> int:
        return int(self.gaps.shape[0])

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())


def _params(fmap: QpfMap) -> tuple[float, float]:
    return float(getattr(fmap, "a", np.nan)), float(getattr(fmap, "beta", np.nan))


def _check_grid(n: int, m: int):
    if n < 0:
        raise ValueError("n must be nonnegative")
    if m < 2:
        raise ValueError("grid size m must be at least 2")


def _run_line(fmap: QpfMap, rotation: Rotation, thetas: np.ndarray, n: int,
              start: float, keep_history: bool):
    x = np.full(thetas.shape, float(start))
    clamped = 0
    if keep_history:
        bases = np.empty((n + 1, thetas.size))
        hist = np.empty((n + 1, thetas.size))
    for k in range(n):
        base = rotate(thetas, rotation, -(n - k))
        if keep_history:
            bases[k], hist[k] = base, x
        try:
            x, flags = _apply_flagged(fmap, base, x)
        except InverseDomainError as exc:
            raise exc.with_context(step=k + 1) from None
        clamped += flags
    if keep_history:
        bases[n], hist[n] = thetas, x
        return x, clamped, LineHistory(bases, hist)
    return x, clamped, None


def _apply_flagged(fmap, base, x):
    if isinstance(fmap, InverseSystem):
        # the inverse system's forward step is the base map's inverse
        prev = rotate(base, fmap.rotation, -1)
        y, flags = fmap.base.inverse_with_flag(prev, x)
        return y, int(np.count_nonzero(flags))
    return fmap.apply(base, x), 0


def _line(fmap, rotation, n, m, start, kind, keep_history, workers):
    _check_grid(n, m)
    thetas = grid(m)

    def chunk(lo, hi):
        try:
            return _run_line(fmap, rotation, thetas[lo:hi], n, start, keep_history)
        except InverseDomainError as exc:
            idx = None if exc.index is None else exc.index + lo
            raise exc.with_context(index=idx) from None

    parts = map_chunks(chunk, m, 1 if keep_history else workers)
    values = np.concatenate([p[0] for p in parts])
    clamped = sum(p[1] for p in parts)
    history = parts[0][2] if keep_history else None
    base_map = fmap.base if isinstance(fmap, InverseSystem) else fmap
    a, beta = _params(base_map)
    return CurveSample(values, kind, n, a, beta, clamped, history)


def upper_line(fmap: QpfMap, rotation: Rotation, n: int, m: int,
               keep_history: bool = False, workers: int | None = None) -> CurveSample:
    """``phi_n^+`` on the ``m``-point grid; ``n = 0`` is the constant 1."""
    return _line(fmap, rotation, n, m, 1.0, "upper", keep_history, workers)


def lower_line(fmap: QpfMap, rotation: Rotation, n: int, m: int,
               keep_history: bool = False, workers: int | None = None) -> CurveSample:
    """``phi_n^-`` on the ``m``-point grid; ``n = 0`` is the constant 0.

    Runs the upper-line recursion on the inverse system, started from 0. An
    :class:`InverseDomainError` carries the failing step and grid index.
    """
    inv = InverseSystem(fmap, rotation)
    return _line(inv, rotation.reversed(), n, m, 0.0, "lower", keep_history, workers)


def gap_profile(upper: CurveSample, lower: CurveSample) -> GapProfile:
    if upper.kind != "upper" or lower.kind != "lower":
        raise MismatchError("expected an upper and a lower line")
    if upper.grid_size != lower.grid_size:
        raise MismatchError(f"grid sizes differ: {upper.grid_size} vs {lower.grid_size}")
    if upper.n != lower.n:
        raise MismatchError(f"iterates differ: {upper.n} vs {lower.n}")
    same = [(u == v) or (np.isnan(u) and np.isnan(v))
            for u, v in ((upper.a, lower.a), (upper.beta, lower.beta))]
    if not all(same):
        raise MismatchError("family parameters differ")
    gaps = upper.values - lower.values
    i = int(np.argmin(gaps))
    return GapProfile(upper, lower, gaps, float(gaps[i]), i)


# ---------------------------------------------------------------------------
# all-n scans
# ---------------------------------------------------------------------------


def _scan(fmap, rotation, n_max, m, tol, upper, workers):
    """(last index with a step >= tol, worst monotonicity violation) per grid point."""
    thetas = grid(m)
    if isinstance(fmap, ArctanFamily):
        args = (fmap.a, fmap.beta) + rotation.split

        def chunk(lo, hi):
            return _kernels.stack_last_change(thetas[lo:hi], n_max, tol, upper, *args)

        parts = map_chunks(chunk, m, workers)
        return np.concatenate([p[0] for p in parts]), max(p[1] for p in parts)
    line = upper_line if upper else lower_line
    last = np.zeros(m, dtype=np.int64)
    worst = -np.inf
    prev = line(fmap, rotation, 0, m).values
    for n in range(1, n_max + 1):
        cur = line(fmap, rotation, n, m, workers=workers).values
        step = cur - prev if upper else prev - cur
        worst = max(worst, float(step.max()))
        last[np.abs(cur - prev) >= tol] = n
        prev = cur
    return last, worst


def stabilization_profile(fmap: QpfMap, rotation: Rotation, N: int, m: int,
                          tol: float = 1e-10, workers: int | None = None) -> np.ndarray:
    """Per grid point, the smallest ``n*`` with ``|phi_n^+ - phi_{n-1}^+| < tol`` on ``(n*, N]``.

    A point whose last super-tolerance step is at ``n = N`` itself has not
    settled within the budget and is reported as ``N + 1``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if np.isinf(tol):
        return np.zeros(m, dtype=np.int64)
    last, _ = _scan(fmap, rotation, N, m, tol, True, workers)
    last[last == N] = N + 1
    return last


def monotonicity_defect(fmap: QpfMap, rotation: Rotation, N: int, m: int, kind: str = "upper",
                        workers: int | None = None) -> float:
    """Largest step against the monotone direction over ``n = 1..N`` and the grid.

    Nonpositive means ``phi_n^+`` never rose (or ``phi_n^-`` never fell).
    """
    if kind not in ("upper", "lower"):
        raise ValueError("kind must be 'upper' or 'lower'")
    _, worst = _scan(fmap, rotation, N, m, np.inf, kind == "upper", workers)
    return float(worst)


def local_lipschitz(curve, mask: np.ndarray, periodic: bool = True) -> float:
    """Largest slope between consecutive retained grid points.

    ``curve`` is a :class:`CurveSample` or a plain value array. With
    ``periodic`` the pair (last retained, first retained) across ``theta = 0``
    is included, measured in the circle metric.
    """
    values = curve.values if isinstance(curve, CurveSample) else np.asarray(curve, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != values.shape:
        raise MismatchError("mask and curve lengths differ")
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        raise DegenerateMaskError(f"mask retains {idx.size} grid point(s)")
    m = values.size
    i, j = idx[:-1], idx[1:]
    if periodic:
        i, j = np.append(i, idx[-1]), np.append(j, idx[0])
    dist = torus_distance(i / m, j / m)
    slopes = np.abs(values[j] - values[i]) / dist
    return float(slopes.max())
