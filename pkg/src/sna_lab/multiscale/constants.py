"""Multiscale constants: fitting, derived sequences and the Lipschitz bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DivergentSeries, EmptyRegion
from ..torus_dynamics import QpfMap

__all__ = [
    "MultiscaleConstants",
    "Infeasible",
    "SearchGrid",
    "FitDiagnostics",
    "LipschitzBound",
    "b_limit",
    "fit_constants",
    "lipschitz_bound",
]


def _log_b_partial(K0: int, kappa: int, n: int) -> float:
    return float(sum(math.log1p(-1.0 / (K0 * kappa**i)) for i in range(n)))


def b_limit(K0: int, kappa: int) -> float:
    """``prod_{n >= 0} (1 - 1/(K0 kappa^n))``, summed in log space to full precision."""
    total = 0.0
    i = 0
    while True:
        term = math.log1p(-1.0 / (K0 * float(kappa) ** i))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            return math.exp(total)
        i += 1


@dataclass(frozen=True)
class MultiscaleConstants:
    """Constants of the multiscale construction.

    ``M`` stores ``M_0, M_1, ...``; ``M_at(-1)`` is 0. ``lip_C`` is the exponent
    constant used when comparing ``L_j`` against ``eps_j^{-C K_{j-1}}``.
    """

    alpha: float
    p: float
    S: float
    c: float
    e: float
    c0: float
    K0: int
    kappa: int
    M: tuple[int, ...]
    diophantine_C: float = 0.2
    eta: float = 1.01
    lip_C: float = 32.0

    @property
    def log_alpha(self) -> float:
        return math.log(self.alpha)

    def K(self, n: int) -> int:
        return self.K0 * self.kappa**n

    def M_at(self, n: int) -> int:
        if n < 0:
            return 0
        if n < len(self.M):
            return self.M[n]
        # extend with the minimal admissible choice M_n = K_{n-1} M_{n-1}
        m = self.M[-1]
        for i in range(len(self.M), n + 1):
            m = self.K(i - 1) * m
        return m

    def b_n(self, n: int) -> float:
        return math.exp(_log_b_partial(self.K0, self.kappa, n))

    @property
    def b(self) -> float:
        return b_limit(self.K0, self.kappa)

    @property
    def lam(self) -> float:
        b2 = self.b**2
        return 2.0 * b2 / self.p - self.p * (1.0 - b2)

    def log_eps(self, n: int) -> float:
        return math.log(self.c0) - self.M_at(n - 1) * self.b / (2.0 * self.p) * self.log_alpha

    def eps(self, n: int) -> float:
        return math.exp(self.log_eps(n))

    def stabilization_threshold(self, j: int) -> int:
        """``2 K_{j-1} M_{j-1} - M_{j-1} - 1``; beyond it the shadow bounds apply."""
        if j < 1:
            raise ValueError("j must be at least 1")
        Mj = self.M_at(j - 1)
        return 2 * self.K(j - 1) * Mj - Mj - 1

    def violations(self) -> list[str]:
        """Names of the structural invariants that fail (empty when valid)."""
        out = []
        if not self.alpha > 1:
            out.append("alpha > 1")
        if not self.p >= math.sqrt(2):
            out.append("p >= sqrt(2)")
        if not self.S > 0:
            out.append("S > 0")
        if not 0 < self.e < self.c < 1:
            out.append("0 < e < c < 1")
        if not self.c0 > 0:
            out.append("c0 > 0")
        if self.K0 < 2 or self.kappa < 2:
            out.append("K0, kappa >= 2")
        if not self.M or self.M[0] < 2:
            out.append("M_0 >= 2")
        for n in range(1, len(self.M)):
            lo = self.K(n - 1) * self.M[n - 1]
            if not lo <= self.M[n] <= 2 * lo - 2:
                out.append(f"M_{n} in [K_{n - 1} M_{n - 1}, 2 K_{n - 1} M_{n - 1} - 2]")
        if self.K0 < 2 or self.kappa < 2:
            # b is undefined (K0 = 1) or meaningless here
            return out
        p2 = self.p**2
        if not self.b > math.sqrt((p2 + 1) / (p2 + 2)):
            out.append("b > sqrt((p^2+1)/(p^2+2))")
        if not self.lam > 0:
            out.append("lambda > 0")
        return out

    @property
    def is_valid(self) -> bool:
        return not self.violations()

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "p": self.p, "S": self.S, "c": self.c, "e": self.e,
            "c0": self.c0, "K0": self.K0, "kappa": self.kappa, "M": list(self.M),
            "b": self.b, "lambda": self.lam, "diophantine_C": self.diophantine_C,
            "eta": self.eta, "lip_C": self.lip_C,
        }


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Infeasible:
    """Certified negative from :func:`fit_constants`."""

    constraint: str
    detail: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class SearchGrid:
    p_values: tuple[float, ...] = (1.5, 2.0, 3.0, 4.0)
    log_alpha: tuple[float, ...] = tuple(np.linspace(0.01, 10.0, 1000))
    n_c: int = 48
    n_e: int = 48
    K0_values: tuple[int, ...] = (8, 16, 32, 64, 128)
    kappa: int = 2
    M0_values: tuple[int, ...] = (2, 3, 4)
    depth: int = 4
    theta_grid: int = 4096
    x_grid: int = 4097
    c0_factor: float = 1.1


@dataclass(frozen=True)
class FitDiagnostics:
    L_sup: float
    L_inf: float
    x_star: float
    S: float
    I0_length: float


def _slope_extremes(fmap: QpfMap, thetas, lo, hi, n):
    xs = np.linspace(lo, hi, n)
    d = np.array([fmap.fiber_derivative(t, xs) for t in thetas])
    return float(d.min()), float(d.max())


def _slope_one_point(fmap: QpfMap, theta_grid) -> float:
    # f' is decreasing on [0, 1]; the point where it crosses 1
    lo, hi = 0.0, 1.0
    g = lambda x: max(fmap.fiber_derivative(t, x) for t in theta_grid) - 1.0
    if g(lo) <= 0 or g(hi) >= 0:
        return math.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_constants(fmap: QpfMap, grid: SearchGrid | None = None,
                  diophantine_C: float = 0.2, eta: float = 1.01,
                  lip_C: float = 32.0):
    """Search a lattice of ``(p, alpha, c, e, K0, M0)`` satisfying the slope estimates.

    Slopes are estimated from the fiber derivative on a ``theta x x`` grid,
    ``S`` from :meth:`QpfMap.theta_lipschitz_bound`. Among tuples that satisfy
    every estimate, the b-invariant, and produce a proper critical arc (not
    empty, not the whole circle), the one with the largest ``lambda`` wins;
    ties go to smaller ``alpha``, then smaller ``c``, then larger ``e``, then
    smaller ``M0``. Returns ``(constants, diagnostics)`` or :class:`Infeasible`.
    """
    from .regions import compute_I0

    grid = grid or SearchGrid()
    theta_s = np.arange(64) / 64.0
    L_inf, L_sup = _slope_extremes(fmap, theta_s, fmap.x_lo, fmap.x_hi, grid.x_grid)
    S = float(fmap.theta_lipschitz_bound())
    x_star = _slope_one_point(fmap, theta_s)
    if not L_sup > 1.0:
        return Infeasible("expansion on E", f"sup slope {L_sup:.6g} <= 1 so alpha^(2/p) <= L_E is impossible")
    if not np.isfinite(x_star):
        return Infeasible("contraction on C", "fiber derivative never crosses 1 on [0, 1]")
    if not S > 0:
        return Infeasible("theta-Lipschitz bound", "S must be positive")
    need_pu = max(math.log(L_sup), -math.log(L_inf))
    c_vals = np.linspace(x_star, 0.95, grid.n_c + 1)[1:]
    e_vals = np.linspace(0.0, x_star, grid.n_e + 1)[1:-1]
    # slope bounds on C = [c, 1] and E = [0, e], thetas on the coarse grid
    LC = np.array([_slope_extremes(fmap, theta_s, c, 1.0, 257)[1] for c in c_vals])
    LE = np.array([_slope_extremes(fmap, theta_s, 0.0, e, 257)[0] for e in e_vals])
    log_alpha = np.asarray(grid.log_alpha)

    best = None
    last_reason = "no lattice point satisfies the slope estimates"
    for p in grid.p_values:
        if p < math.sqrt(2):
            continue
        ok_u = log_alpha[p * log_alpha >= need_pu]
        if ok_u.size == 0:
            last_reason = f"alpha^p >= {math.exp(need_pu):.6g} unreachable on the alpha grid"
            continue
        u = float(ok_u[0])
        rate = 2.0 * u / p
        ci = np.flatnonzero(-np.log(LC) >= rate)
        ei = np.flatnonzero(np.log(LE) >= rate)
        if ci.size == 0 or ei.size == 0:
            last_reason = f"p={p}: no c with slope <= alpha^(-2/p) or no e with slope >= alpha^(2/p)"
            continue
        p2 = p * p
        b_req = math.sqrt((p2 + 1) / (p2 + 2))
        for K0 in grid.K0_values:
            b = b_limit(K0, grid.kappa)
            if not b > b_req:
                last_reason = f"p={p}: b={b:.6g} <= {b_req:.6g} for every K0 on the grid"
                continue
            lam = 2 * b * b / p - p * (1 - b * b)
            c = float(c_vals[ci[0]])
            e = float(e_vals[ei[-1]])
            if not e < c:
                continue
            for M0 in grid.M0_values:
                M = [M0]
                for n in range(1, grid.depth):
                    M.append(K0 * grid.kappa ** (n - 1) * M[-1])
                trial = MultiscaleConstants(math.exp(u), p, S, c, e, 1.0, K0, grid.kappa,
                                            tuple(M), diophantine_C, eta, lip_C)
                try:
                    I0 = compute_I0(fmap, trial, grid.theta_grid)
                except EmptyRegion:
                    last_reason = "critical region I_0 is empty"
                    continue
                if I0.length >= 1.0:
                    last_reason = "critical region I_0 is the whole circle"
                    continue
                trial = replace(trial, c0=grid.c0_factor * I0.length)
                key = (-lam, u, c, -e, M0)
                if best is None or key < best[0]:
                    best = (key, trial, I0.length)
    if best is None:
        return Infeasible("estimates", last_reason)
    _, constants, width = best
    return constants, FitDiagnostics(L_sup, L_inf, x_star, S, width)


# ---------------------------------------------------------------------------
# Lipschitz bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzBound:
    """``L_j`` as a log value; ``value`` is ``inf`` when it overflows a float."""

    j: int
    log_value: float
    value: float
    l0: int
    l1: int
    log_ratio: float
    log_tail: float
    log_head: float
    C_required: float
    within_power_bound: bool = field(default=False)


def _log_expm1(x: float) -> float:
    # log(e^x - 1) for x > 0 without overflow
    if x > 30:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


def lipschitz_bound(j: int, constants: MultiscaleConstants) -> LipschitzBound:
    """Closed-form ``L_j = S (sum_{l >= l0} r^l + sum_{l=0}^{l1} alpha^{p l})``.

    ``l0 = 2 K_{j-1} M_{j-1} - M_{j-1} - 1``, ``l1 = l0 + 1`` and
    ``r = alpha^{2p(1-b^2) - 2(2b^2-1)/p}``. Both sums are evaluated as
    geometric series in log space.
    """
    if j < 1:
        raise ValueError("j must be at least 1")
    b2 = constants.b**2
    p = constants.p
    u = constants.log_alpha
    rho = 2 * p * (1 - b2) - 2 * (2 * b2 - 1) / p
    if not rho < 0:
        raise DivergentSeries(f"series exponent {rho:.6g} is not negative")
    l0 = constants.stabilization_threshold(j)
    l1 = l0 + 1
    log_r = rho * u
    log_tail = l0 * log_r - math.log(-math.expm1(log_r))
    log_head = _log_expm1(p * u * (l1 + 1)) - _log_expm1(p * u)
    log_L = math.log(constants.S) + float(np.logaddexp(log_tail, log_head))
    value = math.exp(log_L) if log_L < 709.0 else math.inf
    log_eps = constants.log_eps(j)
    Kj = constants.K(j - 1)
    C_req = log_L / (-Kj * log_eps) if log_eps < 0 else math.inf
    within = bool(log_eps < 0 and log_L <= -constants.lip_C * Kj * log_eps)
    return LipschitzBound(j, log_L, value, l0, l1, log_r, log_tail, log_head, C_req, within)
