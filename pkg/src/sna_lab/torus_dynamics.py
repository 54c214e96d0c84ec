"""Circle rotation and quasiperiodically forced fiber maps.

The skew product is ``(theta, x) -> (theta + omega, f_theta(x))`` on
``T^1 x X``. Base points are plain floats in ``[0, 1)`` (or arrays of them);
:class:`TorusPoint` wraps one for callers that want a typed value.

Multiples ``n * omega`` are reduced with a split product: ``omega`` is cut
into a 26-bit head and a tail, ``n`` into 26-bit halves. The head products are
exact; only ``n * tail`` rounds, by about ``|n| 2**-80``. The reduction error is
therefore below 1e-16 for ``|n| < 2**27`` and about 1e-12 at ``|n| = 2**40``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

from .errors import DomainError, InverseDomainError

__all__ = [
    "TorusPoint",
    "Rotation",
    "wrap",
    "frac_multiple",
    "rotate",
    "torus_distance",
    "QpfMap",
    "ArctanFamily",
    "AffineFamily",
    "InverseSystem",
    "iterate",
    "forward_orbit",
    "backward_orbit",
    "INVERSE_SLACK",
    "INVERSE_CLAMP",
]

INVERSE_SLACK = 1e-9
INVERSE_CLAMP = 1e-12

_TWO_26 = 1 << 26


def wrap(x):
    """Reduce mod 1 into ``[0, 1)``; works on scalars and arrays."""
    if np.ndim(x) == 0:
        r = float(x) - math.floor(x)
        return 0.0 if r >= 1.0 else r
    arr = np.asarray(x, dtype=float)
    r = arr - np.floor(arr)
    r[r >= 1.0] = 0.0
    return r


@dataclass(frozen=True)
class TorusPoint:
    """A point of the d-torus; coordinates are reduced mod 1 on construction."""

    coords: tuple[float, ...]

    def __post_init__(self):
        c = self.coords
        if np.ndim(c) == 0:
            c = (c,)
        object.__setattr__(self, "coords", tuple(wrap(float(v)) for v in c))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def theta(self) -> float:
        if len(self.coords) != 1:
            raise ValueError("theta is only defined for the circle")
        return self.coords[0]

    def __float__(self) -> float:
        return self.theta


def _as_theta(theta):
    if isinstance(theta, TorusPoint):
        return theta.theta
    return theta


@dataclass(frozen=True)
class Rotation:
    """Rotation by ``omega`` on the circle, tagged with a short description."""

    omega: float
    tag: str = "custom"
    _hi: float = field(init=False, repr=False, compare=False)
    _hi_scaled: float = field(init=False, repr=False, compare=False)
    _lo: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = wrap(float(_as_theta(self.omega)))
        object.__setattr__(self, "omega", w)
        # Veltkamp split: hi keeps 26 significant bits, so n*hi is exact for |n| < 2**27
        c = 134217729.0 * w
        hi = c - (c - w)
        object.__setattr__(self, "_hi", hi)
        object.__setattr__(self, "_hi_scaled", hi * _TWO_26)
        object.__setattr__(self, "_lo", w - hi)

    @classmethod
    def golden(cls) -> "Rotation":
        with localcontext() as ctx:
            ctx.prec = 50
            w = (Decimal(5).sqrt() - 1) / 2
        return cls(float(w), "golden-mean")

    def reversed(self) -> "Rotation":
        """Rotation by ``-omega``."""
        return Rotation(wrap(-self.omega), f"reversed {self.tag}")

    @property
    def split(self) -> tuple[float, float, float]:
        """``(hi, hi * 2**26, lo)`` as consumed by the compiled kernels."""
        return self._hi, self._hi_scaled, self._lo


def frac_multiple(n, rotation: Rotation):
    """Fractional part of ``n * omega`` for an integer or integer array ``n``."""
    hi, hi_scaled, lo = rotation.split
    if np.ndim(n) == 0:
        n = int(n)
        nh, nl = divmod(n, _TWO_26)
        p1, p2, p3 = nh * hi_scaled, nl * hi, n * lo
        r = (p1 - math.floor(p1)) + (p2 - math.floor(p2)) + (p3 - math.floor(p3))
        return wrap(r)
    n = np.asarray(n, dtype=np.int64)
    nh, nl = np.divmod(n, _TWO_26)
    p1, p2, p3 = nh * hi_scaled, nl * hi, n * lo
    r = (p1 - np.floor(p1)) + (p2 - np.floor(p2)) + (p3 - np.floor(p3))
    return wrap(r)


def rotate(theta, rotation: Rotation, n=1):
    """``theta + n * omega`` mod 1, with a single reduced product for ``n * omega``."""
    if isinstance(theta, TorusPoint):
        return TorusPoint((rotate(theta.theta, rotation, n),))
    return wrap(np.add(theta, frac_multiple(n, rotation)) if np.ndim(theta) or np.ndim(n)
                else theta + frac_multiple(n, rotation))


def torus_distance(theta1, theta2):
    """Circle metric ``min(|d|, 1 - |d|)``; always in ``[0, 1/2]``."""
    # reduce |t1 - t2| rather than t1 - t2 so the result is exactly symmetric
    d = wrap(np.abs(np.subtract(_as_theta(theta1), _as_theta(theta2))))
    out = np.minimum(d, 1.0 - d)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# fiber maps
# ---------------------------------------------------------------------------


class QpfMap(ABC):
    """A family of increasing fiber maps ``f_theta : X -> X`` over the circle."""

    x_lo: float
    x_hi: float

    @abstractmethod
    def apply(self, theta, x):
        """``f_theta(x)``; raises :class:`DomainError` if ``x`` is outside X."""

    @abstractmethod
    def inverse_with_flag(self, theta, y):
        """Return ``(x, clamped)`` with ``f_theta(x) = y``.

        ``clamped`` marks entries where the inverse was only defined after
        absorbing a rounding excess within :data:`INVERSE_SLACK`.
        """

    @abstractmethod
    def inverse_extended(self, theta, y):
        """Inverse extended monotonically to all ``y``, with ``+-inf`` beyond the image."""

    @abstractmethod
    def fiber_derivative(self, theta, x):
        """``d f_theta / dx``, strictly positive on X."""

    @abstractmethod
    def theta_lipschitz_bound(self) -> float:
        """A Lipschitz constant of ``(theta, x) -> f_theta(x)`` in ``theta``."""

    def apply_inverse(self, theta, y):
        return self.inverse_with_flag(theta, y)[0]

    def _check_domain(self, x):
        arr = np.asarray(x, dtype=float)
        bad = ~((arr >= self.x_lo) & (arr <= self.x_hi))
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            val = float(arr.flat[idx])
            raise DomainError(f"x={val!r} outside [{self.x_lo}, {self.x_hi}]")


@dataclass(frozen=True)
class ArctanFamily(QpfMap):
    """``f(theta, x) = (2/pi) arctan(a x) - beta (1 + cos 2 pi theta)`` on ``[x_lo, 1]``."""

    a: float
    beta: float
    x_lo: float = -3.0
    x_hi: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not self.x_lo < 0.0:
            raise ValueError("x_lo must be negative")

    def with_beta(self, beta: float) -> "ArctanFamily":
        return ArctanFamily(self.a, beta, self.x_lo)

    def forcing(self, theta):
        return self.beta * (1.0 + np.cos(2.0 * np.pi * np.asarray(_as_theta(theta))))

    def apply(self, theta, x):
        self._check_domain(x)
        out = (2.0 / np.pi) * np.arctan(self.a * np.asarray(x, dtype=float)) - self.forcing(theta)
        return float(out) if np.ndim(out) == 0 else out

    def _inverse_arg(self, theta, y):
        return np.asarray(y, dtype=float) + self.forcing(theta)

    def inverse_with_flag(self, theta, y):
        s = np.atleast_1d(self._inverse_arg(theta, y))
        excess = np.abs(s) - 1.0
        bad = ~(excess < INVERSE_SLACK)
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            raise InverseDomainError(
                f"inverse undefined: y + forcing = {float(s.flat[idx])!r}", index=idx
            )
        arg = 0.5 * np.pi * s
        lim = 0.5 * np.pi - INVERSE_CLAMP
        clamped = excess >= 0.0
        arg = np.where(clamped, np.sign(arg) * lim, arg)
        x = np.tan(arg) / self.a
        if np.ndim(y) == 0 and np.ndim(_as_theta(theta)) == 0:
            return float(x[0]), bool(clamped[0])
        return x, clamped

    def inverse_extended(self, theta, y):
        s = self._inverse_arg(theta, y)
        with np.errstate(invalid="ignore"):
            x = np.tan(0.5 * np.pi * np.clip(s, -1.0, 1.0)) / self.a
        x = np.where(s >= 1.0, np.inf, np.where(s <= -1.0, -np.inf, x))
        return float(x) if np.ndim(x) == 0 else x

    def fiber_derivative(self, theta, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        out = (2.0 * self.a / np.pi) / (1.0 + (self.a * x) ** 2) + 0.0 * np.asarray(_as_theta(theta))
        return float(out) if np.ndim(out) == 0 else out

    def fiber_second_derivative(self, theta, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        out = -(4.0 * self.a**3 / np.pi) * x / (1.0 + (self.a * x) ** 2) ** 2
        out = out + 0.0 * np.asarray(_as_theta(theta))
        return float(out) if np.ndim(out) == 0 else out

    def theta_lipschitz_bound(self) -> float:
        # |d/dtheta beta(1+cos 2 pi theta)| <= 2 pi beta
        return 2.0 * np.pi * self.beta


@dataclass(frozen=True)
class AffineFamily(QpfMap):
    """Contracting control map ``f(theta, x) = slope * x + shift * cos 2 pi theta``.

    With ``|slope| < 1`` it has a single smooth attracting invariant graph,
    which makes it a clean baseline for the dimension estimators.
    """

    slope: float = 0.5
    shift: float = 0.25
    x_lo: float = -1.0
    x_hi: float = 1.0

    def apply(self, theta, x):
        self._check_domain(x)
        out = self.slope * np.asarray(x, dtype=float) + self.shift * np.cos(
            2.0 * np.pi * np.asarray(_as_theta(theta))
        )
        return float(out) if np.ndim(out) == 0 else out

    def inverse_with_flag(self, theta, y):
        x = (np.asarray(y, dtype=float) - self.shift * np.cos(2.0 * np.pi * np.asarray(_as_theta(theta)))) / self.slope
        if np.ndim(x) == 0:
            return float(x), False
        return x, np.zeros(x.shape, dtype=bool)

    def inverse_extended(self, theta, y):
        return self.inverse_with_flag(theta, y)[0]

    def fiber_derivative(self, theta, x):
        self._check_domain(x)
        out = np.full(np.broadcast(np.asarray(_as_theta(theta)), np.asarray(x)).shape, self.slope)
        return float(out) if out.ndim == 0 else out

    def theta_lipschitz_bound(self) -> float:
        return 2.0 * np.pi * abs(self.shift)


@dataclass(frozen=True)
class InverseSystem(QpfMap):
    """The inverse skew product written as a forward system over ``-omega``.

    ``(theta, y) -> (theta - omega, f^{-1}_{theta - omega}(y))``, so the fiber map
    at base ``theta`` is ``f^{-1}_{theta - omega}``. Pair it with
    ``rotation.reversed()``. Forward iteration of this system replays the
    backward dynamics of ``base``; the phase interval is the whole line.
    """

    base: QpfMap
    rotation: Rotation
    x_lo: float = field(default=-math.inf, init=False)
    x_hi: float = field(default=math.inf, init=False)

    def _prev(self, theta):
        return rotate(np.asarray(_as_theta(theta), dtype=float), self.rotation, -1)

    def apply(self, theta, x):
        return self.base.apply_inverse(self._prev(theta), x)

    def inverse_with_flag(self, theta, y):
        x = self.base.apply(self._prev(theta), y)
        if np.ndim(x) == 0:
            return x, False
        return x, np.zeros(np.shape(x), dtype=bool)

    def inverse_extended(self, theta, y):
        return self.base.apply(self._prev(theta), y)

    def fiber_derivative(self, theta, x):
        return 1.0 / self.base.fiber_derivative(self._prev(theta), self.apply(theta, x))

    def theta_lipschitz_bound(self) -> float:
        return math.inf

    def _check_domain(self, x):
        pass


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------


def iterate(fmap: QpfMap, rotation: Rotation, theta0, x0: float, n: int):
    """Orbit segment of ``(theta0, x0)`` with ``|n| + 1`` points, start included.

    Returns ``(thetas, xs)`` arrays. Negative ``n`` walks backwards with the
    fiber inverse; an :class:`InverseDomainError` carries the 1-based step.
    """
    theta0 = wrap(float(_as_theta(theta0)))
    fmap._check_domain(x0)
    steps = abs(int(n))
    sign = 1 if n >= 0 else -1
    thetas = np.empty(steps + 1)
    xs = np.empty(steps + 1)
    thetas[0], xs[0] = theta0, float(x0)
    x = float(x0)
    for k in range(1, steps + 1):
        th_prev = thetas[k - 1]
        th = wrap(theta0 + sign * frac_multiple(k, rotation))
        if sign > 0:
            x = fmap.apply(th_prev, x)
        else:
            try:
                x = fmap.apply_inverse(th, x)
            except InverseDomainError as exc:
                raise exc.with_context(step=k) from None
        thetas[k], xs[k] = th, x
    return thetas, xs


def _kernel_args(fmap, rotation):
    return (fmap.a, fmap.beta) + rotation.split


def forward_orbit(fmap: QpfMap, rotation: Rotation, theta0: float, x0: float,
                  n: int, burn_in: int = 0):
    """``n`` forward orbit points of ``(theta0, x0)`` after discarding ``burn_in``."""
    theta0 = wrap(float(_as_theta(theta0)))
    if isinstance(fmap, ArctanFamily):
        from . import _kernels

        return _kernels.forward_orbit(theta0, float(x0), int(burn_in), int(n),
                                      *_kernel_args(fmap, rotation))
    th, xs = iterate(fmap, rotation, theta0, x0, burn_in + n - 1 if n > 0 else burn_in)
    return th[burn_in:burn_in + n].copy(), xs[burn_in:burn_in + n].copy()


def backward_orbit(fmap: QpfMap, rotation: Rotation, theta0: float, x0: float,
                   n: int, burn_in: int = 0):
    """``n`` backward orbit points, ``theta0 - k omega``, after ``burn_in`` steps.

    The arctan kernel saturates to ``+-inf`` instead of raising once a
    preimage leaves the domain of the inverse.
    """
    theta0 = wrap(float(_as_theta(theta0)))
    if isinstance(fmap, ArctanFamily):
        from . import _kernels

        return _kernels.backward_orbit(theta0, float(x0), int(burn_in), int(n),
                                       *_kernel_args(fmap, rotation))
    th, xs = iterate(fmap, rotation, theta0, x0, -(burn_in + n - 1) if n > 0 else -burn_in)
    return th[burn_in:burn_in + n].copy(), xs[burn_in:burn_in + n].copy()
