"""Compiled inner loops for the arctan family.

Base points are always recomputed as ``frac(theta0 + frac(k * omega))`` with the
split-product trick of :mod:`sna_lab.torus_dynamics`, never by repeated addition, so the
kernels and the NumPy paths place every orbit point on the same base point up
to one rounding.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_TWO_26 = 67108864  # 2**26
_INV_PI2 = 2.0 / math.pi
_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


@numba.njit(cache=True, inline="always")
def _frac(x):
    r = x - math.floor(x)
    if r >= 1.0:
        r = 0.0
    return r


@numba.njit(cache=True, inline="always")
def frac_multiple(k, w_hi, w_hi_scaled, w_lo):
    nh = k // _TWO_26
    nl = k - nh * _TWO_26
    r = _frac(nh * w_hi_scaled) + _frac(nl * w_hi) + _frac(k * w_lo)
    return _frac(r)


@numba.njit(cache=True, inline="always")
def _fwd(theta, x, a, beta):
    return _INV_PI2 * math.atan(a * x) - beta * (1.0 + math.cos(_TWO_PI * theta))


@numba.njit(cache=True, inline="always")
def _bwd(theta, y, a, beta):
    # preimage under the fiber map at base theta; +inf past the pole
    s = y + beta * (1.0 + math.cos(_TWO_PI * theta))
    if s >= 1.0:
        return math.inf
    if s <= -1.0:
        return -math.inf
    return math.tan(_HALF_PI * s) / a


@numba.njit(cache=True, inline="always")
def _logderiv(x, a):
    return math.log((2.0 * a / math.pi) / (1.0 + a * a * x * x))


@numba.njit(cache=True, nogil=True)
def forward_orbit(theta0, x0, start, n, a, beta, w_hi, w_hi_scaled, w_lo):
    """Points k = start .. start+n-1 of the forward orbit of (theta0, x0)."""
    x = x0
    for k in range(start):
        th = _frac(theta0 + frac_multiple(k, w_hi, w_hi_scaled, w_lo))
        x = _fwd(th, x, a, beta)
    thetas = np.empty(n)
    xs = np.empty(n)
    for j in range(n):
        k = start + j
        th = _frac(theta0 + frac_multiple(k, w_hi, w_hi_scaled, w_lo))
        thetas[j] = th
        xs[j] = x
        x = _fwd(th, x, a, beta)
    return thetas, xs


@numba.njit(cache=True, nogil=True)
def backward_orbit(theta0, x0, start, n, a, beta, w_hi, w_hi_scaled, w_lo):
    """Points k = start .. start+n-1 of the backward orbit (theta0 - k*omega)."""
    x = x0
    for k in range(1, start + 1):
        th = _frac(theta0 - frac_multiple(k, w_hi, w_hi_scaled, w_lo))
        x = _bwd(th, x, a, beta)
    thetas = np.empty(n)
    xs = np.empty(n)
    for j in range(n):
        k = start + j
        if j > 0:
            th = _frac(theta0 - frac_multiple(k, w_hi, w_hi_scaled, w_lo))
            x = _bwd(th, x, a, beta)
        thetas[j] = _frac(theta0 - frac_multiple(k, w_hi, w_hi_scaled, w_lo))
        xs[j] = x
    return thetas, xs


@numba.njit(cache=True, nogil=True)
def log_derivative_blocks(theta0, x0, burn_in, n, n_blocks, direction, a, beta,
                          w_hi, w_hi_scaled, w_lo):
    """Block means of log f'(x_k) along n orbit points after burn_in steps.

    Returns (block_means, last_block_size). The last block absorbs the
    remainder of n / n_blocks.
    """
    x = x0
    k = 0
    for _ in range(burn_in):
        if direction > 0:
            th = _frac(theta0 + frac_multiple(k, w_hi, w_hi_scaled, w_lo))
            x = _fwd(th, x, a, beta)
            k += 1
        else:
            k += 1
            th = _frac(theta0 - frac_multiple(k, w_hi, w_hi_scaled, w_lo))
            x = _bwd(th, x, a, beta)
    size = n // n_blocks
    sums = np.zeros(n_blocks)
    counts = np.zeros(n_blocks)
    for j in range(n):
        b = j // size
        if b >= n_blocks:
            b = n_blocks - 1
        sums[b] += _logderiv(x, a)
        counts[b] += 1.0
        if direction > 0:
            th = _frac(theta0 + frac_multiple(k, w_hi, w_hi_scaled, w_lo))
            x = _fwd(th, x, a, beta)
            k += 1
        else:
            k += 1
            th = _frac(theta0 - frac_multiple(k, w_hi, w_hi_scaled, w_lo))
            x = _bwd(th, x, a, beta)
    return sums / counts, counts


@numba.njit(cache=True, nogil=True)
def upper_value(theta, n, a, beta, w_hi, w_hi_scaled, w_lo):
    # phi_n^+(theta): forward orbit of 1 from theta - n*omega
    x = 1.0
    for k in range(n):
        th = _frac(theta - frac_multiple(n - k, w_hi, w_hi_scaled, w_lo))
        x = _fwd(th, x, a, beta)
    return x


@numba.njit(cache=True, nogil=True)
def lower_value(theta, n, a, beta, w_hi, w_hi_scaled, w_lo):
    # phi_n^-(theta): backward orbit of 0 from theta + n*omega
    y = 0.0
    for k in range(n):
        th = _frac(theta + frac_multiple(n - k - 1, w_hi, w_hi_scaled, w_lo))
        y = _bwd(th, y, a, beta)
    return y


@numba.njit(cache=True, nogil=True)
def stack_last_change(thetas, n_max, tol, upper, a, beta, w_hi, w_hi_scaled, w_lo):
    """Per point: last n in 1..n_max with |phi_n - phi_{n-1}| >= tol (0 if none).

    Also returns the largest monotonicity violation seen, i.e. the max over n
    of (phi_n - phi_{n-1}) for the upper line and (phi_{n-1} - phi_n) for the
    lower line.
    """
    m = thetas.shape[0]
    last = np.zeros(m, dtype=np.int64)
    worst = -math.inf
    for i in range(m):
        prev = 1.0 if upper else 0.0
        for n in range(1, n_max + 1):
            if upper:
                cur = upper_value(thetas[i], n, a, beta, w_hi, w_hi_scaled, w_lo)
                viol = cur - prev
            else:
                cur = lower_value(thetas[i], n, a, beta, w_hi, w_hi_scaled, w_lo)
                viol = prev - cur
            if viol > worst:
                worst = viol
            if abs(cur - prev) >= tol:
                last[i] = n
            prev = cur
    return last, worst


@numba.njit(cache=True, nogil=True)
def first_negative_step(thetas, n_steps, margin, a, beta, w_hi, w_hi_scaled, w_lo):
    """Smallest k <= n_steps with f^k_theta(1) < -margin over all start points, or -1."""
    m = thetas.shape[0]
    xs = np.ones(m)
    for k in range(n_steps):
        fm = frac_multiple(k, w_hi, w_hi_scaled, w_lo)
        hit = False
        for i in range(m):
            th = _frac(thetas[i] + fm)
            xs[i] = _fwd(th, xs[i], a, beta)
            if xs[i] < -margin:
                hit = True
        if hit:
            return k + 1
    return -1
