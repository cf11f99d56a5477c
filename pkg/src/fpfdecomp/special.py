"""Error function, lower incomplete gamma, and the radial kernel.

The radial kernel is gamma(d/2, r^2/2) * r^(-d), the weight that the
radially symmetric sub-solution of the gain attaches to the offset from a
mixture component.  It has a removable singularity at r = 0 with limit
2^(1-d/2)/d, handled by a short series below ``R_SWITCH``.

The incomplete gamma follows the classic split: power series for
x < s + 1, continued fraction of the upper function otherwise (cf.
Numerical Recipes ch. 6).  Everything is scalar and @njit-friendly so the
hot mixture kernels can call it; vectorized numpy variants (used by the
pure-numpy fallback path) live alongside.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.special as sps

from ._compat import maybe_njit

__all__ = ["erf", "lower_incomplete_gamma", "radial_kernel", "radial_kernel_vec"]

R_SWITCH = 1e-4
_EPS = 1e-15
_MAX_ITER = 400


def erf(x: float) -> float:
    """Standard error function, (2/sqrt(pi)) * integral_0^x exp(-t^2) dt."""
    return math.erf(x)


@maybe_njit(cache=True)
def _ligamma_series(s: float, x: float) -> float:
    # gamma(s, x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x))


@maybe_njit(cache=True)
def _ligamma_upper_cf(s: float, x: float) -> float:
    # upper Gamma(s, x) = e^-x x^s * CF, modified Lentz
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1e300
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x)) * h


@maybe_njit(cache=True)
def _ligamma_core(s: float, x: float) -> float:
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return _ligamma_series(s, x)
    return math.gamma(s) - _ligamma_upper_cf(s, x)


def lower_incomplete_gamma(s: float, x: float) -> float:
    """gamma(s, x) = integral_0^x t^(s-1) e^-t dt, for s > 0, x >= 0."""
    if s <= 0.0:
        raise ValueError(f"s must be positive, got {s}")
    if x < 0.0:
        raise ValueError(f"x must be non-negative, got {x}")
    return _ligamma_core(float(s), float(x))


@maybe_njit(cache=True)
def _radial_kernel_core(d: int, r: float) -> float:
    s = 0.5 * d
    x = 0.5 * r * r
    if r <= R_SWITCH:
        # three series terms; truncation ~ x^3 is far below 1e-10 here
        c = 2.0 ** (-s) * math.exp(-x)
        return c * (1.0 / s + x / (s * (s + 1.0)) + x * x / (s * (s + 1.0) * (s + 2.0)))
    if d == 1:
        return math.sqrt(math.pi) * math.erf(math.sqrt(x)) / r
    if d == 2:
        return -math.expm1(-x) / (r * r)
    if d == 3:
        if x < 0.01:
            # the closed form subtracts two ~sqrt(x) terms; series instead
            return _ligamma_series(s, x) / (r * r * r)
        g = 0.5 * math.sqrt(math.pi) * math.erf(math.sqrt(x)) - math.sqrt(x) * math.exp(-x)
        return g / (r * r * r)
    return _ligamma_core(s, x) * r ** (-float(d))


def radial_kernel(d: int, r: float) -> float:
    """gamma(d/2, r^2/2) * r^(-d); value 2^(1-d/2)/d at r = 0."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if r < 0.0:
        raise ValueError(f"radius must be >= 0, got {r}")
    return _radial_kernel_core(int(d), float(r))


def radial_kernel_vec(d: int, r: np.ndarray) -> np.ndarray:
    """Vectorized ``radial_kernel`` (numpy path; scipy supplies gamma/erf)."""
    r = np.asarray(r, dtype=float)
    s = 0.5 * d
    x = 0.5 * r * r
    small = r <= R_SWITCH
    out = np.empty_like(r)
    if np.any(small):
        xs = x[small]
        c = 2.0 ** (-s) * np.exp(-xs)
        out[small] = c * (
            1.0 / s + xs / (s * (s + 1.0)) + xs * xs / (s * (s + 1.0) * (s + 2.0))
        )
    big = ~small
    if np.any(big):
        xb = x[big]
        rb = r[big]
        if d == 1:
            g = np.sqrt(np.pi) * sps.erf(np.sqrt(xb))
        elif d == 2:
            g = -np.expm1(-xb)
        elif d == 3:
            g = np.where(
                xb < 0.01,
                sps.gammainc(s, xb) * math.gamma(s),
                0.5 * np.sqrt(np.pi) * sps.erf(np.sqrt(xb)) - np.sqrt(xb) * np.exp(-xb),
            )
        else:
            g = sps.gammainc(s, xb) * math.gamma(s)
        out[big] = g * rb ** (-float(d))
    return out
