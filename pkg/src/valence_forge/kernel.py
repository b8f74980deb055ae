"""Closed-form harmonic-measure map of interval unions and the strip map H0.

For an interval set ``X`` the map

    P(X, z) = (i / pi) * integral over X of dt / (z - t)

sends the upper half-plane into the strip ``0 < Re w < 1``.  On one interval
``(a, b)`` it equals ``(i / pi) * (log(z - a) - log(z - b))`` with arguments
taken in ``[0, pi]``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .intervals import IntervalSet

GUARD = 1e-14


class SingularPointError(ValueError):
    """Evaluation point sits on (or within the guard radius of) an endpoint."""


class StripDomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def _as_complex(z) -> np.ndarray:
    arr = np.asarray(z, dtype=complex)
    # collapse -0.0 so atan2 sees the real axis from above
    return arr.real + 1j * (arr.imag + 0.0)


def _check_upper(z: np.ndarray) -> None:
    if np.any(z.imag < 0):
        raise ValueError("points must lie in the closed upper half-plane")


def _guard(z: np.ndarray, a: float, b: float, guard: float) -> None:
    radius = guard * (b - a)
    if np.any(np.abs(z - a) <= radius) or np.any(np.abs(z - b) <= radius):
        raise SingularPointError(f"point within guard radius of endpoint of ({a}, {b})")


def log_ratio(z: np.ndarray, a: float, b: float) -> np.ndarray:
    """``log((z - a) / (z - b))`` for ``Im z >= 0``, imaginary part in ``[-pi, 0]``.

    Far from the interval the ratio is close to 1 and the ``log1p`` form keeps
    full relative accuracy; near the interval the two arguments are taken
    separately so that cancellation in ``1 + u`` does not matter.
    """
    x, y = z.real, z.imag
    xb = x - b
    den = xb * xb + y * y
    length = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        ure = length * xb / den
        uneg_im = length * y / den  # minus Im u, always >= 0
        mod2 = ure * ure + uneg_im * uneg_im
        far = mod2 < 0.25
        re_far = 0.5 * np.log1p(2.0 * ure + mod2)
        ang_far = -np.arctan2(uneg_im, 1.0 + ure)
        re_near = np.log(np.hypot(x - a, y)) - 0.5 * np.log(den)
        ang_near = np.arctan2(y, x - a) - np.arctan2(y, xb)
    re = np.where(far, re_far, re_near)
    ang = np.where(far, ang_far, ang_near)
    return re + 1j * ang


def poisson_interval(a: float, b: float, z, guard: float = GUARD):
    """P((a, b), z) for points of the closed upper half-plane."""
    if not a < b:
        raise ValueError(f"need a < b, got ({a}, {b})")
    arr = _as_complex(z)
    _check_upper(arr)
    _guard(arr, a, b, guard)
    out = 1j / math.pi * log_ratio(arr, a, b)
    return out if arr.ndim else complex(out)


def poisson(X: IntervalSet, z, guard: float = GUARD):
    """P(X, z) summed over the components of ``X``."""
    arr = _as_complex(z)
    _check_upper(arr)
    total = np.zeros(arr.shape, dtype=complex)
    for a, b in X:
        _guard(arr, a, b, guard)
        total += log_ratio(arr, a, b)
    out = 1j / math.pi * total
    return out if arr.ndim else complex(out)


def poisson_deriv(X: IntervalSet, z, guard: float = GUARD):
    """Derivative of ``P(X, .)``; a rational function valid off the endpoints."""
    arr = np.asarray(z, dtype=complex)
    total = np.zeros(arr.shape, dtype=complex)
    for a, b in X:
        _guard(arr, a, b, guard)
        total += 1.0 / (arr - a) - 1.0 / (arr - b)
    out = 1j / math.pi * total
    return out if arr.ndim else complex(out)


def poisson_quadrature_oracle(X: IntervalSet, z: complex, tol: float = 1e-10) -> complex:
    """Direct adaptive integration of ``(i/pi) * int_X dt / (z - t)``.

    Independent of the logarithm formulas; used to cross-check them.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("oracle needs Im z > 0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not X:
        return 0j
    x, y = z.real, z.imag
    share = tol / (2 * len(X))
    total = 0j
    err = 0.0
    for a, b in X:
        pts = [x] if a < x < b else None

        def re(t):
            return (x - t) / ((x - t) ** 2 + y * y)

        def im(t):
            return -y / ((x - t) ** 2 + y * y)

        vr, er = quad(re, a, b, points=pts, epsabs=share, epsrel=0.0, limit=500)
        vi, ei = quad(im, a, b, points=pts, epsabs=share, epsrel=0.0, limit=500)
        total += vr + 1j * vi
        err += er + ei
    if err > tol:
        raise QuadratureError(f"error estimate {err:.3g} exceeds tol {tol:.3g}")
    return 1j / math.pi * total


def h0(z, guard: float = GUARD):
    """Strip map H0(z) = P((-1, 1), z) from the upper half-plane onto 0 < Re < 1."""
    return poisson_interval(-1.0, 1.0, z, guard=guard)


def _cexpm1(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    s = np.sin(0.5 * y)
    return (np.expm1(x) * np.cos(y) - 2.0 * s * s) + 1j * (np.exp(x) * np.sin(y))


def h0_inv(w, allow_infinity: bool = False, slack: float = 1e-12):
    """Inverse strip map, ``H0^{-1}(w) = i * cot(pi * w / 2)``.

    Evaluated through ``expm1`` so points near ``w = 0`` (images of large
    ``z``) and points far up or down the strip stay accurate.  ``w = 0`` maps
    to infinity, which is returned as ``inf`` when ``allow_infinity`` is set.
    """
    arr = np.asarray(w, dtype=complex)
    if np.any(arr.real < -slack) or np.any(arr.real > 1 + slack):
        raise StripDomainError("h0_inv needs 0 <= Re w <= 1")
    zero = arr == 0
    if np.any(zero) and not allow_infinity:
        raise StripDomainError("w = 0 is the image of infinity")
    up = arr.imag >= 0
    e_up = _cexpm1(1j * math.pi * arr)
    e_dn = _cexpm1(-1j * math.pi * arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(up, (2.0 + e_up) / (-e_up), (2.0 + e_dn) / e_dn)
    out = np.where(zero, complex(math.inf, 0.0), out)
    out = out.real + 1j * np.maximum(out.imag, 0.0)
    return out if arr.ndim else complex(out)


def scale_translate(X: IntervalSet, a: float, c: float) -> IntervalSet:
    """The set ``a X + c``; satisfies ``P(aX + c, z) = P(X, (z - c) / a)``."""
    if not a > 0:
        raise ValueError(f"scale must be positive, got {a}")
    return X.scale_translate(a, c)
