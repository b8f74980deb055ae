"""Schwarz-Pick propagation of the Becker-type bound through self-maps of H.

If ``|F''/F'| <= tau / (2 Im w)`` on the half-plane and ``p`` maps the
half-plane into itself, then ``f = F o p`` satisfies the same bound, because
``|p'(z)| <= Im p(z) / Im z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .verify import VerificationReport


class SelfMapError(ValueError):
    """The map sends a sample point out of the upper half-plane."""


@dataclass(frozen=True)
class HalfPlaneMap:
    name: str
    f: Callable
    df: Callable

    def __call__(self, z):
        return self.f(z)


def identity_map() -> HalfPlaneMap:
    return HalfPlaneMap("identity", lambda z: z, lambda z: np.ones_like(z))


def dilation_map(k: float = 2.0) -> HalfPlaneMap:
    if not k > 0:
        raise ValueError("dilation factor must be positive")
    return HalfPlaneMap(f"{k!r}z", lambda z: k * z, lambda z: np.full_like(z, k))


def translation_map(t: complex = 1j) -> HalfPlaneMap:
    if complex(t).imag < 0:
        raise ValueError("translation must not move points downward")
    return HalfPlaneMap(f"z+{t!r}", lambda z: z + t, lambda z: np.ones_like(z))


def mobius_map(a: float, b: float, c: float, d: float) -> HalfPlaneMap:
    """``(a z + b) / (c z + d)`` with real coefficients and ``ad - bc > 0``."""
    det = a * d - b * c
    if not det > 0:
        raise ValueError("need ad - bc > 0 for a self-map of H")
    return HalfPlaneMap(
        f"mobius({a!r},{b!r},{c!r},{d!r})",
        lambda z: (a * z + b) / (c * z + d),
        lambda z: det / (c * z + d) ** 2,
    )


def sample_points(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5.0, 5.0, n)
    y = np.exp(rng.uniform(math.log(1e-3), math.log(10.0), n))
    return x + 1j * y


def check_becker_halfplane(
    F_logderiv: Callable,
    p: HalfPlaneMap,
    tau: float,
    samples: int = 1000,
    seed: int = 0,
) -> list[VerificationReport]:
    """Schwarz-Pick inequality for ``p`` and the composed bound for ``F o p``.

    ``F_logderiv`` evaluates ``F''/F'``.  Returns two reports: the ratio
    ``|p'| Im z / Im p`` against 1, and ``|f''/f'| * 2 Im z / tau`` against 1.
    """
    z = sample_points(samples, seed)
    pz = np.asarray(p(z), dtype=complex)
    if np.any(pz.imag <= 0):
        raise SelfMapError(f"{p.name} leaves the upper half-plane at a sample")
    dp = np.asarray(p.df(z), dtype=complex)
    sp = np.abs(dp) * z.imag / pz.imag
    # equality in the linear cases makes ratios of exactly 1 possible; the
    # inequality is non-strict so compare with a tiny allowance
    rep1 = VerificationReport.from_values(f"schwarz-pick[{p.name}]", "", 1.0 + 1e-12, sp, z)
    comp = np.abs(F_logderiv(pz) * dp) * 2.0 * z.imag / tau
    rep2 = VerificationReport.from_values(f"becker-composed[{p.name}]", "", 1.0 + 1e-12, comp, z,
                                          extra={"tau": tau})
    rep1.extra["max_equality_defect"] = float(np.max(np.abs(sp - 1.0)))
    return [rep1, rep2]


def extremal_logderiv(tau: float = 1.0) -> Callable:
    """Model log-derivative for ``F'(w) = w**(-tau/2)``.

    It has ``F''/F' = -tau / (2 w)`` and ``|F''/F'| =
    tau / (2 |w|) <= tau / (2 Im w)``; it serves as a test function saturating
    the bound on the imaginary axis.
    """
    return lambda w: -tau / (2.0 * np.asarray(w, dtype=complex))


def standard_maps() -> list[HalfPlaneMap]:
    return [
        identity_map(),
        dilation_map(2.0),
        translation_map(1j),
        mobius_map(2.0, 1.0, 1.0, 3.0),
        mobius_map(0.0, -1.0, 1.0, 0.0),
        mobius_map(1.0, -0.5, 0.25, 1.0),
    ]
