"""Covering-count dimension estimates and the closed-form lower bound d(N)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class DimensionReport:
    levels_used: list
    two_scale_slope: float
    pair_slopes: list
    formula_s: float | None = None
    formula_dN: float | None = None
    cantor_reference: float | None = None
    estimator: str = "box-counting slope (upper bound for Hausdorff dimension)"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def box_dimension(levels: Sequence[tuple[int, float]], params=None) -> DimensionReport:
    """Average of ``log(n_{l+1}/n_l) / log(s_l/s_{l+1})`` over consecutive levels.

    ``levels`` holds ``(count, scale)`` pairs with strictly decreasing scales.
    When construction parameters are given the closed forms are attached.
    """
    levels = [(int(c), float(s)) for c, s in levels]
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    for c, s in levels:
        if c <= 0 or not s > 0:
            raise ValueError("counts and scales must be positive")
    for (_, s0), (_, s1) in zip(levels, levels[1:]):
        if not s1 < s0:
            raise ValueError("scales must decrease")
    slopes = [
        math.log(c1 / c0) / math.log(s0 / s1)
        for (c0, s0), (c1, s1) in zip(levels, levels[1:])
    ]
    rep = DimensionReport(levels_used=list(range(1, len(levels) + 1)),
                          two_scale_slope=math.fsum(slopes) / len(slopes), pair_slopes=slopes)
    if params is not None:
        rep.formula_s = math.log(params.N - 1) / math.log(1.0 / params.gamma)
        rep.formula_dN = dimension_formula(params.N, params.eps, params.gamma1)
        rep.cantor_reference = cantor_dimension(params.N, params.alpha)
    return rep


def construction_levels(params, depth: int) -> list[tuple[int, float]]:
    """``((N-1)**l, alpha * gamma**(l-1))``: counts and lengths of the ``J`` covers."""
    return [((params.N - 1) ** l, params.alpha * params.gamma ** (l - 1)) for l in range(1, depth + 1)]


def cantor_levels(N: int, alpha: float, depth: int) -> list[tuple[int, float]]:
    return [((N - 1) ** m, (alpha / N) ** m) for m in range(1, depth + 1)]


def cantor_dimension(N: int, alpha: float) -> float:
    """Similarity dimension ``log(N-1) / log(N/alpha)`` of the centred Cantor set."""
    return math.log(N - 1) / math.log(N / alpha)


def dimension_formula(N, eps: float, gamma1: float):
    """``d(N) = log(N-1) / (log N + log(1 + log N) + log(2 / (eps gamma1)))``.

    Accepts an array of ``N``.
    """
    n = np.asarray(N, dtype=float)
    if np.any(n < 3):
        raise ValueError("N must be >= 3")
    if not (0 < eps and 0 < gamma1):
        raise ValueError("eps and gamma1 must be positive")
    out = np.log(n - 1) / (np.log(n) + np.log1p(np.log(n)) + math.log(2.0 / (eps * gamma1)))
    return float(out) if out.ndim == 0 else out
