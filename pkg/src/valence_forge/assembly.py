"""Finite stages of the dense assembly ``Y_3 = X^(3), Y_4, ..., Y_n``.

Stage ``N`` places a scaled copy of ``X^(N)`` near the anchor ``p_N``:
into a free gap (case 1) or, when the anchor lies inside the current set,
into a small hole cut out around it first (case 2).  The copy is centred at
a real zero of ``P`` for the surrounding set plus two guard intervals, so
the surroundings barely disturb it.

Every copy carries a certificate: the largest ``|P(Y minus I(k), z)|`` over
its level-1 nodes ``k`` and the half-annulus regions around them, which must
stay below ``12 eps``.  After each later insertion all certificates are
re-evaluated; an insertion that degrades some earlier margin by more than
``margin_factor`` is retried in a smaller window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .construction import ConstructionParams, ConstructionState, build_construction, derive_params, level_nodes
from .intervals import IntervalSet
from .kernel import poisson
from .verify import region_points


class AssemblyError(ValueError):
    pass


@dataclass
class InsertedCopy:
    stage: int
    N: int
    tau: float
    delta: float
    state: ConstructionState
    pieces: IntervalSet
    margin0: float = math.nan


@dataclass
class AssemblyResult:
    Y: IntervalSet
    log: list = field(default_factory=list)
    copies: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "Y": [list(p) for p in self.Y],
            "log": self.log,
        }


def _copy_pieces(state: ConstructionState, delta: float, tau: float) -> IntervalSet:
    return state.X_truncated().scale_translate(delta, tau)


def certificate(Y: IntervalSet, copy: InsertedCopy, samples: int = 64, seed: int = 0) -> float:
    """``12 eps - max |P(Y minus I(k), z)|`` over the copy's level-1 regions."""
    p = copy.state.params
    ann = region_points("half-annulus", samples, seed, p.beta1)
    worst = 0.0
    for k in level_nodes(1, p.N):
        a, b, c, d = copy.state.interval(k)
        ck = copy.tau + copy.delta * copy.state.center(k)
        sk = copy.delta * copy.state.scale(k)
        own = IntervalSet([(copy.tau + copy.delta * a, copy.tau + copy.delta * b),
                           (copy.tau + copy.delta * c, copy.tau + copy.delta * d)])
        rest = [iv for iv in Y if not _inside(iv, own)]
        z = ck + sk * ann
        vals = np.abs(poisson(IntervalSet(rest), z, guard=0.0))
        worst = max(worst, float(vals.max()))
    return 12 * p.eps - worst


def _inside(iv, own: IntervalSet) -> bool:
    return any(a <= iv[0] and iv[1] <= b for a, b in own)


def _component(Y: IntervalSet, x: float):
    """``(left, right, inside)``: the component of Y or of its complement holding ``x``."""
    if Y.contains(x):
        for a, b in Y:
            if a < x < b:
                return a, b, True
    edges = Y.boundary()
    left = max([e for e in edges if e < x], default=-math.inf)
    right = min([e for e in edges if e > x], default=math.inf)
    return left, right, False


def wing_set(rho: float, tau: float) -> IntervalSet:
    """``rho * ((-1, -1/2) U (1/2, 1)) + tau``."""
    return IntervalSet([(tau - rho, tau - 0.5 * rho), (tau + 0.5 * rho, tau + rho)])


def balance_point(Y: IntervalSet, rho: float, tau: float) -> float:
    """Real zero of ``P(Y U wings, x)`` on ``tau + rho * (-1/2, 1/2)``.

    ``Y`` must keep clear of ``tau + rho * [-1, 1]``.  On that gap the
    function is purely imaginary and runs from ``+i inf`` to ``-i inf``.
    """
    Yw = Y.union(wing_set(rho, tau))

    def f(x):
        return float(np.imag(poisson(Yw, np.array([complex(x)]), guard=0.0))[0])

    lo, hi = tau - 0.5 * rho * (1 - 1e-9), tau + 0.5 * rho * (1 - 1e-9)
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 > fhi):
        raise AssemblyError(f"no sign change for the balance point near {tau!r}")
    return float(brentq(f, lo, hi, xtol=1e-3 * rho * 1e-9, rtol=1e-15))


def assemble_dense(
    anchors: Sequence[float],
    max_stage: int,
    sigma: float = 0.5,
    eps: float = 1 / 128,
    beta1: float = 1 / 128,
    gamma1: float | None = None,
    depth: int = 1,
    margin_factor: float = 2.0,
    samples: int = 64,
    shrink: float = 0.01,
    max_retries: int = 8,
) -> AssemblyResult:
    """Build ``Y_max_stage``; ``anchors[i]`` is ``p_{4+i}``.

    Stage ``N`` picks ``tau_N`` (the anchor, nudged by ``sigma / 2**(N+1)``
    if it sits on the boundary of the current set) and a window radius
    ``rho`` so that ``tau_N + rho * [-1, 1]`` lies inside one component of
    the set or of its complement.  An occupied window is cleared first
    (case 2, the deleted interval is logged).  The wings ``rho I' + tau_N``
    are added, the balance point ``q`` is found, and ``2 d X^(N) + q - d``
    is inserted with ``d = shrink * rho``, so the copy's offset stays within
    ``sigma / 2**N`` of the anchor.
    """
    if max_stage < 3:
        raise AssemblyError("max_stage must be >= 3")
    anchors = [float(a) for a in anchors]
    if len(anchors) < max_stage - 3:
        raise AssemblyError(f"need {max_stage - 3} anchors for stages 4..{max_stage}")
    if not all(math.isfinite(a) for a in anchors):
        raise AssemblyError("anchors must be finite")
    if not sigma > 0:
        raise AssemblyError("sigma must be positive")
    if not 0 < shrink <= 0.1:
        raise AssemblyError("shrink must lie in (0, 0.1]")

    def params(N: int) -> ConstructionParams:
        return derive_params(N, eps, beta1, gamma1)

    base = build_construction(params(3), depth)
    first = InsertedCopy(3, 3, 0.0, 1.0, base, _copy_pieces(base, 1.0, 0.0))
    Y = first.pieces
    first.margin0 = certificate(Y, first, samples)
    result = AssemblyResult(Y, copies=[first])
    result.log.append({"stage": 3, "N": 3, "case": "base", "anchor": None, "tau": None,
                       "offset": 0.0, "scale": 1.0, "rho": None, "removed": None,
                       "margin": first.margin0, "recertified": {}, "retries": 0})

    for N in range(4, max_stage + 1):
        p_n = anchors[N - 4]
        bound = sigma / 2 ** N
        tau = p_n
        if Y.on_boundary(tau):
            tau = p_n + 0.5 * bound
            if Y.on_boundary(tau):
                raise AssemblyError(f"anchor {p_n!r} sits on the boundary of Y_{N - 1}")
        left, right, inside = _component(Y, tau)
        # the copy offset moves by at most rho/2 + d from tau
        rho = min(0.8 * bound if tau != p_n else 1.6 * bound, 0.45 * (tau - left), 0.45 * (right - tau))
        state = build_construction(params(N), depth)
        for attempt in range(max_retries + 1):
            removed = None
            base_set = Y
            if inside:
                removed = (tau - 1.05 * rho, tau + 1.05 * rho)
                base_set = Y.remove(*removed)
            try:
                q = balance_point(base_set, rho, tau)
            except AssemblyError:
                rho *= 0.5
                continue
            d = shrink * rho
            scale, offset = 2 * d, q - d
            copy = InsertedCopy(N, N, offset, scale, state, _copy_pieces(state, scale, offset))
            trial = base_set.union(wing_set(rho, tau)).union(copy.pieces)
            margins = {str(prev.stage): certificate(trial, prev, samples) for prev in result.copies}
            ok = all(margins[str(prev.stage)] > prev.margin0 / margin_factor for prev in result.copies)
            own = certificate(trial, copy, samples)
            if ok and own > 0:
                copy.margin0 = own
                Y = trial
                result.copies.append(copy)
                result.log.append({
                    "stage": N, "N": N, "case": 2 if inside else 1, "anchor": p_n, "tau": tau,
                    "offset": offset, "scale": scale, "rho": rho,
                    "removed": list(removed) if removed else None, "margin": own,
                    "recertified": margins, "retries": attempt,
                })
                break
            rho *= 0.5
        else:
            raise AssemblyError(f"stage {N}: certificates could not be preserved")
    result.Y = Y
    return result
