"""The map ``G(X, z) = int_0^z g'(H0^{-1}(P(X, t))) dt`` and its checks.

Sets built by the construction are only resolvable in node-local frames, so
``G`` differences are integrated along lifted paths: a vertical leg in the
frame of each node on the way up, a horizontal leg in the frame of the
common ancestor, then the mirror image down.  A leg in the frame of node
``j`` contributes ``s_j`` times its frame-unit integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .construction import ConstructionState, Node, ancestors, level_nodes, node_key
from .contour import ContourError, graded_breaks, segment_integral
from .intervals import IntervalSet
from .kernel import QuadratureError, h0_inv, poisson
from .seed import SeedConstants, SeedFunction, continue_zero, seed_z0
from .verify import VerificationReport


class AnnulusError(RuntimeError):
    """Integrand left the annulus R(m, M) allowed by the seed constants."""


class WindingError(RuntimeError):
    """The discretised loop does not give a trustworthy winding number."""


# ---------------------------------------------------------------------------
# strip-valued fields in local frames


class _SetField:
    """A single absolute frame for a representable interval set."""

    def __init__(self, X: IntervalSet):
        self.X = X

    def scale(self, anchor) -> float:
        return 1.0

    def poisson(self, omega, anchor=()):
        return poisson(self.X, np.asarray(omega, dtype=complex), guard=0.0)


class _StateField:
    def __init__(self, state: ConstructionState):
        self.state = state
        self.nodes = state.nodes()
        self._cache: dict = {}

    def scale(self, anchor) -> float:
        return self.state.scale(anchor)

    def poisson(self, omega, anchor=()):
        om = np.asarray(omega, dtype=complex)
        arrays = self._cache.get(anchor)
        if arrays is None:
            arrays = self.state._frame_arrays(anchor, self.nodes)
            self._cache[anchor] = arrays
        base, ratio = arrays
        w = base[:, None] + ratio[:, None] * om.ravel()[None, :]
        b1 = self.state.params.beta1
        from .construction import _interval_poisson

        return _interval_poisson(w, b1).sum(axis=0).reshape(om.shape)


class _FunctionField:
    """Direct strip-valued ``u``, giving ``G(u, z)``."""

    def __init__(self, u: Callable):
        self.u = u

    def scale(self, anchor) -> float:
        return 1.0

    def poisson(self, omega, anchor=()):
        return np.asarray(self.u(np.asarray(omega, dtype=complex)), dtype=complex)


@dataclass
class GMap:
    seed: SeedFunction
    X: object  # IntervalSet, ConstructionState or a strip-valued callable
    tol: float = 1e-10
    annulus: tuple[float, float] | None = None  # (m, M) to assert

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if isinstance(self.X, IntervalSet):
            if not self.X:
                raise ValueError("X must be nonempty")
            self.field = _SetField(self.X)
        elif isinstance(self.X, ConstructionState):
            self.field = _StateField(self.X)
        elif callable(self.X):
            self.field = _FunctionField(self.X)
        else:
            raise TypeError("X must be an IntervalSet, ConstructionState or callable")

    def integrand(self, omega, anchor=()):
        w = self.field.poisson(omega, anchor)
        vals = self.seed.gprime(h0_inv(w, allow_infinity=True, slack=1e-9))
        if self.annulus is not None:
            m, M = self.annulus
            mag = np.abs(vals)
            if np.any(mag > M * (1 + 1e-6)) or np.any(mag < m * (1 - 1e-6)):
                raise AnnulusError("integrand outside R(m, M)")
        return vals

    # -- absolute evaluation -------------------------------------------------

    def g_eval(self, z: complex, tol: float | None = None) -> tuple[complex, float]:
        """``G(X, z)`` along ``0 -> iH -> Re z + iH -> z`` with ``H = max(1, Im z)``.

        The path stays well above the set until the final vertical drop, whose
        quadrature is split geometrically towards ``z`` so that features at
        every scale below the drop are resolved.
        """
        tol = self.tol if tol is None else tol
        z = complex(z)
        if z.imag < 0:
            raise ValueError("z must lie in the closed upper half-plane")
        if z == 0:
            return 0j, 0.0
        H = max(1.0, z.imag)
        top = complex(z.real, H)
        drop = H - z.imag
        breaks = [1.0 - 10.0 ** -j for j in range(1, 17) if drop * 10.0 ** -j > z.imag * 1e-3]
        legs = [(0j, 1j * H, None), (1j * H, top, None), (top, z, breaks or None)]
        total, err = 0j, 0.0
        for a, b, pts in legs:
            if a == b:
                continue
            d = b - a

            def f(t, a=a, d=d):
                return complex(self.integrand(np.array([a + t * d]))[0]) * d

            # the error budget is enforced below; quad's own warnings are redundant
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegrationWarning)
                val, e = quad(f, 0.0, 1.0, complex_func=True, epsabs=tol / 6, epsrel=0.0, limit=400, points=pts)
            total += val
            # complex_func returns the two component error estimates as a complex number
            err += abs(complex(e).real) + abs(complex(e).imag)
        if not err <= tol:
            raise QuadratureError(f"G quadrature error {err:.3g} exceeds {tol:.3g}")
        return total, err

    # -- frame legs ------------------------------------------------------------

    def leg(self, anchor, w0: complex, w1: complex, fine: float | None = None, tol: float | None = None):
        """Frame-unit integral of the integrand from ``w0`` to ``w1`` in ``anchor``'s frame."""
        tol = self.tol if tol is None else tol
        return segment_integral(lambda w: self.integrand(w, anchor), complex(w0), complex(w1),
                                graded_breaks(4, fine), tol=tol, max_order=256)


# ---------------------------------------------------------------------------
# lifted paths on construction states


def _to_parent(state: ConstructionState, node: Node, omega: complex) -> complex:
    par = node[:-1]
    return (state.offset(node, par) + state.scale(node) * omega) / state.scale(par)


def ascend(gmap: GMap, node: Node, omega: complex, top: Node, height: float) -> tuple[complex, complex, float]:
    """Climb from ``omega`` in ``node``'s frame to ``Im = height`` in ``top``'s frame.

    Returns the end point (in ``top``'s frame), the ``G`` increment in
    ``top``-frame units and its error bound.
    """
    state = gmap.X
    s_top = state.scale(top)
    total, err = 0j, 0.0
    cur = complex(omega)
    while True:
        target = height if node == top else 1.0
        if cur.imag < target:
            start = cur.imag
            span = target - start
            fine = None
            if start < 1e-3 * span:
                fine = max(1e-6, start / span) if start > 0 else 1e-6
            v, e = gmap.leg(node, cur, complex(cur.real, target), fine=min(fine, 0.1) if fine else None)
            ratio = state.scale(node) / s_top
            total += ratio * v
            err += ratio * e
            cur = complex(cur.real, target)
        if node == top:
            return cur, total, err
        cur = _to_parent(state, node, cur)
        node = node[:-1]


def common_ancestor(u: Node, v: Node) -> Node:
    p = 0
    while p < min(len(u), len(v)) and u[p] == v[p]:
        p += 1
    return u[:p]


def g_difference(gmap: GMap, u: Node, v: Node, height: float | None = None):
    """``(G(x(v)) - G(x(u)), x(v) - x(u))`` in the frame of the common ancestor.

    Both values are expressed in that frame's units; their ratio is the
    difference quotient of ``G``.
    """
    state = gmap.X
    top = common_ancestor(u, v)
    if top in (u, v):
        raise ValueError("nodes must not be ancestors of one another")
    s_top = state.scale(top)
    wu = state.x_offset(u, top) / s_top
    wv = state.x_offset(v, top) / s_top
    if height is None:
        height = 0.5 * abs(wv - wu)
    pu, gu, eu = ascend(gmap, u, complex(state.records[u].omega), top, height)
    pv, gv, ev = ascend(gmap, v, complex(state.records[v].omega), top, height)
    panels = max(4, int(8 * abs(pv - pu) / max(height, 1e-300)))
    mid, em = segment_integral(lambda w: gmap.integrand(w, top), pu, pv, graded_breaks(panels),
                               tol=gmap.tol, max_order=256)
    dG = gu + mid - gv
    dx = math.fsum([state.x_offset(v, top), -state.x_offset(u, top)]) / s_top
    return dG, dx, eu + ev + em


def check_bilipschitz(
    gmap: GMap, state: ConstructionState, level: int, constants: SeedConstants, pairs: int = 500, seed: int = 0
) -> VerificationReport:
    """Sampled two-sided Lipschitz bounds of ``G`` on level-``level`` points of E.

    Each ``J(k)`` at the level is represented by its centring point ``x(k)``,
    around which all of ``E`` inside ``J(k)`` clusters.
    """
    if state.depth < level:
        raise ValueError("state depth below requested level")
    p = state.params
    if not p.eps <= constants.eta / (2 * math.pi):
        note = "eps > eta/(2 pi): hypothesis of the bound not met"
    else:
        note = ""
    reps = level_nodes(level, p.N)
    all_pairs = [(a, b) for i, a in enumerate(reps) for b in reps[i + 1:]]
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(all_pairs), size=min(pairs, len(all_pairs)), replace=False)
    idx.sort()
    lo_b, hi_b = abs(constants.b0) / 8.0, constants.M
    usage, where = [], []
    violations = 0
    min_ratio, max_ratio = math.inf, 0.0
    for i in idx:
        u, v = all_pairs[int(i)]
        dG, dx, err = g_difference(gmap, u, v)
        budget = 2.0 * (gmap.tol + err) / abs(dx)
        ratio = abs(dG) / abs(dx)
        min_ratio = min(min_ratio, ratio)
        max_ratio = max(max_ratio, ratio)
        # fraction of the allowed band used; 1 is the edge
        use = max(ratio / (hi_b + budget), (lo_b - budget) / ratio)
        violations += use >= 1.0
        usage.append(use)
        where.append(complex(dx))
    rep = VerificationReport.from_values("bilipschitz", f"level{level}", 1.0, usage, where)
    rep.extra = {"min_ratio": min_ratio, "max_ratio": max_ratio, "lower": lo_b, "upper": hi_b,
                 "violations": int(violations), "pairs": len(usage), "note": note}
    return rep


# ---------------------------------------------------------------------------
# argument principle


@dataclass
class LoopCount:
    winding: int
    raw: float
    min_distance: float
    closure_error: float
    points: int


def loop_values(gmap: GMap, anchor, center: complex, radius: float, start_value: complex, n: int,
                order: int = 8) -> tuple[np.ndarray, float]:
    """``F`` on ``n`` circle points, ``F`` integrated arc by arc from ``start_value``.

    Returns values at angles ``2 pi j / n`` (``j = 0..n``) and the closure
    error ``|F(end) - F(start)|``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    th0 = 2 * math.pi * np.arange(n) / n
    h = math.pi / n
    th = (th0[:, None] + h * (1 + x[None, :])).ravel()
    pts = center + radius * np.exp(1j * th)
    dz = 1j * radius * np.exp(1j * th)
    vals = gmap.integrand(pts, anchor).reshape(n, order) * dz.reshape(n, order)
    incr = h * (vals * w[None, :]).sum(axis=1)
    F = start_value + np.concatenate([[0j], np.cumsum(incr)])
    return F, abs(F[-1] - F[0])


def winding_number(F: np.ndarray, w: complex, refuse_below: float) -> LoopCount:
    d = F - w
    dist = float(np.min(np.abs(d)))
    if dist < refuse_below:
        raise WindingError(f"loop passes within {dist:.3g} of the target")
    turn = np.angle(d[1:] / d[:-1])
    if np.max(np.abs(turn)) > 0.5 * math.pi:
        raise WindingError("loop under-resolved: angular step above pi/2")
    raw = float(turn.sum() / (2 * math.pi))
    k = round(raw)
    return LoopCount(int(k), raw, dist, 0.0, len(F) - 1)


def count_loop(gmap: GMap, anchor, w: complex, center: complex, radius: float, start_value: complex,
               boundary_points: int = 4096, max_points: int = 1 << 16) -> LoopCount:
    """Winding of ``F(circle)`` around ``w`` with doubling until two counts agree."""
    n = boundary_points
    prev = None
    while True:
        F, closure = loop_values(gmap, anchor, center, radius, start_value, n)
        try:
            cnt = winding_number(F, w, 10 * gmap.tol)
        except WindingError:
            if n >= max_points:
                raise
            n *= 2
            continue
        cnt.closure_error = closure
        integral = abs(cnt.raw - cnt.winding) < 1e-3
        if integral and prev is not None and prev.winding == cnt.winding:
            return cnt
        if n >= max_points:
            if integral:
                return cnt
            raise WindingError(f"winding not integral ({cnt.raw:.6f})")
        prev = cnt if integral else None
        n *= 2


def count_preimages(gmap: GMap, w: complex, center: complex, radius: float, boundary_points: int = 4096) -> int:
    """Number of solutions of ``G(z) = w`` in ``Delta(center, radius)`` (absolute frame)."""
    center = complex(center)
    if not center.imag - radius > 0:
        raise ValueError("disk must lie in the open upper half-plane")
    start = center + radius
    g0, _ = gmap.g_eval(start)
    return count_loop(gmap, (), complex(w), center, radius, g0, boundary_points).winding


# ---------------------------------------------------------------------------
# valence demonstration


@dataclass
class ValenceReport:
    target_w: complex
    disks: list = field(default_factory=list)  # (level, node, center, radius, winding)
    total_preimages: int = 0
    disjoint: bool = True
    univalence_checks: list = field(default_factory=list)
    z_beta: complex = 0j
    rho: float = 0.0
    loops: list = field(default_factory=list, repr=False)  # optional image loops, not serialised

    @property
    def passed(self) -> bool:
        return self.disjoint and all(d["winding"] >= 1 for d in self.disks) and self.total_preimages >= len(self.disks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("loops")
        d["target_w"] = [self.target_w.real, self.target_w.imag]
        d["z_beta"] = [self.z_beta.real, self.z_beta.imag]
        d["passed"] = self.passed
        return d


def zero_at_beta(seed: SeedFunction, beta: float, steps: int = 8) -> complex:
    """Continue the zero pair of ``g_beta`` from ``beta = 0``."""
    z = seed_z0(seed)
    for b in np.linspace(0.0, beta, steps + 1)[1:]:
        z = continue_zero(seed, float(b), z)
    return z


def valence_demo(
    gmap: GMap,
    state: ConstructionState,
    constants: SeedConstants,
    depth: int,
    target: Sequence[int] | None = None,
    boundary_points: int = 4096,
    spot_checks: int = 5,
    keep_loops: int = 0,
) -> ValenceReport:
    """Count preimages of ``w = G(x*)`` in the scaled disks of every ancestor of ``x*``.

    ``x*`` is the centring point of a depth-``depth`` node.  In the frame of
    the level-``i`` ancestor the disk is ``Delta(z_beta1, rho)`` and the loop
    values are ``(G - G(x*)) / s_i``, so the target is 0.  With
    ``keep_loops > 0`` each level's loop is also kept at that many points.
    """
    if depth > state.depth:
        raise ValueError("depth exceeds the construction depth")
    p = state.params
    node = tuple(target) if target is not None else tuple([1] * depth)
    if len(node) != depth:
        raise ValueError("target node length must equal depth")
    zb = zero_at_beta(gmap.seed, p.beta1)
    rho = constants.rho
    report = ValenceReport(target_w=0j, z_beta=zb, rho=rho)
    omega_star = complex(state.records[node].omega)
    # absolute target, for the record only (lossy at depth)
    try:
        report.target_w = gmap.g_eval(complex(state.x(node), 0.0), tol=1e-8)[0] if depth == 1 else 0j
    except (QuadratureError, ContourError):
        report.target_w = 0j
    for level in range(1, depth + 1):
        anc = node[:level]
        start = zb + rho
        end, up, err = ascend(gmap, node, omega_star, anc, start.imag)
        across, e2 = segment_integral(lambda w: gmap.integrand(w, anc), end, start,
                                      graded_breaks(8), tol=gmap.tol, max_order=256)
        f_start = up + across
        cnt = count_loop(gmap, anc, 0j, zb, rho, f_start, boundary_points)
        report.disks.append({
            "level": level, "node": node_key(anc), "center_local": [zb.real, zb.imag], "radius_local": rho,
            "scale": state.scale(anc), "winding": cnt.winding, "raw": cnt.raw,
            "min_distance": cnt.min_distance, "closure_error": cnt.closure_error, "points": cnt.points,
        })
        report.total_preimages += cnt.winding
        if keep_loops:
            F, _ = loop_values(gmap, anc, zb, rho, f_start, keep_loops)
            report.loops.append(F)
        if level == 1 and spot_checks:
            report.univalence_checks = _spot_univalence(gmap, anc, zb, rho, f_start, boundary_points, spot_checks)
    # disks at consecutive levels: the deeper one sits within |w| < 2 beta1 of
    # the real axis of the shallower frame while the shallower disk stays above
    # Im z_beta - rho
    for level in range(1, depth):
        anc, child = node[:level], node[: level + 1]
        reach = abs(state.offset(child, anc)) / state.scale(anc) + state.scale(child) / state.scale(anc) * (abs(zb) + rho)
        if not (zb.imag - rho > 0 and reach < abs(zb) - rho and state.scale(child) / state.scale(anc) * (zb.imag + rho) < zb.imag - rho):
            report.disjoint = False
    return report


def _spot_univalence(gmap, anchor, zb, rho, f_start, n, count) -> list:
    """Winding 1 around images of interior points of the disk."""
    start = zb + rho
    out = []
    pts = [zb] + [zb + 0.5 * rho * np.exp(2j * math.pi * k / max(1, count - 1)) for k in range(count - 1)]
    for z in pts:
        v, _ = segment_integral(lambda w: gmap.integrand(w, anchor), start, complex(z),
                                graded_breaks(8), tol=gmap.tol, max_order=256)
        target = f_start + v
        cnt = count_loop(gmap, anchor, target, zb, rho, f_start, n)
        out.append({"point": [complex(z).real, complex(z).imag], "winding": cnt.winding})
    return out
