"""Finite-depth construction of the centred Cantor-type interval tree.

Nodes are tuples of integers in ``[1, N-1]``.  A node ``k`` of length ``l``
carries the copy ``I(k) = s_k * I + c(k)`` of ``I = (-1, 1) \\ [-beta1, beta1]``
with ``s_k = (alpha / 2) * gamma**(l - 1)``, and a centring point ``x(k)`` in
its gap where the imaginary part of P over all nodes of length ``<= l``
vanishes.

Level-3 intervals are far narrower than the spacing of doubles near their
absolute position, so positions are never stored absolutely.  Each node keeps
``step = c(k) - x(parent)`` and ``omega = (x(k) - c(k)) / s_k``; differences of
centres are rebuilt from these with an exactly rounded sum, and P is always
evaluated in the local frame ``z = c(anchor) + s_anchor * w`` of some node.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .intervals import IntervalSet
from .kernel import GUARD, SingularPointError, log_ratio

Node = tuple


class ConstraintViolation(ValueError):
    """A construction parameter inequality does not hold."""


class RootFindingError(RuntimeError):
    pass


class ResolutionError(ValueError):
    """Requested absolute coordinates are not representable in binary64."""


@dataclass(frozen=True)
class ConstructionParams:
    N: int
    eps: float
    beta1: float
    gamma1: float

    @property
    def alpha(self) -> float:
        return self.eps / (self.N * (1.0 + math.log(self.N)))

    @property
    def gamma(self) -> float:
        return 0.5 * self.gamma1 * self.alpha

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "eps": self.eps,
            "beta1": self.beta1,
            "gamma1": self.gamma1,
            "alpha": self.alpha,
            "gamma": self.gamma,
        }


def _smallness_violation(beta1: float, gamma1: float, eps: float, samples: int) -> float:
    """Largest |P(U, z)| seen for sets U in (-beta1/2, beta1/2) of measure gamma1.

    Single intervals pushed against either end are the extremal shapes; a
    split two-piece set is included as well.  Points cover the closed upper
    half-annulus ``beta1 <= |z| <= 1``.
    """
    half = 0.5 * beta1
    shapes = [
        [(half - gamma1, half)],
        [(-half, -half + gamma1)],
        [(-0.5 * gamma1, 0.5 * gamma1)],
        [(-half, -half + 0.5 * gamma1), (half - 0.5 * gamma1, half)],
    ]
    theta = np.linspace(0.0, math.pi, samples)
    radii = np.geomspace(beta1, 1.0, max(8, samples // 8))
    pts = (radii[:, None] * np.exp(1j * theta)[None, :]).ravel()
    pts = pts.real + 1j * np.maximum(pts.imag, 0.0)
    worst = 0.0
    for shape in shapes:
        total = np.zeros(pts.shape, dtype=complex)
        for a, b in shape:
            total += log_ratio(pts, a, b)
        worst = max(worst, float(np.max(np.abs(total))) / math.pi)
    return worst


def derive_params(
    N: int,
    eps: float,
    beta1: float,
    gamma1: float | None = None,
    check_smallness: bool = True,
    samples: int = 256,
) -> ConstructionParams:
    """Validate ``(N, eps, beta1, gamma1)`` and return the parameter record.

    ``gamma1`` defaults to ``eps * beta1 / 2``.
    """
    if gamma1 is None:
        gamma1 = 0.5 * eps * beta1
    if int(N) != N or N < 3:
        raise ConstraintViolation(f"N >= 3 violated (N={N})")
    for name, val in (("eps", eps), ("beta1", beta1), ("gamma1", gamma1)):
        if not (val > 0 and math.isfinite(val)):
            raise ConstraintViolation(f"{name} > 0 violated ({name}={val})")
    if not eps < 0.01:
        raise ConstraintViolation(f"eps < 1/100 violated (eps={eps})")
    if not beta1 < 0.01:
        raise ConstraintViolation(f"beta1 < 1/100 violated (beta1={beta1})")
    if not gamma1 < eps * beta1:
        raise ConstraintViolation(f"gamma1 < eps*beta1 violated (gamma1={gamma1})")
    params = ConstructionParams(int(N), float(eps), float(beta1), float(gamma1))
    if check_smallness:
        worst = _smallness_violation(beta1, gamma1, eps, samples)
        if not worst < eps:
            raise ConstraintViolation(
                f"gamma1 smallness |P(U,z)| < eps violated (max {worst:.3g})"
            )
    return params


# ---------------------------------------------------------------------------
# node relations


def validate_node(k: Sequence[int], N: int) -> Node:
    k = tuple(int(j) for j in k)
    if not k:
        raise ValueError("a node is a nonempty index sequence")
    if any(j < 1 or j > N - 1 for j in k):
        raise ValueError(f"node {k} has an index outside [1, {N - 1}]")
    return k


def parent(k: Node) -> Node:
    if len(k) <= 1:
        raise ValueError("a length-1 node has no parent")
    return k[:-1]


def ancestors(k: Node) -> list[Node]:
    """``A(k) = [a_l = k, a_{l-1}, ..., a_1]``."""
    return [k[:i] for i in range(len(k), 0, -1)]


def siblings(k: Node, N: int) -> list[Node]:
    return [k[:-1] + (j,) for j in range(1, N) if j != k[-1]]


def level_nodes(level: int, N: int) -> list[Node]:
    return [tuple(t) for t in itertools.product(range(1, N), repeat=level)]


def cousins(k: Node, N: int) -> list[Node]:
    """``C(k)``: every other node of the same length."""
    return [m for m in level_nodes(len(k), N) if m != k]


def restricted_tree(k: Node, N: int) -> list[Node]:
    """``K'(k)``: all nodes of length at most ``L(k)``."""
    return [m for lv in range(1, len(k) + 1) for m in level_nodes(lv, N)]


def is_descendant(m: Node, k: Node) -> bool:
    return len(m) > len(k) and m[: len(k)] == k


def node_relatives(k: Sequence[int], N: int, query: str) -> list[Node]:
    k = validate_node(k, N)
    if query == "parent":
        return [parent(k)]
    if query == "ancestors":
        return ancestors(k)
    if query == "siblings":
        return siblings(k, N)
    if query == "cousins":
        return cousins(k, N)
    if query == "restricted-tree":
        return restricted_tree(k, N)
    raise ValueError(f"unknown relation {query!r}")


def node_key(k: Node) -> str:
    return ".".join(str(j) for j in k)


def parse_node_key(text: str) -> Node:
    return tuple(int(p) for p in text.split(".")) if text else ()


# ---------------------------------------------------------------------------
# state


@dataclass
class NodeRecord:
    step: float  # c(k) - x(parent); for length-1 nodes this is c(k) itself
    omega: float = math.nan  # (x(k) - c(k)) / s_k
    residual: float = math.nan
    widened: bool = False

    @property
    def finalized(self) -> bool:
        return not math.isnan(self.omega)


def _interval_poisson(w: np.ndarray, beta1: float) -> np.ndarray:
    """P(I, w) for I = (-1, -beta1) u (beta1, 1); w in the closed upper half-plane."""
    return 1j / math.pi * (log_ratio(w, -1.0, -beta1) + log_ratio(w, beta1, 1.0))


def _interval_poisson_deriv(w: np.ndarray, beta1: float) -> np.ndarray:
    return 1j / math.pi * (
        1.0 / (w + 1.0) - 1.0 / (w + beta1) + 1.0 / (w - beta1) - 1.0 / (w - 1.0)
    )


@dataclass
class ConstructionState:
    params: ConstructionParams
    depth: int
    records: dict = field(default_factory=dict)
    finalized_level: int = 0
    tol: float = 1e-12

    # -- geometry ---------------------------------------------------------

    def nodes(self, level: int | None = None) -> list[Node]:
        if level is None:
            return [k for lv in range(1, self.finalized_level + 1) for k in level_nodes(lv, self.params.N)]
        return level_nodes(level, self.params.N)

    def scale(self, k: Node) -> float:
        """``s_k = (alpha/2) gamma**(L-1)``; the root frame has scale 1."""
        if not k:
            return 1.0
        p = self.params
        return 0.5 * p.alpha * p.gamma ** (len(k) - 1)

    def _shift(self, k: Node) -> float:
        if not k:
            return 0.0
        rec = self.records[k]
        if not rec.finalized:
            raise RootFindingError(f"x({node_key(k)}) not finalized")
        return self.scale(k) * rec.omega

    def _terms_below(self, k: Node, depth: int) -> list[float]:
        """Terms summing to ``c(k) - x(a)`` where ``a = k[:depth]``."""
        terms = []
        for i in range(depth + 1, len(k) + 1):
            terms.append(self.records[k[:i]].step)
            if i < len(k):
                terms.append(self._shift(k[:i]))
        return terms

    def _offset_terms(self, u: Node, v: Node) -> list[float]:
        if u == v:
            return []
        p = 0
        while p < min(len(u), len(v)) and u[p] == v[p]:
            p += 1
        terms = self._terms_below(u, p) + [-t for t in self._terms_below(v, p)]
        # c(a) - x(a) for the common ancestor when it is u or v itself
        if p == len(u) and u:
            terms.append(-self._shift(u))
        if p == len(v) and v:
            terms.append(self._shift(v))
        return terms

    def offset(self, u: Node, v: Node) -> float:
        """``c(u) - c(v)``, rounded once from exact path terms."""
        return math.fsum(self._offset_terms(u, v))

    def center(self, k: Node) -> float:
        return self.offset(k, ())

    def x_offset(self, k: Node, anchor: Node = ()) -> float:
        """``x(k) - c(anchor)``."""
        return math.fsum(self._offset_terms(k, anchor) + [self._shift(k)])

    def x(self, k: Node) -> float:
        return self.x_offset(k, ())

    def interval(self, k: Node) -> tuple[float, float, float, float]:
        """Absolute ``I(k)`` as ``(a, b, c, d)`` with ``I(k) = (a, b) u (c, d)``."""
        c = self.center(k)
        s = self.scale(k)
        b1 = self.params.beta1
        pts = (c - s, c - b1 * s, c + b1 * s, c + s)
        if not (pts[0] < pts[1] < pts[2] < pts[3]):
            raise ResolutionError(f"I({node_key(k)}) is not representable in absolute coordinates")
        return pts

    def X_truncated(self, max_level: int | None = None) -> IntervalSet:
        """Union of ``I(k)`` over built nodes as an absolute interval set."""
        top = self.finalized_level if max_level is None else min(max_level, self.finalized_level)
        pieces = []
        for lv in range(1, top + 1):
            for k in level_nodes(lv, self.params.N):
                a, b, c, d = self.interval(k)
                pieces += [(a, b), (c, d)]
        return IntervalSet(pieces)

    def e_cover(self, level: int) -> list[tuple[Node, float, float]]:
        """``E_level``: closed intervals ``closure(J(l))`` with their nodes."""
        out = []
        for k in level_nodes(level, self.params.N):
            c = self.center(k)
            s = self.scale(k)
            if not c - s < c + s:
                raise ResolutionError(f"J({node_key(k)}) is not representable")
            out.append((k, c - s, c + s))
        return out

    # -- local-frame evaluation -------------------------------------------

    def _frame_arrays(self, anchor: Node, nodes: Sequence[Node]) -> tuple[np.ndarray, np.ndarray]:
        sa = self.scale(anchor)
        d = np.array([self.offset(anchor, m) for m in nodes], dtype=float)
        s = np.array([self.scale(m) for m in nodes], dtype=float)
        return d / s, sa / s

    def local_args(self, omega, anchor: Node, nodes: Sequence[Node]) -> np.ndarray:
        """Normalised arguments ``(z - c(m)) / s_m`` for ``z = c(anchor) + s_anchor * omega``."""
        om = np.asarray(omega, dtype=complex)
        base, ratio = self._frame_arrays(anchor, nodes)
        return base.reshape((-1,) + (1,) * om.ndim) + ratio.reshape((-1,) + (1,) * om.ndim) * om

    def poisson(self, omega, anchor: Node = (), nodes: Iterable[Node] | None = None, guard: float = GUARD):
        """``P(X_nodes, c(anchor) + s_anchor * omega)`` for ``Im omega >= 0``."""
        nodes = self.nodes() if nodes is None else list(nodes)
        om = np.asarray(omega, dtype=complex)
        if not nodes:
            return np.zeros(om.shape, dtype=complex)
        w = self.local_args(om, anchor, nodes)
        w = w.real + 1j * (w.imag + 0.0)
        b1 = self.params.beta1
        near = np.min(np.abs(np.stack([w + 1, w + b1, w - b1, w - 1])), axis=0)
        if np.any(near <= guard):
            raise SingularPointError("evaluation point on an interval endpoint")
        return _interval_poisson(w, b1).sum(axis=0)

    def poisson_deriv(self, omega, anchor: Node = (), nodes: Iterable[Node] | None = None):
        """Derivative in the absolute variable ``z``; valid anywhere off the endpoints."""
        nodes = self.nodes() if nodes is None else list(nodes)
        om = np.asarray(omega, dtype=complex)
        if not nodes:
            return np.zeros(om.shape, dtype=complex)
        w = self.local_args(om, anchor, nodes)
        s = np.array([self.scale(m) for m in nodes]).reshape((-1,) + (1,) * om.ndim)
        return (_interval_poisson_deriv(w, self.params.beta1) / s).sum(axis=0)

    # -- invariants ---------------------------------------------------------

    def check_invariants(self) -> list[str]:
        """Geometric invariants; returns human-readable violations."""
        p = self.params
        problems = []
        for lv in range(1, self.finalized_level + 1):
            got = sum(1 for k in self.records if len(k) == lv)
            if got != (p.N - 1) ** lv:
                problems.append(f"level {lv} holds {got} records, expected {(p.N - 1) ** lv}")
        bound7 = 14.0 * p.eps * p.beta1
        for k in self.nodes():
            rec = self.records[k]
            if not abs(rec.omega) < bound7:
                problems.append(f"|x-c| bound 7*eps violated at {node_key(k)}")
            if len(k) > 1:
                par = k[:-1]
                # closure J(k) inside B(parent), in parent-frame units
                reach = abs(self.offset(k, par)) + self.scale(k)
                if not reach < p.beta1 * self.scale(par):
                    problems.append(f"J({node_key(k)}) leaves the gap of its parent")
            for sib in siblings(k, p.N):
                if sib > k and not abs(self.offset(k, sib)) > 2.0 * self.scale(k):
                    problems.append(f"J({node_key(k)}) meets J({node_key(sib)})")
        return problems

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        recs = {}
        for k in sorted(self.records, key=lambda t: (len(t), t)):
            rec = self.records[k]
            entry = {
                "level": len(k),
                "step": rec.step,
                "omega": rec.omega,
                "residual": rec.residual,
                "widened": rec.widened,
                "scale": self.scale(k),
            }
            if rec.finalized:
                entry["c_minus_parent_x"] = rec.step
                entry["x_minus_c"] = self._shift(k)
            recs[node_key(k)] = entry
        counts = {}
        for k in self.records:
            counts[str(len(k))] = counts.get(str(len(k)), 0) + 1
        return {
            "kind": "construction-state",
            "params": self.params.to_dict(),
            "depth": self.depth,
            "finalized_level": self.finalized_level,
            "tol": self.tol,
            "manifest": {"level_counts": dict(sorted(counts.items())), "total": len(self.records)},
            "records": recs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ConstructionState":
        pp = data["params"]
        params = ConstructionParams(int(pp["N"]), float(pp["eps"]), float(pp["beta1"]), float(pp["gamma1"]))
        state = cls(params, int(data["depth"]), tol=float(data.get("tol", 1e-12)))
        for key, entry in data["records"].items():
            state.records[parse_node_key(key)] = NodeRecord(
                step=float(entry["step"]),
                omega=float(entry["omega"]),
                residual=float(entry["residual"]),
                widened=bool(entry.get("widened", False)),
            )
        state.finalized_level = int(data["finalized_level"])
        return state

    @classmethod
    def from_json(cls, text: str) -> "ConstructionState":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# building


def center_step(k: Node, N: int, gamma: float) -> float:
    """``c(k) - x(parent)``: ``j/N`` at length 1, else ``(j/N - 1/2) gamma**l``."""
    j = k[-1]
    if len(k) == 1:
        return j / N
    return (j / N - 0.5) * gamma ** (len(k) - 1)


def center(k: Node, state: ConstructionState) -> float:
    """Absolute centre ``c(k)``; requires the parent's ``x`` to be finalized."""
    k = validate_node(k, state.params.N)
    if len(k) > 1 and (k[:-1] not in state.records or not state.records[k[:-1]].finalized):
        raise RootFindingError(f"parent of {node_key(k)} not finalized")
    if k not in state.records:
        state.records[k] = NodeRecord(step=center_step(k, state.params.N, state.params.gamma))
    return state.center(k)


def _bisect(f, lo: float, hi: float, tol: float, max_iter: int = 400) -> tuple[float, float]:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, 0.0
    if fhi == 0.0:
        return hi, 0.0
    if np.sign(flo) == np.sign(fhi):
        raise RootFindingError("no sign change in bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < tol:
            return mid, fm
        if mid in (lo, hi):
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    raise RootFindingError(f"tolerance {tol:g} not reached (last residual {fm:.3g})")


def solve_center_root(k: Node, state: ConstructionState, tol: float = 1e-12) -> float:
    """Find ``x(k)`` in the gap with ``|Im P(X_{K'(k)}, x(k))| < tol``.

    Works on the normalised variable ``w = (x - c(k)) / s_k``.  The bracket
    ``|w| <= beta1/4`` is tried first, then the whole gap.  Returns
    ``x(k) - c(k)``.
    """
    p = state.params
    lv = len(k)
    nodes = [m for m in level_nodes(lv, p.N) if m != k]
    nodes = [m for j in range(1, lv) for m in level_nodes(j, p.N)] + nodes
    base_other, ratio_other = state._frame_arrays(k, nodes)

    def f(w: float) -> float:
        own = _interval_poisson(np.array([w + 0j]), p.beta1)[0]
        if nodes:
            args = base_other + ratio_other * w
            other = _interval_poisson(args + 0j, p.beta1).sum()
        else:
            other = 0j
        return float((own + other).imag)

    rec = state.records[k]
    brackets = [0.25 * p.beta1, p.beta1 * (1.0 - 1e-9)]
    last_err = None
    for i, half in enumerate(brackets):
        try:
            w, res = _bisect(f, -half, half, tol)
        except RootFindingError as err:
            last_err = err
            continue
        rec.omega = w
        rec.residual = abs(res)
        rec.widened = i > 0
        return state.scale(k) * w
    raise RootFindingError(f"node {node_key(k)}: {last_err}")


def build_construction(
    params: ConstructionParams, depth: int, tol: float = 1e-12, threads: int = 1
) -> ConstructionState:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not params.alpha * params.gamma ** (depth - 1) > 1e-300:
        raise ValueError(f"depth {depth} underflows binary64 scales")
    state = ConstructionState(params, depth, tol=tol)
    for lv in range(1, depth + 1):
        level = level_nodes(lv, params.N)
        for k in level:
            center(k, state)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(lambda k: solve_center_root(k, state, tol), level))
        else:
            for k in level:
                solve_center_root(k, state, tol)
        state.finalized_level = lv
    return state


# ---------------------------------------------------------------------------
# classical Cantor sets


def classical_cantor(N: int, alpha: float, depth: int) -> list[list[tuple[float, float]]]:
    """Levels ``E_1 .. E_depth`` of the centred ``(N, alpha)`` Cantor set.

    Level ``m`` has ``(N-1)**m`` closed intervals of length ``(alpha/N)**m``.
    """
    if int(N) != N or N < 3:
        raise ValueError("N must be an integer >= 3")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ratio = alpha / N
    centers = [k / N for k in range(1, N)]
    levels = []
    for m in range(1, depth + 1):
        half = 0.5 * ratio ** m
        levels.append([(c - half, c + half) for c in centers])
        if m < depth:
            centers = [c + ratio ** m * (k / N - 0.5) for c in centers for k in range(1, N)]
    return levels
