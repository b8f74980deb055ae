"""Sampled certification of the construction inequalities.

Every check evaluates a supremum bound on low-discrepancy points of the
relevant region, in the normalised frame ``z = c(k) + s_k * w`` of the node
under test.  The reported margin is ``bound - observed_max``; it is an
empirical certificate, not a rigorous enclosure.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .construction import (
    ConstructionState,
    Node,
    ancestors,
    cousins,
    is_descendant,
    level_nodes,
    node_key,
    restricted_tree,
    siblings,
)
from .intervals import IntervalSet
from .kernel import GUARD, log_ratio, poisson


class PreconditionError(ValueError):
    """Inputs do not satisfy the hypothesis of the inequality being checked."""


@dataclass
class VerificationReport:
    check_id: str
    node: str
    bound: float
    observed_max: float
    samples: int
    margin: float
    passed: bool
    worst_point: complex = 0j
    skipped: int = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, check_id, node, bound, values, points, skipped=0, extra=None):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError(f"{check_id}: no usable samples")
        i = int(np.argmax(values))
        obs = float(values[i])
        margin = bound - obs
        return cls(
            check_id=check_id,
            node=node,
            bound=float(bound),
            observed_max=obs,
            samples=int(values.size),
            margin=float(margin),
            passed=bool(margin > 0),
            worst_point=complex(np.asarray(points).ravel()[i]),
            skipped=int(skipped),
            extra=dict(extra or {}),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_point"] = [self.worst_point.real, self.worst_point.imag]
        return d

    def summary(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        where = f"[{self.node}]" if self.node else ""
        return (
            f"{tag} {self.check_id}{where} observed={self.observed_max:.6g} "
            f"bound={self.bound:.6g} margin={self.margin:.3g} n={self.samples}"
        )


def reports_to_jsonl(reports: Sequence[VerificationReport]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in reports)


def reports_to_csv(reports: Sequence[VerificationReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check_id", "node", "bound", "observed_max", "margin", "pass"])
    for r in reports:
        writer.writerow([r.check_id, r.node, repr(r.bound), repr(r.observed_max), repr(r.margin), int(r.passed)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# sample regions, all in normalised coordinates


@lru_cache(maxsize=64)
def _halton(n: int, dim: int, seed: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, dim))
    out = qmc.Halton(d=dim, scramble=True, seed=seed).random(n)
    out.setflags(write=False)
    return out


def _interior(kind: str, n: int, seed: int, beta1: float) -> np.ndarray:
    u = _halton(n, 2, seed)
    if kind == "disk":
        r = np.sqrt(u[:, 0])
        th = 2.0 * math.pi * u[:, 1]
    elif kind == "half-disk":
        r = np.sqrt(u[:, 0])
        th = math.pi * u[:, 1]
    elif kind == "half-annulus":
        r = np.sqrt(beta1 ** 2 + u[:, 0] * (1.0 - beta1 ** 2))
        th = math.pi * u[:, 1]
    else:
        raise ValueError(kind)
    return r * np.cos(th) + 1j * (r * np.sin(th))


def _boundary(kind: str, n: int, seed: int, beta1: float) -> np.ndarray:
    """Points spread by arc length along the region boundary."""
    t = _halton(n, 1, seed + 7919)[:, 0]
    if kind == "disk":
        th = 2.0 * math.pi * t
        return np.cos(th) + 1j * np.sin(th)
    if kind == "half-disk":
        pieces = [("arc", 1.0, math.pi), ("seg", -1.0, 1.0)]
    elif kind == "half-annulus":
        pieces = [("arc", 1.0, math.pi), ("arc", beta1, math.pi * beta1),
                  ("seg", -1.0, -beta1), ("seg", beta1, 1.0)]
    else:
        raise ValueError(kind)
    lengths = []
    for p in pieces:
        lengths.append(p[2] if p[0] == "arc" else p[2] - p[1])
    edges = np.concatenate([[0.0], np.cumsum(lengths)]) / sum(lengths)
    out = np.empty(n, dtype=complex)
    for i, p in enumerate(pieces):
        sel = (t >= edges[i]) & (t < edges[i + 1] if i < len(pieces) - 1 else t <= 1.0)
        s = (t[sel] - edges[i]) / (edges[i + 1] - edges[i])
        if p[0] == "arc":
            th = math.pi * s
            out[sel] = p[1] * np.cos(th) + 1j * (p[1] * np.sin(th))
        else:
            out[sel] = p[1] + s * (p[2] - p[1])
    return out


def region_points(kind: str, samples: int, seed: int, beta1: float) -> np.ndarray:
    """``samples`` points, half interior and half on the boundary.

    Point sets are prefix-nested in ``samples`` for a fixed seed.
    """
    n_in = samples // 2
    pts = np.concatenate([_interior(kind, n_in, seed, beta1), _boundary(kind, samples - n_in, seed, beta1)])
    if kind != "disk":
        pts = pts.real + 1j * np.maximum(pts.imag, 0.0)
    return pts


# ---------------------------------------------------------------------------
# frame evaluation with guard skipping


def _usable(state: ConstructionState, omega, anchor, nodes, guard=GUARD) -> np.ndarray:
    if not nodes:
        return np.ones(np.shape(omega), dtype=bool)
    w = state.local_args(omega, anchor, nodes)
    b1 = state.params.beta1
    near = np.min(np.abs(np.stack([w + 1, w + b1, w - b1, w - 1])), axis=(0, 1))
    return near > guard * (1.0 - b1)


def _eval(state, omega, anchor, nodes, deriv=False):
    ok = _usable(state, omega, anchor, nodes)
    pts = omega[ok]
    if deriv:
        vals = state.poisson_deriv(pts, anchor=anchor, nodes=nodes)
    else:
        vals = state.poisson(pts, anchor=anchor, nodes=nodes, guard=0.0)
    return np.abs(vals), pts, int((~ok).sum())


def _j_poisson(state, omega, anchor, nodes):
    """``sum_m P(J(m), z)`` with ``J(m) = c(m) + s_m (-1, 1)``."""
    if not nodes:
        return np.zeros(omega.shape, dtype=complex)
    w = state.local_args(omega, anchor, nodes)
    return (1j / math.pi * log_ratio(w, -1.0, 1.0)).sum(axis=0)


# ---------------------------------------------------------------------------
# per-node checks


def _subtree(state: ConstructionState, root: Node) -> list[Node]:
    return [m for m in state.nodes() if m == root or is_descendant(m, root)]


def lemma1_report(state: ConstructionState, k: Node) -> VerificationReport:
    """Nesting of the ancestor disks; exact ratios, bound 1."""
    p = state.params
    chain = ancestors(k)[::-1]
    ratios = [0.0]
    for prev, cur in zip(chain, chain[1:]):
        r_prev = 0.25 * p.alpha * p.beta1 * p.gamma ** (len(prev) - 1)
        r_cur = 0.25 * p.alpha * p.beta1 * p.gamma ** (len(cur) - 1)
        ratios.append((abs(state.offset(cur, prev)) + r_cur) / r_prev)
    return VerificationReport.from_values("lemma1", node_key(k), 1.0, ratios, np.zeros(len(ratios)))


def node_reports(state: ConstructionState, k: Node, samples: int, seed: int) -> list[VerificationReport]:
    p = state.params
    N, eps, b1 = p.N, p.eps, p.beta1
    lv = len(k)
    key = node_key(k)
    gl = p.gamma ** (lv - 1)
    all_nodes = state.nodes()
    reports = [lemma1_report(state, k)]

    # Lemma 2: siblings' subtrees, derivative on the full disk
    sib_nodes = [m for s in siblings(k, N) for m in _subtree(state, s)]
    disk = region_points("disk", samples, seed, b1)
    vals, pts, skip = _eval(state, disk, k, sib_nodes, deriv=True)
    reports.append(VerificationReport.from_values("lemma2", key, 8 * p.alpha * N * N / gl, vals, pts, skip))

    # Lemma 3: ancestors, derivative on |w| < beta1/2
    small = 0.5 * b1 * region_points("disk", samples, seed, b1)
    vals, pts, skip = _eval(state, small, k, ancestors(k), deriv=True)
    reports.append(VerificationReport.from_values("lemma3", key, 4.0 / (p.alpha * b1 * gl), vals, pts, skip))

    # Lemma 4: cousins, with Y_m their built subtrees and with Y_m = J(m)
    half = region_points("half-disk", samples, seed, b1)
    cz = cousins(k, N)
    cousin_tree = [m for c in cz for m in _subtree(state, c)]
    vals, pts, skip = _eval(state, half, k, cousin_tree)
    jvals = np.abs(_j_poisson(state, half, k, cz))
    jmax = float(jvals.max())
    reports.append(VerificationReport.from_values(
        "lemma4", key, 4 * eps, vals, pts, skip,
        extra={"mode": "tree", "observed_max_J": jmax, "pass_J": bool(jmax < 4 * eps)},
    ))

    # Lemma 5: descendants on the half-annulus
    ann = region_points("half-annulus", samples, seed, b1)
    desc = [m for m in all_nodes if is_descendant(m, k)]
    vals, pts, skip = _eval(state, ann, k, desc)
    reports.append(VerificationReport.from_values("lemma5", key, eps, vals, pts, skip,
                                                  extra={"descendants": len(desc)}))

    # restricted tree: K'(k) minus k on the closed half-disk; also record the 4 eps form
    kp = [m for m in restricted_tree(k, N) if m != k]
    vals, pts, skip = _eval(state, half, k, kp)
    obs = float(vals.max())
    reports.append(VerificationReport.from_values(
        "restricted-disk", key, 7 * eps, vals, pts, skip,
        extra={"bound_4eps": 4 * eps, "pass_4eps": bool(obs < 4 * eps)},
    ))

    # restricted tree near x(k): K'(k) around x(k), radius gamma**l, i.e. gamma1 in this frame
    rec = state.records[k]
    around = rec.omega + p.gamma1 * region_points("half-disk", samples, seed, b1)
    vals, pts, skip = _eval(state, around, k, restricted_tree(k, N))
    reports.append(VerificationReport.from_values("restricted-near-x", key, 3 * eps, vals, pts, skip))

    # all other nodes: everything except k on the half-annulus
    rest = [m for m in all_nodes if m != k]
    vals, pts, skip = _eval(state, ann, k, rest)
    reports.append(VerificationReport.from_values("others-annulus", key, 12 * eps, vals, pts, skip))

    # centring residual and offset, both from the stored records
    reports.append(VerificationReport.from_values(
        "centering", key, 14 * eps * b1, [abs(rec.omega)], [rec.omega],
        extra={"residual": rec.residual, "bound_4eps": 8 * eps * b1,
               "pass_4eps": bool(abs(rec.omega) < 8 * eps * b1)},
    ))
    return reports


def check_construction_bounds(
    state: ConstructionState, samples_per_node: int = 400, seed: int = 0, threads: int = 1
) -> list[VerificationReport]:
    """Run the full bound suite, one report per (check, node)."""
    if state.finalized_level < state.depth:
        raise PreconditionError(
            f"state finalized to level {state.finalized_level}, declared depth {state.depth}"
        )
    if samples_per_node < 2:
        raise ValueError("samples_per_node must be >= 2")
    nodes = state.nodes()

    def run(k):
        return node_reports(state, k, samples_per_node, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, nodes))
    else:
        chunks = [run(k) for k in nodes]
    return [r for chunk in chunks for r in chunk]


# ---------------------------------------------------------------------------
# Lemma 7


def lemma7_bound(T: float, eta: float) -> float:
    return (3.0 / T + 2.0 * eta) / math.pi


def admissible_density(b: float, N: int, eta: float) -> float:
    return eta * b / (N * (1.0 + math.log(N)))


def maximal_periodic_set(b: float, N: int, eta: float) -> IntervalSet:
    """One interval of the largest admissible length at the start of each window."""
    ell = admissible_density(b, N, eta)
    return IntervalSet((j * b / N, j * b / N + ell) for j in range(N))


def check_lemma7(
    X: IntervalSet, b: float, N: int, eta: float, T: float, grid: int = 10_000, rel_tol: float = 1e-12
) -> VerificationReport:
    """|P(X, x + i T b eta / N)| on ``x`` in ``[0, b]`` against ``(3/T + 2 eta)/pi``."""
    if not (b > 0 and N >= 2 and eta > 0 and T > 0 and grid >= 2):
        raise ValueError("need b > 0, N >= 2, eta > 0, T > 0, grid >= 2")
    if X and (X.intervals[0][0] < 0 or X.intervals[-1][1] > b):
        raise PreconditionError("X must lie in [0, b]")
    cap = admissible_density(b, N, eta)
    worst = X.max_window_measure(b / N)
    if worst > cap * (1.0 + rel_tol):
        raise PreconditionError(f"density hypothesis violated: window measure {worst:.6g} > {cap:.6g}")
    height = T * b * eta / N
    xs = np.linspace(0.0, b, grid)
    pts = xs + 1j * height
    vals = np.abs(poisson(X, pts)) if X else np.zeros(grid)
    return VerificationReport.from_values(
        "lemma7", "", lemma7_bound(T, eta), vals, pts,
        extra={"window_measure": worst, "density_cap": cap, "height": height},
    )
