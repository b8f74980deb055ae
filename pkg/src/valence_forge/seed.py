"""Seed functions g and the constants that depend only on g.

A seed is an evaluator of ``g'`` on the closed upper half-plane.  The
normalisation pipeline turns a nonunivalent ``g0`` into ``g`` with

* ``g'`` analytic and nonvanishing on the closed half-plane,
* ``g'(inf) = b0 != 0``,
* ``g(z0) = g(0) = 0`` for some ``z0`` in the upper half-plane with ``|z0| = 1/2``.

The construction composes ``g0'`` with a Moebius map ``q_r`` of the
half-plane onto a compact disk in the half-plane, finds two points with equal
antiderivative values and rescales.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .contour import ContourError, graded_breaks, segment_integral
from .kernel import h0, h0_inv, log_ratio


class SeedError(RuntimeError):
    pass


class CollisionNotFound(SeedError):
    pass


class ConstantsError(SeedError):
    pass


# ---------------------------------------------------------------------------
# the disk map


def qr_map(r: float, z):
    """Conformal map of the half-plane onto ``Delta(r i, r - 1/r)``.

    Normalised by ``q_r(i) = i`` and ``q_r'(i) > 0``.  The point at infinity
    goes to ``(2r - 1/r) i`` and the pole sits at ``-(2r + 1) i``.
    """
    if not r > 1:
        raise ValueError(f"q_r needs r > 1, got {r}")
    arr = np.asarray(z, dtype=complex)
    rho = r - 1.0 / r
    p = -1j * r / (r + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = 1j * (arr - 1j) / (arr + 1j)
        out = 1j * r + rho * (phi + p) / (1.0 + np.conj(p) * phi)
    inf = ~np.isfinite(arr)
    if np.any(inf):
        out = np.where(inf, 1j * (2.0 * r - 1.0 / r), out)
    return out if arr.ndim else complex(out)


def qr_deriv(r: float, z):
    """Derivative of ``q_r``."""
    arr = np.asarray(z, dtype=complex)
    rho = r - 1.0 / r
    p = -1j * r / (r + 1.0)
    phi = 1j * (arr - 1j) / (arr + 1j)
    dphi = -2.0 / (arr + 1j) ** 2
    dpsi = (1.0 - abs(p) ** 2) / (1.0 + np.conj(p) * phi) ** 2
    out = rho * dpsi * dphi
    return out if arr.ndim else complex(out)


# ---------------------------------------------------------------------------
# seed evaluators


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass
class SeedFunction:
    """Evaluator of ``g'`` with its limit ``b0`` at infinity (when it has one)."""

    gprime_raw: Evaluator
    description: str
    origin: str  # "built-in" | "normalized" | "user"
    b0: complex | None = None
    meta: dict = field(default_factory=dict)

    def gprime(self, z):
        arr = np.asarray(z, dtype=complex)
        finite = np.isfinite(arr)
        if np.all(finite):
            out = np.asarray(self.gprime_raw(arr), dtype=complex)
        else:
            if self.b0 is None:
                raise SeedError("seed has no limit at infinity")
            out = np.full(arr.shape, self.b0, dtype=complex)
            if np.any(finite):
                out[finite] = self.gprime_raw(arr[finite])
        return out if arr.ndim else complex(out)

    __call__ = gprime

    def g(self, z, tol: float = 1e-13) -> complex:
        """Antiderivative with ``g(0) = 0`` along the segment ``[0, z]``."""
        val, _ = segment_integral(self.gprime, 0j, complex(z), tol=tol)
        return val

    def to_dict(self) -> dict:
        out = {"description": self.description, "origin": self.origin}
        if self.b0 is not None:
            out["b0"] = [self.b0.real, self.b0.imag]
        out.update(self.meta)
        return out


def exp_seed(c: float = 1.0) -> SeedFunction:
    """Built-in ``g0'(z) = exp(i c z)``; its antiderivative is periodic along R."""
    if not c > 0:
        raise ValueError("c must be positive")
    return SeedFunction(
        lambda z: np.exp(1j * c * z),
        description=f"exp(i*{c!r}*z)",
        origin="built-in",
        meta={"family": "exp", "c": c},
    )


def constant_seed(b0: complex = 1.0) -> SeedFunction:
    """Degenerate ``g' = b0`` used to test the machinery; not a valid Lemma seed."""
    b0 = complex(b0)
    return SeedFunction(
        lambda z: np.full(np.shape(z), b0, dtype=complex),
        description=f"constant {b0!r}",
        origin="built-in",
        b0=b0,
        meta={"family": "constant"},
    )


def _coef(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise SeedError(f"complex coefficient must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def user_seed(spec: dict) -> SeedFunction:
    """Rational-plus-exponential template.

    ``g0'(z) = num(z) / den(z) + sum_j amp_j * exp(i * freq_j * z)`` where
    ``num`` and ``den`` list polynomial coefficients from the constant term
    up, complex values written as ``[re, im]``, and ``exp`` lists
    ``[amp, freq]`` pairs with real ``freq``.
    """
    num = [_coef(v) for v in spec.get("num", [0.0])]
    den = [_coef(v) for v in spec.get("den", [1.0])]
    terms = [(_coef(a), float(f)) for a, f in spec.get("exp", [])]
    if not any(den):
        raise SeedError("denominator is identically zero")
    num_p = np.polynomial.Polynomial(num)
    den_p = np.polynomial.Polynomial(den)

    def gp(z):
        z = np.asarray(z, dtype=complex)
        out = num_p(z) / den_p(z)
        for amp, freq in terms:
            out = out + amp * np.exp(1j * freq * z)
        return out

    return SeedFunction(gp, description=json.dumps(spec, sort_keys=True), origin="user",
                        meta={"family": "user", "template": spec})


def load_seed(name: str, c: float = 1.0) -> SeedFunction:
    """``"exp"`` or ``"user:<path-to-json>"``."""
    if name == "exp":
        return exp_seed(c)
    if name.startswith("user:"):
        path = Path(name[5:])
        if not path.is_file():
            raise FileNotFoundError(f"user seed file {path} not found")
        return user_seed(json.loads(path.read_text()))
    raise ValueError(f"unknown seed {name!r}; use 'exp' or 'user:<path>'")


# ---------------------------------------------------------------------------
# normalisation


@dataclass
class Collision:
    a: complex
    b: complex
    residual: float
    score: float  # Im(b - a) / |b - a|


def _seg(fp, a: complex, b: complex) -> complex:
    val, _ = segment_integral(fp, a, b, graded_breaks(8), tol=1e-14, order=16, max_order=256)
    return val


def _newton_partner(fp, a: complex, b: complex, floor: float, iters: int = 80) -> tuple[complex, float] | None:
    """Damped Newton on ``b -> f(b) - f(a)`` with ``a`` fixed."""
    for _ in range(iters):
        try:
            F = _seg(fp, a, b)
        except ContourError:
            return None
        d = fp(b)
        if d == 0 or not np.isfinite(F):
            return None
        step = F / d
        if abs(step) > 1.0:
            step /= abs(step)
        b = b - step
        if b.imag < floor:
            b = complex(b.real, floor)
        if abs(step) < 1e-14 * max(1.0, abs(b)):
            try:
                return b, abs(_seg(fp, a, b))
            except ContourError:
                return None
    return None


def find_collision(
    fp: Evaluator,
    heights=(0.0, 0.5, 1.0, 2.0),
    reals=tuple(np.linspace(-12.0, 12.0, 13)),
    offsets=(2 * math.pi + 0.3j, -2 * math.pi + 0.3j, 4.0 + 0.5j, -4.0 + 0.5j),
    min_separation: float = 1e-3,
    residual_tol: float = 1e-11,
    threads: int = 1,
) -> Collision:
    """Grid-seeded search for ``a != b`` with ``f(a) = f(b)`` and ``Im(b - a) > 0``.

    ``a`` runs over points of horizontal lines; for each seed offset ``b`` is
    driven to a root of ``f(b) - f(a)``.  The collision with ``b - a``
    furthest from the real axis (in angle) wins.
    """
    starts = [(complex(x, s), complex(x, s) + d, s) for s in heights for x in reals for d in offsets]

    def run(item):
        a, b, s = item
        got = _newton_partner(fp, a, b, s)
        if got is None:
            return None
        b, res = got
        gap = b - a
        if abs(gap) < min_separation or gap.imag <= 1e-9 or res > residual_tol:
            return None
        return Collision(a, b, res, gap.imag / abs(gap))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(run, starts))
    else:
        found = [run(s) for s in starts]
    found = [c for c in found if c is not None]
    if not found:
        raise CollisionNotFound("no collision found within the search budget")
    return max(found, key=lambda c: (round(c.score, 12), -c.residual))


def build_normalized_seed(g0: SeedFunction, r: float, threads: int = 1, **search) -> SeedFunction:
    """Normalised seed from ``g0`` composed with ``q_r``."""
    if not r > 1:
        raise ValueError("r must exceed 1")

    def fp(z):
        return g0.gprime(qr_map(r, z))

    col = find_collision(fp, threads=threads, **search)
    if col.a == col.b:
        raise SeedError("degenerate collision a = b")
    return _normalized(g0, r, col.a, col.b, col.residual)


def _normalized(g0: SeedFunction, r: float, a: complex, b: complex, residual: float) -> SeedFunction:
    top = 1j * (2.0 * r - 1.0 / r)
    lam = 2.0 * abs(b - a)
    b0 = complex(g0.gprime(np.array([top]))[0])
    if b0 == 0:
        raise SeedError("g0' vanishes at q_r(inf)")

    def gp(z):
        return g0.gprime(qr_map(r, lam * np.asarray(z, dtype=complex) + a))

    z0 = (b - a) / lam
    return SeedFunction(
        gp,
        description=f"{g0.description} o q_{r!r}, normalised",
        origin="normalized",
        b0=b0,
        meta={
            "r": r,
            "collision_a": [a.real, a.imag],
            "collision_b": [b.real, b.imag],
            "collision_residual": residual,
            "scale": lam,
            "z0": [z0.real, z0.imag],
        },
    )


def normalized_from_meta(g0: SeedFunction, meta: dict) -> SeedFunction:
    """Rebuild a normalised seed from the ``meta`` of an earlier run, skipping the search."""
    try:
        a = complex(*meta["collision_a"])
        b = complex(*meta["collision_b"])
        return _normalized(g0, float(meta["r"]), a, b, float(meta["collision_residual"]))
    except (KeyError, TypeError) as exc:
        raise SeedError(f"incomplete normalised seed record: {exc}") from None


def seed_z0(seed: SeedFunction) -> complex:
    z = seed.meta.get("z0")
    if z is None:
        raise SeedError("seed carries no normalised zero z0")
    return complex(z[0], z[1])


# ---------------------------------------------------------------------------
# g-dependent constants


def strip_samples(n_re: int = 41, n_im: int = 121, ymax: float = 30.0) -> np.ndarray:
    """A grid on the closed strip ``0 <= Re w <= 1``; covers the closed half-plane via ``h0_inv``.

    Imaginary parts are spaced by ``asinh`` so both ends of the strip are
    reached; ``w = 0`` (infinity) is included.
    """
    re = np.linspace(0.0, 1.0, n_re)
    im = np.sinh(np.linspace(-math.asinh(ymax), math.asinh(ymax), n_im))
    w = (re[:, None] + 1j * im[None, :]).ravel()
    return np.concatenate([w, [0j]])


def _g_beta_integrand(seed: SeedFunction, beta: float):
    def f(z):
        z = np.asarray(z, dtype=complex)
        if beta == 0.0:
            return seed.gprime(z)
        hb = 1j / math.pi * (log_ratio(z, -1.0, -beta) + log_ratio(z, beta, 1.0))
        return seed.gprime(h0_inv(hb, allow_infinity=True, slack=1e-9))

    return f


def g_beta(seed: SeedFunction, beta: float, z: complex, tol: float = 1e-13) -> complex:
    """``g_beta(z) = int_0^z g'(H0^{-1}(P(I(beta), t))) dt`` along ``[0, z]``."""
    fine = beta / max(abs(z), 1e-300) * 1e-3 if beta > 0 else None
    val, _ = segment_integral(_g_beta_integrand(seed, beta), 0j, complex(z),
                              graded_breaks(8, fine), tol=tol, max_order=256)
    return val


def continue_zero(seed: SeedFunction, beta: float, start: complex, iters: int = 40) -> complex:
    """Newton for the nonzero zero of ``g_beta`` near ``start``."""
    f = _g_beta_integrand(seed, beta)
    z = complex(start)
    for _ in range(iters):
        val = g_beta(seed, beta, z)
        d = complex(f(np.array([z]))[0])
        step = val / d
        if abs(step) > 0.05:
            step *= 0.05 / abs(step)
        z -= step
        if z.imag <= 0:
            raise SeedError("zero continuation left the half-plane")
        if abs(step) < 1e-14:
            return z
    raise SeedError("zero continuation did not converge")


def univalence_constants(m: float, M: float) -> tuple[float, float]:
    """``(A, B)`` with: ``f'(Delta) in R(m, M)`` implies ``f`` univalent on
    ``Delta(A)`` and ``f(Delta(A)) contains Delta(f(0), B)``.

    ``log f'`` maps the disk into a vertical strip of width ``W = log(M/m)``.
    Hyperbolic contraction keeps ``|arg f'(z) - arg f'(0)| < pi/2`` while
    ``artanh |z| < pi^2 / (4 W)``, so ``Re(e^{-i arg f'(0)} f') > 0`` there and
    the Noshiro-Warschawski criterion applies.  Koebe's quarter theorem on
    ``f(A z) / (A f'(0))`` gives ``B = A m / 4``.
    """
    if not (0 < m <= M):
        raise ConstantsError("need 0 < m <= M")
    width = math.log(M / m)
    A = 1.0 if width == 0 else min(1.0, math.tanh(math.pi ** 2 / (4.0 * width)))
    return A, A * m / 4.0


@dataclass
class SeedConstants:
    b0: complex
    m: float
    M: float
    delta: float
    T: float
    eta: float
    A: float
    B_koebe: float
    xi: float
    rho: float
    r_cov: float
    r_cov_local: float
    z_beta: complex
    beta2: float
    eps1: float
    M1: float
    beta3: float
    c0: float
    eps0: float
    beta1_rec: float
    eps_rec: float
    safety: float
    heuristic: dict = field(default_factory=dict)

    def check_invariants(self) -> list[str]:
        bad = []
        if not (0 < self.m <= self.M):
            bad.append("0 < m <= M")
        if not (self.m * (1 - 1e-12) <= abs(self.b0) <= self.M * (1 + 1e-12)):
            bad.append("|b0| in [m, M]")
        if not math.isclose(self.T * math.pi * self.delta, 24.0, rel_tol=1e-12):
            bad.append("T = 24/(pi delta)")
        cap = min(math.pi * self.delta / 24, math.pi * self.delta * abs(self.b0) / (96 * self.M),
                  abs(self.b0) / (8 * self.M))
        if not self.eta < cap:
            bad.append("eta bound")
        if not math.isclose(self.c0, min(self.r_cov / (8 * self.M), self.xi / 4), rel_tol=1e-12):
            bad.append("c0 formula")
        cov = self.r_cov / (4 * self.M1) if self.M1 > 0 else math.inf
        if not self.eps0 <= min(cov, self.eps1, self.eta / (2 * math.pi)) * (1 + 1e-12):
            bad.append("eps0 bound")
        if not math.isclose(self.beta1_rec, 0.25 * min(self.c0, self.beta3), rel_tol=1e-12):
            bad.append("beta1_rec formula")
        if not math.isclose(self.eps_rec, 0.25 * min(self.eps0 / 24, 1 / 200), rel_tol=1e-12):
            bad.append("eps_rec formula")
        for name in ("m", "M", "delta", "T", "eta", "A", "B_koebe", "xi", "rho", "r_cov", "c0", "eps0"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} > 0")
        return bad

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("b0", "z_beta"):
            v = getattr(self, key)
            d[key] = [v.real, v.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SeedConstants":
        d = dict(d)
        for key in ("b0", "z_beta"):
            d[key] = complex(d[key][0], d[key][1])
        return cls(**d)


def _annulus_bounds(seed: SeedFunction, grid: np.ndarray, safety: float) -> tuple[float, float, float, float]:
    z = h0_inv(grid, allow_infinity=True)
    vals = np.abs(seed.gprime(z))
    lo, hi = float(vals.min()), float(vals.max())
    if not lo > 0:
        raise ConstantsError("g' vanishes at a sampled point")
    # pad in proportion to the observed log-spread; exact for constant g'
    spread = math.log(hi / lo)
    return lo * math.exp(-safety * spread), hi * math.exp(safety * spread), lo, hi


def _delta(seed: SeedFunction, b0: complex, n: int = 64) -> float:
    """Largest ``delta`` on a geometric grid with ``|g'(H0^{-1}(w)) - b0| < |b0|/4`` for ``|w| < delta``."""
    th = np.linspace(-math.pi / 2, math.pi / 2, n)
    rad = np.linspace(0.0, 1.0, n)[1:]
    best = 0.0
    for d in np.geomspace(1.0, 1e-6, 121):
        w = (d * rad[:, None] * np.exp(1j * th)[None, :]).ravel()
        w = np.clip(w.real, 0.0, 1.0) + 1j * w.imag
        z = h0_inv(w, allow_infinity=True)
        if np.all(np.abs(seed.gprime(z) - b0) < abs(b0) / 4):
            best = float(d)
            break
    if best == 0.0:
        raise ConstantsError("no delta certified on the grid")
    return best


def _region_D(c: float, n: int = 24) -> np.ndarray:
    """Grid on ``D(c)``: closed upper half-disk shifted above ``Im = c``."""
    x = np.linspace(-1.0, 1.0, 2 * n + 1)
    y = np.linspace(c, 1.0, n + 1)
    z = (x[:, None] + 1j * y[None, :]).ravel()
    return z[np.abs(z) <= 1.0]


def _deriv_on_strip(seed: SeedFunction, w: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """``d/dw g'(H0^{-1}(w))`` by central differences along the real direction."""
    wp = np.clip(w.real + h, 0.0, 1.0) + 1j * w.imag
    wm = np.clip(w.real - h, 0.0, 1.0) + 1j * w.imag
    fp = seed.gprime(h0_inv(wp, allow_infinity=True, slack=1e-6))
    fm = seed.gprime(h0_inv(wm, allow_infinity=True, slack=1e-6))
    return (fp - fm) / (wp.real - wm.real)


def estimate_constants(
    seed: SeedFunction,
    beta_max: float = 0.05,
    beta_steps: int = 20,
    safety: float = 0.01,
    grid: tuple[int, int] = (41, 121),
) -> SeedConstants:
    """Estimate every g-dependent constant on fixed grids (deterministic).

    ``xi``, ``beta2``, ``eps1``, ``M1`` and ``beta3`` rest on grid sampling of
    compactness arguments and are flagged heuristic.
    """
    if seed.b0 is None:
        raise ConstantsError("seed has no limit b0 at infinity")
    b0 = seed.b0
    m, M, m_raw, M_raw = _annulus_bounds(seed, strip_samples(*grid), safety)
    delta = _delta(seed, b0)
    T = 24.0 / (math.pi * delta)
    eta = 0.9 * min(math.pi * delta / 24, math.pi * delta * abs(b0) / (96 * M), abs(b0) / (8 * M))
    A, B = univalence_constants(m, M)

    z0 = seed_z0(seed) if "z0" in seed.meta else None
    degenerate = z0 is None
    if degenerate:
        # constant seeds have no zero pair; keep the disk machinery well defined
        z_beta, beta2, xi = 0.5j, beta_max, 0.25
    else:
        zs = [z0]
        beta2 = 0.0
        z = z0
        for beta in np.linspace(0.0, beta_max, beta_steps + 1)[1:]:
            try:
                z = continue_zero(seed, float(beta), z)
            except (SeedError, ContourError):
                break
            if not (z.imag > 0 and abs(z) < 1):
                break
            zs.append(z)
            beta2 = float(beta)
        xi = 0.99 * min(min(zz.imag / 2.0, 1.0 - abs(zz)) for zz in zs)
        z_beta = zs[-1]
        if not xi > 0:
            raise ConstantsError("zero pair leaves the unit half-disk")
    rho = A * xi
    r_cov = B * xi
    gz = abs(complex(seed.gprime(np.array([z_beta]))[0]))
    r_cov_local = A * xi * gz / 4.0

    beta3 = beta2
    c0 = min(r_cov / (8 * M), xi / 4)
    # eps1, M1 on D(c0) images under H_beta for beta <= beta3
    Dz = _region_D(max(c0, 1e-12))
    ws = []
    for beta in (0.0, 0.5 * beta3, beta3):
        if beta == 0.0:
            ws.append(h0(Dz))
        else:
            ws.append(1j / math.pi * (log_ratio(Dz, -1.0, -beta) + log_ratio(Dz, beta, 1.0)))
    w = np.concatenate(ws)
    eps1 = 0.5 * float(np.min(np.minimum(w.real, 1.0 - w.real)))
    ring = np.exp(2j * math.pi * np.arange(8) / 8)
    wn = (w[:, None] + eps1 * np.concatenate([[0], ring])[None, :]).ravel()
    M1 = 2.0 * float(np.max(np.abs(_deriv_on_strip(seed, wn))))
    # a constant g' has M1 = 0, which leaves r_cov unconstrained
    eps0 = min(r_cov / (4 * M1) if M1 > 0 else math.inf, eps1, eta / (2 * math.pi))
    beta1_rec = 0.25 * min(c0, beta3)
    eps_rec = 0.25 * min(eps0 / 24, 1 / 200)
    heuristic = {k: True for k in ("xi", "beta2", "eps1", "M1", "beta3", "z_beta")}
    heuristic.update({"m_raw": m_raw, "M_raw": M_raw, "degenerate": degenerate})
    out = SeedConstants(
        b0=b0, m=m, M=M, delta=delta, T=T, eta=eta, A=A, B_koebe=B, xi=xi, rho=rho,
        r_cov=r_cov, r_cov_local=r_cov_local, z_beta=z_beta, beta2=beta2, eps1=eps1,
        M1=M1, beta3=beta3, c0=c0, eps0=eps0, beta1_rec=beta1_rec, eps_rec=eps_rec,
        safety=safety, heuristic=heuristic,
    )
    bad = [b for b in out.check_invariants() if not b.endswith("> 0") or not degenerate]
    if bad:
        raise ConstantsError("constant invariants violated: " + ", ".join(bad))
    return out
