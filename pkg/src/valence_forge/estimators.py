"""scikit-learn style wrapper around the construction and its validation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .construction import ConstructionState, build_construction, derive_params
from .verify import check_construction_bounds


def as_half_plane_points(Z) -> np.ndarray:
    """Complex points from a complex vector or an ``(n, 2)`` array of ``[re, im]``.

    Points must lie in the closed upper half-plane.
    """
    arr = np.asarray(Z)
    if np.iscomplexobj(arr):
        z = arr.reshape(-1).astype(complex)
        if not np.all(np.isfinite(z)):
            raise ValueError("points must be finite")
    else:
        arr = check_array(arr, ensure_2d=True, dtype=float)
        if arr.shape[1] != 2:
            raise ValueError(f"expected 2 columns [re, im], got {arr.shape[1]}")
        z = arr[:, 0] + 1j * arr[:, 1]
    if np.any(z.imag < 0):
        raise ValueError("points must satisfy Im z >= 0")
    return z


def validate_state(state: ConstructionState) -> list[str]:
    """Structural problems of a (possibly loaded) state; empty when sound."""
    problems = list(state.check_invariants())
    for k, rec in sorted(state.records.items()):
        if not rec.finalized:
            problems.append(f"node {k} has no centring point")
        elif not rec.residual < state.tol:
            problems.append(f"node {k} residual {rec.residual:.3g} >= tol {state.tol:.3g}")
    return problems


class CantorPoissonTransformer(TransformerMixin, BaseEstimator):
    """``fit`` builds ``X^(N)`` to finite depth, ``transform`` evaluates ``P(X, z)``.

    ``transform`` takes complex points (or ``[re, im]`` rows) in the closed
    upper half-plane and returns an ``(n, 2)`` array of ``[Re P, Im P]``.
    """

    def __init__(self, N=5, eps=1 / 128, beta1=1 / 128, gamma1=None, depth=3, tol=1e-12, threads=1):
        self.N = N
        self.eps = eps
        self.beta1 = beta1
        self.gamma1 = gamma1
        self.depth = depth
        self.tol = tol
        self.threads = threads

    def fit(self, X=None, y=None):
        self.params_ = derive_params(self.N, self.eps, self.beta1, self.gamma1)
        self.state_ = build_construction(self.params_, self.depth, self.tol, self.threads)
        self.n_nodes_ = len(self.state_.records)
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        z = as_half_plane_points(X)
        vals = np.asarray(self.state_.poisson(z, ()), dtype=complex)
        return np.column_stack([vals.real, vals.imag])

    def verify(self, samples_per_node=400, seed=0):
        """Run the full bound suite on the fitted construction."""
        check_is_fitted(self, "state_")
        return check_construction_bounds(self.state_, samples_per_node, seed, self.threads)
