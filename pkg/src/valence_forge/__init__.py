"""Cantor-type sets, Poisson strip maps and infinite-valence checks on the half-plane."""

from .intervals import IntervalSet
from .kernel import h0, h0_inv, poisson, poisson_deriv, poisson_interval, poisson_quadrature_oracle, scale_translate
from .construction import (
    ConstructionParams,
    ConstructionState,
    build_construction,
    center,
    classical_cantor,
    derive_params,
    node_relatives,
    solve_center_root,
)
from .assembly import assemble_dense
from .seed import SeedConstants, SeedFunction, build_normalized_seed, estimate_constants, exp_seed, load_seed, qr_map
from .verify import VerificationReport, check_construction_bounds, check_lemma7
from .gmap import GMap, ValenceReport, check_bilipschitz, count_preimages, valence_demo
from .dimension import DimensionReport, box_dimension, dimension_formula
from .becker import check_becker_halfplane
from .estimators import CantorPoissonTransformer

__version__ = "0.1.0"

__all__ = [
    "IntervalSet",
    "h0",
    "h0_inv",
    "poisson",
    "poisson_deriv",
    "poisson_interval",
    "poisson_quadrature_oracle",
    "scale_translate",
    "ConstructionParams",
    "ConstructionState",
    "build_construction",
    "center",
    "classical_cantor",
    "derive_params",
    "node_relatives",
    "solve_center_root",
    "assemble_dense",
    "SeedConstants",
    "SeedFunction",
    "build_normalized_seed",
    "estimate_constants",
    "exp_seed",
    "load_seed",
    "qr_map",
    "VerificationReport",
    "check_construction_bounds",
    "check_lemma7",
    "GMap",
    "ValenceReport",
    "check_bilipschitz",
    "count_preimages",
    "valence_demo",
    "DimensionReport",
    "box_dimension",
    "dimension_formula",
    "check_becker_halfplane",
    "CantorPoissonTransformer",
]
