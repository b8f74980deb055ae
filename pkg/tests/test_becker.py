import numpy as np
import pytest

from valence_forge.becker import (
    SelfMapError,
    HalfPlaneMap,
    check_becker_halfplane,
    dilation_map,
    extremal_logderiv,
    identity_map,
    mobius_map,
    standard_maps,
    translation_map,
)


@pytest.mark.parametrize("p", standard_maps(), ids=lambda p: p.name)
def test_schwarz_pick_and_composition(p):
    sp, comp = check_becker_halfplane(extremal_logderiv(1.0), p, 1.0)
    assert sp.passed and comp.passed


@pytest.mark.parametrize("p", [identity_map(), dilation_map(2.0)], ids=lambda p: p.name)
def test_linear_equality_cases(p):
    sp, _ = check_becker_halfplane(extremal_logderiv(1.0), p, 1.0)
    assert sp.extra["max_equality_defect"] < 1e-12


def test_translation_is_strict():
    sp, _ = check_becker_halfplane(extremal_logderiv(1.0), translation_map(1j), 1.0)
    assert sp.observed_max < 1.0


def test_violating_function_detected():
    # |F''/F'| = 1/Im w exceeds tau/(2 Im w) for tau = 1
    sp, comp = check_becker_halfplane(lambda w: 1j / np.asarray(w).imag, identity_map(), 1.0)
    assert sp.passed and not comp.passed


def test_map_leaving_half_plane():
    flip = HalfPlaneMap("conj", np.conj, lambda z: np.ones_like(z))
    with pytest.raises(SelfMapError):
        check_becker_halfplane(extremal_logderiv(), flip, 1.0)


def test_bad_maps_rejected():
    with pytest.raises(ValueError):
        mobius_map(1, 0, 0, -1)
    with pytest.raises(ValueError):
        dilation_map(-1)
    with pytest.raises(ValueError):
        translation_map(-1j)
