import math

import numpy as np
import pytest

from valence_forge.dimension import (
    box_dimension,
    cantor_dimension,
    cantor_levels,
    construction_levels,
    dimension_formula,
)


def test_construction_slope_matches_closed_form(ref_params):
    rep = box_dimension(construction_levels(ref_params, 4), ref_params)
    assert rep.two_scale_slope == pytest.approx(rep.formula_s, abs=1e-12)
    assert rep.formula_dN == pytest.approx(rep.formula_s, rel=1e-12)


def test_middle_thirds():
    rep = box_dimension(cantor_levels(3, 1.0, 6))
    assert rep.two_scale_slope == pytest.approx(math.log(2) / math.log(3), abs=1e-12)
    assert cantor_dimension(3, 1.0) == pytest.approx(0.6309297535714574)


def test_formula_values_and_monotone():
    N = np.unique(np.round(np.logspace(math.log10(3), 6, 400)).astype(int))
    d = dimension_formula(N, 1 / 128, 3e-5)
    assert np.all(np.diff(d) > 0)
    assert d[-1] < 1
    n = 5
    expect = math.log(n - 1) / (math.log(n) + math.log(1 + math.log(n)) + math.log(2 / (3e-5 / 128)))
    assert dimension_formula(5, 1 / 128, 3e-5) == pytest.approx(expect)


def test_formula_rejects():
    with pytest.raises(ValueError):
        dimension_formula(2, 0.01, 1e-5)
    with pytest.raises(ValueError):
        dimension_formula(5, 0.0, 1e-5)


@pytest.mark.parametrize("levels", [[(2, 0.1)], [(2, 0.1), (4, 0.2)], [(0, 0.1), (2, 0.01)]])
def test_box_dimension_rejects(levels):
    with pytest.raises(ValueError):
        box_dimension(levels)
