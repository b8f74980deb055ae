import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valence_forge.intervals import IntervalSet
from valence_forge.kernel import (
    SingularPointError,
    StripDomainError,
    h0,
    h0_inv,
    poisson,
    poisson_deriv,
    poisson_interval,
    poisson_quadrature_oracle,
    scale_translate,
)


def test_interval_real_part_is_angle_fraction():
    # on the axis, inside the interval the value is 1 and outside it is 0
    assert poisson_interval(0, 1, 0.5 + 1e-13j).real == pytest.approx(1.0, abs=1e-12)
    assert poisson_interval(0, 1, 2.0 + 0j).real == pytest.approx(0.0, abs=1e-15)


def test_interval_real_part_in_unit_range():
    rng = np.random.default_rng(1)
    z = rng.uniform(-3, 3, 500) + 1j * rng.uniform(0, 3, 500)
    v = poisson_interval(-0.3, 0.7, z)
    assert np.all((v.real >= -1e-15) & (v.real <= 1 + 1e-15))


def test_matches_oracle_off_axis():
    X = IntervalSet([(0, 0.1), (0.3, 0.35), (2, 5)])
    for z in [0.05 + 1e-3j, 1 + 1j, -4 + 0.2j, 0.32 + 10j]:
        assert abs(poisson(X, z) - poisson_quadrature_oracle(X, z)) < 1e-9


def test_far_field_accuracy():
    # Im P((0, 1), z) = -log1p((1 - 2x) / |z|^2) / (2 pi); naive logs lose it
    z = 1e8 + 1j
    exact = -math.log1p((1 - 2 * z.real) / abs(z) ** 2) / (2 * math.pi)
    assert poisson_interval(0, 1, z).imag == pytest.approx(exact, rel=1e-12)


def test_guard_raises_at_endpoint():
    with pytest.raises(SingularPointError):
        poisson(IntervalSet([(0, 1)]), 1.0 + 0j)


def test_lower_half_plane_rejected():
    with pytest.raises(ValueError):
        poisson(IntervalSet([(0, 1)]), 0.5 - 1j)


def test_deriv_against_difference_quotient():
    X = IntervalSet([(0, 1), (2, 2.5)])
    z = 0.7 + 0.4j
    h = 1e-6
    fd = (poisson(X, z + h) - poisson(X, z - h)) / (2 * h)
    assert abs(poisson_deriv(X, z) - fd) < 1e-7


def test_h0_values():
    assert h0(0j) == pytest.approx(1.0, abs=1e-15)
    assert h0(1j) == pytest.approx(0.5, abs=1e-15)
    assert abs(h0(1e8 + 0j)) < 1e-7
    assert abs(h0(1e8j)) < 1e-7


def test_h0_inv_infinity():
    with pytest.raises(StripDomainError):
        h0_inv(0j)
    assert h0_inv(0j, allow_infinity=True) == complex(math.inf, 0)
    with pytest.raises(StripDomainError):
        h0_inv(1.5 + 0j)


@pytest.mark.parametrize("w", [0.5 + 10j, 0.5 - 10j, 1e-9 + 1e-9j, 0.999 + 0.2j])
def test_h0_inv_against_cot(w):
    exact = 1j * cmath.cos(math.pi * w / 2) / cmath.sin(math.pi * w / 2)
    got = h0_inv(w)
    assert abs(got - exact) <= 1e-13 * abs(exact)


@settings(max_examples=200)
@given(st.floats(-20, 20), st.floats(1e-6, 20))
def test_h0_round_trip(x, y):
    z = complex(x, y)
    assert abs(h0_inv(h0(z)) - z) <= 1e-12 * max(1.0, abs(z)) ** 2


@settings(max_examples=100)
@given(st.floats(0.1, 10), st.floats(-5, 5), st.floats(-3, 3), st.floats(1e-3, 5))
def test_scaling_identity(a, c, x, y):
    X = IntervalSet([(-1, -0.2), (0.1, 0.4), (0.9, 2)])
    z = complex(x, y)
    lhs = poisson(scale_translate(X, a, c), z)
    rhs = poisson(X, (z - c) / a)
    assert abs(lhs - rhs) < 1e-12


def test_scale_translate_rejects_nonpositive():
    with pytest.raises(ValueError):
        scale_translate(IntervalSet([(0, 1)]), 0.0, 1.0)


def test_oracle_rejects_axis_points():
    with pytest.raises(ValueError):
        poisson_quadrature_oracle(IntervalSet([(0, 1)]), 0.5 + 0j)
