import numpy as np
import pytest

from valence_forge.contour import ContourError, graded_breaks, segment_integral


def test_polynomial_exact():
    val, err = segment_integral(lambda z: 3 * z ** 2, 0j, 1 + 1j)
    assert abs(val - (1 + 1j) ** 3) < 1e-14


def test_exponential_along_diagonal():
    val, _ = segment_integral(np.exp, -1 + 0.5j, 2 - 1j)
    assert abs(val - (np.exp(2 - 1j) - np.exp(-1 + 0.5j))) < 1e-13


def test_graded_breaks_refine_start():
    b = graded_breaks(4, 1e-6)
    assert b[0] == 0.0 and b[1] == pytest.approx(1e-6) and b[-1] == 1.0
    assert np.all(np.diff(b) > 0)


def test_unresolvable_raises():
    with pytest.raises(ContourError):
        segment_integral(lambda z: np.sign(np.real(z) - 0.3137), 0j, 1 + 0j, tol=1e-15, max_order=32)


def test_zero_length():
    assert segment_integral(np.exp, 1j, 1j) == (0j, 0.0)
