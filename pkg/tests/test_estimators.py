import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from valence_forge.estimators import CantorPoissonTransformer, as_half_plane_points, validate_state
from valence_forge.kernel import poisson


@pytest.fixture(scope="module")
def fitted():
    return CantorPoissonTransformer(depth=2).fit()


def test_transform_matches_absolute_kernel(fitted):
    z = np.array([0.3 + 0.01j, 0.5 + 1j, 2 + 0.5j, -1 + 1e-3j])
    out = fitted.transform(z)
    ref = poisson(fitted.state_.X_truncated(), z)
    assert out.shape == (4, 2)
    assert np.allclose(out[:, 0] + 1j * out[:, 1], ref, atol=1e-12)


def test_two_column_input(fitted):
    z = np.array([0.3 + 0.01j, 0.5 + 1j])
    rows = np.column_stack([z.real, z.imag])
    assert np.array_equal(fitted.transform(rows), fitted.transform(z))


def test_params_and_clone():
    est = CantorPoissonTransformer(N=4, depth=1)
    assert est.get_params()["N"] == 4
    other = clone(est).set_params(N=6)
    assert other.N == 6 and est.N == 4


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CantorPoissonTransformer().transform(np.array([1j]))


def test_point_validation():
    with pytest.raises(ValueError):
        as_half_plane_points(np.array([1 - 1j]))
    with pytest.raises(ValueError):
        as_half_plane_points(np.ones((3, 3)))
    with pytest.raises(ValueError):
        as_half_plane_points(np.array([complex(np.nan, 1)]))


def test_validate_state_and_verify(fitted):
    assert validate_state(fitted.state_) == []
    reps = fitted.verify(samples_per_node=20)
    assert reps and all(r.passed for r in reps)


def test_bad_params_raise_on_fit():
    with pytest.raises(ValueError):
        CantorPoissonTransformer(eps=0.5).fit()
