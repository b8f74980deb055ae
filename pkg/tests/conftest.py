import pytest

from valence_forge.construction import build_construction, derive_params
from valence_forge.gmap import GMap
from valence_forge.seed import build_normalized_seed, estimate_constants, exp_seed


@pytest.fixture(scope="session")
def ref_params():
    return derive_params(5, 1 / 128, 1 / 128)


@pytest.fixture(scope="session")
def ref_state(ref_params):
    return build_construction(ref_params, 3)


@pytest.fixture(scope="session")
def norm_seed():
    return build_normalized_seed(exp_seed(1.0), 8.0)


@pytest.fixture(scope="session")
def seed_constants(norm_seed):
    return estimate_constants(norm_seed)


@pytest.fixture(scope="session")
def ref_gmap(norm_seed, ref_state):
    return GMap(norm_seed, ref_state, tol=1e-12)
