import json
import math

import numpy as np
import pytest

from valence_forge.seed import (
    CollisionNotFound,
    ConstantsError,
    SeedConstants,
    SeedError,
    build_normalized_seed,
    constant_seed,
    estimate_constants,
    exp_seed,
    find_collision,
    load_seed,
    normalized_from_meta,
    qr_deriv,
    qr_map,
    seed_z0,
    univalence_constants,
    user_seed,
)


@pytest.mark.parametrize("r", [1.5, 8.0, 20.0, 100.0])
def test_qr_fixes_i(r):
    assert abs(qr_map(r, 1j) - 1j) < 1e-14
    assert qr_deriv(r, 1j).real > 0 and abs(qr_deriv(r, 1j).imag) < 1e-14


def test_qr_image_inside_disk():
    r = 8.0
    rng = np.random.default_rng(0)
    z = rng.normal(0, 10, 10_000) + 1j * np.exp(rng.uniform(-8, 5, 10_000))
    assert np.all(np.abs(qr_map(r, z) - 1j * r) < r - 1 / r)


def test_qr_infinity_and_pole():
    r = 8.0
    assert qr_map(r, complex(math.inf, 0)) == 1j * (2 * r - 1 / r)
    assert abs(qr_map(r, 1e12 + 1j) - 1j * (2 * r - 1 / r)) < 1e-9
    # the pole of the Moebius map lies in the lower half-plane
    assert abs(qr_map(r, -(2 * r + 1) * 1j * (1 - 1e-12))) > 1e6


def test_qr_converges_to_identity():
    z = 2 + 3j
    errs = [abs(qr_map(r, z) - z) for r in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] < 0.1


def test_qr_deriv_matches_difference():
    r, z, h = 5.0, 0.3 + 0.7j, 1e-6
    fd = (qr_map(r, z + h) - qr_map(r, z - h)) / (2 * h)
    assert abs(qr_deriv(r, z) - fd) < 1e-8


def test_qr_rejects_small_r():
    with pytest.raises(ValueError):
        qr_map(1.0, 1j)


def test_normalized_seed_giii(norm_seed):
    z0 = seed_z0(norm_seed)
    assert abs(abs(z0) - 0.5) < 1e-9
    assert z0.imag > 0
    assert abs(norm_seed.g(0j)) < 1e-9
    assert abs(norm_seed.g(z0)) < 1e-9


def test_normalized_seed_limit_and_nonvanishing(norm_seed):
    b0 = norm_seed.b0
    assert b0 != 0
    assert abs(norm_seed.gprime(np.array([1e8j]))[0] - b0) < 1e-6 * abs(b0) + 1e-12
    rng = np.random.default_rng(2)
    z = rng.uniform(-50, 50, 10_000) + 1j * np.exp(rng.uniform(-10, 6, 10_000))
    assert np.min(np.abs(norm_seed.gprime(z))) > 0


def test_collision_r20_residual():
    g = build_normalized_seed(exp_seed(1.0), 20.0)
    assert g.meta["collision_residual"] < 1e-10


def test_rebuild_from_meta(norm_seed):
    again = normalized_from_meta(exp_seed(1.0), norm_seed.meta)
    z = np.array([0.2 + 0.1j, 3 + 4j])
    assert np.array_equal(again.gprime(z), norm_seed.gprime(z))
    with pytest.raises(SeedError):
        normalized_from_meta(exp_seed(1.0), {"r": 8.0})


def test_constants_invariants(seed_constants):
    c = seed_constants
    assert c.check_invariants() == []
    assert c.T * math.pi * c.delta == pytest.approx(24.0, rel=1e-12)
    assert c.eta < abs(c.b0) / (8 * c.M)
    assert c.m <= abs(c.b0) <= c.M
    assert c.heuristic


def test_annulus_membership(norm_seed, seed_constants):
    rng = np.random.default_rng(3)
    z = rng.uniform(-30, 30, 5000) + 1j * np.exp(rng.uniform(-6, 4, 5000))
    mag = np.abs(norm_seed.gprime(z))
    assert np.all((mag >= seed_constants.m) & (mag <= seed_constants.M))


def test_constants_deterministic_and_serialisable(norm_seed, seed_constants):
    again = estimate_constants(norm_seed)
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(seed_constants.to_dict(), sort_keys=True)
    back = SeedConstants.from_dict(json.loads(json.dumps(seed_constants.to_dict())))
    assert back.to_dict() == seed_constants.to_dict()


def test_constant_seed_degenerate():
    c = estimate_constants(constant_seed(1.0))
    assert c.b0 == 1 and c.m == 1 and c.M == 1


def test_univalence_constants():
    A, B = univalence_constants(1.0, 1.0)
    assert A == 1.0 and B == 0.25
    A, B = univalence_constants(0.5, 2.0)
    assert A == pytest.approx(math.tanh(math.pi ** 2 / (4 * math.log(4))))
    with pytest.raises(ConstantsError):
        univalence_constants(2.0, 1.0)


def test_user_seed_template(tmp_path):
    spec = {"num": [1.0], "den": [1.0, [0.0, 0.5]], "exp": [[[0.5, 0.0], 2.0]]}
    g = user_seed(spec)
    z = 0.3 + 0.4j
    assert g(z) == pytest.approx(1 / (1 + 0.5j * z) + 0.5 * np.exp(2j * z))
    path = tmp_path / "s.json"
    path.write_text(json.dumps(spec))
    assert load_seed(f"user:{path}")(z) == pytest.approx(g(z))


def test_load_seed_errors(tmp_path):
    with pytest.raises(ValueError):
        load_seed("sine")
    with pytest.raises(FileNotFoundError):
        load_seed(f"user:{tmp_path / 'missing.json'}")
    with pytest.raises(SeedError):
        user_seed({"den": [0.0]})


def test_univalent_seed_has_no_collision():
    # g0' = 1 integrates to z, which is univalent
    with pytest.raises(CollisionNotFound):
        find_collision(lambda z: np.ones_like(np.asarray(z, dtype=complex)), heights=(0.0,),
                       reals=(0.0, 1.0), offsets=(1 + 1j,))


def test_exp_seed_without_limit():
    with pytest.raises(SeedError):
        exp_seed().gprime(np.array([complex(math.inf, 0)]))
