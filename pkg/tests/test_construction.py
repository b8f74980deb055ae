import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valence_forge.construction import (
    ConstraintViolation,
    ConstructionState,
    ResolutionError,
    build_construction,
    center_step,
    classical_cantor,
    derive_params,
    is_descendant,
    level_nodes,
    node_key,
    node_relatives,
    parse_node_key,
    solve_center_root,
)
from valence_forge.intervals import IntervalSet
from valence_forge.kernel import poisson, poisson_deriv


def test_derive_params_defaults(ref_params):
    p = ref_params
    assert p.gamma1 == pytest.approx(0.5 / 128 / 128)
    assert p.alpha == pytest.approx((1 / 128) / (5 * (1 + math.log(5))))
    assert p.gamma == pytest.approx(0.5 * p.alpha * p.gamma1)


@pytest.mark.parametrize("kw, msg", [
    (dict(N=2, eps=1 / 128, beta1=1 / 128), "N >= 3"),
    (dict(N=5, eps=0.02, beta1=1 / 128), "eps < 1/100"),
    (dict(N=5, eps=1 / 128, beta1=0.5), "beta1 < 1/100"),
    (dict(N=5, eps=1 / 128, beta1=1 / 128, gamma1=1.0), "gamma1 < eps*beta1"),
    (dict(N=5, eps=-1.0, beta1=1 / 128), "eps > 0"),
])
def test_derive_params_violations(kw, msg):
    with pytest.raises(ConstraintViolation, match=msg.replace("*", r"\*")):
        derive_params(**kw)


def test_node_relations():
    N = 4
    assert node_relatives((2, 3), N, "parent") == [(2,)]
    assert node_relatives((2, 3, 1), N, "ancestors") == [(2, 3, 1), (2, 3), (2,)]
    assert node_relatives((2, 3), N, "siblings") == [(2, 1), (2, 2)]
    cous = node_relatives((2, 3), N, "cousins")
    assert (1, 1) in cous and (2, 1) in cous and (2, 3) not in cous and len(cous) == 8
    assert is_descendant((2, 3, 1), (2,))
    assert not is_descendant((2,), (2, 3))
    with pytest.raises(ValueError):
        node_relatives((4,), N, "parent")
    with pytest.raises(ValueError):
        node_relatives((1,), N, "nephews")


def test_node_key_round_trip():
    assert parse_node_key(node_key((2, 3, 1))) == (2, 3, 1)
    with pytest.raises(ValueError):
        parse_node_key("2..1")


def test_level_counts(ref_state):
    counts = [len(ref_state.nodes(lv)) for lv in (1, 2, 3)]
    assert counts == [4, 16, 64]
    assert len(ref_state.records) == 84


def test_roots_and_centering(ref_state):
    p = ref_state.params
    for k, rec in ref_state.records.items():
        assert rec.residual < 1e-12
        bound = 7 * p.eps * p.alpha * p.beta1 * p.gamma ** (len(k) - 1)
        assert abs(rec.omega) * ref_state.scale(k) < bound
        assert not rec.widened


def test_invariants_clean(ref_state):
    assert ref_state.check_invariants() == []


def test_level1_root_against_absolute_kernel(ref_state):
    # at level 1 the whole tree-so-far is representable: P vanishes at x(k)
    X = ref_state.X_truncated(1)
    for k in ref_state.nodes(1):
        x = ref_state.x(k)
        # rounding x to binary64 costs |P'(x)| * ulp(x)
        slope = abs(poisson_deriv(X, complex(x, 0.0)))
        assert abs(poisson(X, complex(x, 0.0))) < 1e-12 + 2 * slope * math.ulp(x)


def test_symmetric_middle_node_is_exact():
    s = build_construction(derive_params(4, 1 / 128, 1 / 128), 1)
    assert s.x((2,)) == 0.5


def test_centers_follow_steps(ref_state):
    N, gam = ref_state.params.N, ref_state.params.gamma
    assert ref_state.center((3,)) == pytest.approx(3 / 5)
    k = (3, 2)
    assert ref_state.offset(k, (3,)) == pytest.approx(center_step(k, N, gam) + ref_state.records[(3,)].omega * ref_state.scale((3,)), rel=1e-12)


def test_deep_intervals_not_representable(ref_state):
    with pytest.raises(ResolutionError):
        ref_state.interval((1, 1, 1))
    # the frame-relative description stays usable
    assert ref_state.scale((1, 1, 1)) > 0


def test_state_json_round_trip(ref_state):
    text = ref_state.to_json()
    back = ConstructionState.from_json(text)
    assert back.to_json() == text
    d = ref_state.to_dict()
    assert d["manifest"] == {"level_counts": {"1": 4, "2": 16, "3": 64}, "total": 84}
    assert "2.3.1" in d["records"]


def test_threads_do_not_change_result(ref_params, ref_state):
    other = build_construction(ref_params, 3, threads=4)
    assert other.to_json() == ref_state.to_json()


def test_solve_requires_parent(ref_params):
    s = ConstructionState(ref_params, 2)
    with pytest.raises(Exception):
        solve_center_root((1, 1), s)


def test_classical_cantor_levels():
    levels = classical_cantor(3, 0.9, 3)
    assert [len(l) for l in levels] == [2, 4, 8]
    for m, level in enumerate(levels, start=1):
        for a, b in level:
            assert b - a == pytest.approx((0.3) ** m)
    # nested: each child inside some parent
    for parent, child in zip(levels, levels[1:]):
        for a, b in child:
            assert any(pa <= a and b <= pb for pa, pb in parent)


def test_classical_cantor_rejects():
    with pytest.raises(ValueError):
        classical_cantor(2, 0.5, 2)
    with pytest.raises(ValueError):
        classical_cantor(3, 1.5, 2)


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 8), st.sampled_from([1 / 128, 1 / 200, 1 / 512]))
def test_depth2_roots_property(N, eps):
    s = build_construction(derive_params(N, eps, eps), 2)
    assert s.check_invariants() == []
    assert max(r.residual for r in s.records.values()) < 1e-12
