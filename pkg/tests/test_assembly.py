import pytest

from valence_forge.assembly import AssemblyError, assemble_dense, balance_point, wing_set
from valence_forge.construction import build_construction, derive_params
from valence_forge.intervals import IntervalSet
from valence_forge.kernel import poisson


def test_stage3_is_x3():
    res = assemble_dense([], 3)
    X3 = build_construction(derive_params(3, 1 / 128, 1 / 128), 1).X_truncated()
    assert res.Y == X3
    assert res.log[0]["case"] == "base"


def test_free_gap_insertion_keeps_margins():
    res = assemble_dense([0.5], 4)
    entry = res.log[1]
    assert entry["case"] == 1
    assert entry["recertified"]["3"] > res.log[0]["margin"] / 2
    assert entry["margin"] > 0


def test_occupied_anchor_cuts_a_hole():
    a, b = assemble_dense([], 3).Y.intervals[0]
    res = assemble_dense([(a + b) / 2], 4)
    entry = res.log[1]
    assert entry["case"] == 2
    lo, hi = entry["removed"]
    assert a < lo < hi < b
    # the copy sits strictly inside the removed window
    copy = res.copies[-1].pieces
    assert lo < copy.intervals[0][0] and copy.intervals[-1][1] < hi


def test_anchor_bound_each_stage():
    sigma = 0.5
    anchors = [0.5, 0.3333284860701696, 2.0, -1.0, 0.33330]
    res = assemble_dense(anchors, 8, sigma=sigma)
    for e in res.log[1:]:
        assert abs(e["offset"] - e["anchor"]) <= sigma / 2 ** e["stage"]
        assert abs(e["tau"] - e["anchor"]) <= sigma / 2 ** e["stage"]
    for e in res.log[1:]:
        for stage, m in e["recertified"].items():
            base = next(x["margin"] for x in res.log if str(x["stage"]) == stage)
            assert m > base / 2


def test_boundary_anchor_is_nudged():
    Y3 = assemble_dense([], 3).Y
    edge = Y3.intervals[0][1]
    res = assemble_dense([edge], 4)
    assert res.log[1]["tau"] == edge + 0.5 * 0.5 / 2 ** 4


def test_balance_point_zero():
    Y = IntervalSet([(0, 1)])
    q = balance_point(Y, 0.1, 3.0)
    Yw = Y.union(wing_set(0.1, 3.0))
    assert abs(poisson(Yw, complex(q))) < 1e-12
    assert 2.95 < q < 3.05


def test_needs_enough_anchors():
    with pytest.raises(AssemblyError):
        assemble_dense([0.5], 5)
    with pytest.raises(AssemblyError):
        assemble_dense([], 2)
