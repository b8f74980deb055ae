import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valence_forge.intervals import IntervalSet, IntervalSetError


@st.composite
def interval_sets(draw, max_size=5):
    # endpoints on a 1/1000 grid so that scaling cannot collapse an interval
    ticks = draw(st.lists(st.integers(-50_000, 50_000), min_size=0, max_size=2 * max_size, unique=True))
    pts = [t / 1000 for t in sorted(ticks)]
    return IntervalSet(zip(pts[0::2], pts[1::2]))


def test_sorted_on_construction():
    X = IntervalSet([(3, 4), (0, 1)])
    assert X.intervals == ((0.0, 1.0), (3.0, 4.0))


@pytest.mark.parametrize("bad", [[(1, 1)], [(2, 1)], [(0, 2), (1, 3)], [(0, math.inf)], [(math.nan, 1)]])
def test_rejects_malformed(bad):
    with pytest.raises(IntervalSetError):
        IntervalSet(bad)


def test_touching_allowed_and_boundary():
    X = IntervalSet([(0, 1), (1, 2)])
    assert X.measure == 2.0
    assert not X.contains(1.0)
    assert X.on_boundary(1.0)
    assert X.contains(0.5)


def test_remove_splits():
    X = IntervalSet([(0, 10)]).remove(2, 3)
    assert X.intervals == ((0.0, 2.0), (3.0, 10.0))


def test_clip_and_measure_in():
    X = IntervalSet([(0, 1), (2, 4)])
    assert X.measure_in(0.5, 3) == pytest.approx(1.5)


def test_max_window_measure():
    X = IntervalSet([(0, 0.1), (0.15, 0.2), (1, 1.05)])
    assert X.max_window_measure(0.2) == pytest.approx(0.15)


def test_json_round_trip():
    X = IntervalSet([(0, 0.5), (0.75, 1)])
    assert IntervalSet.from_json(X.to_json()) == X


def test_json_rejects_unsorted():
    with pytest.raises(IntervalSetError):
        IntervalSet.from_json(json.dumps([[2, 3], [0, 1]]))
    with pytest.raises(IntervalSetError):
        IntervalSet.from_json(json.dumps({"a": 1}))
    with pytest.raises(IntervalSetError):
        IntervalSet.from_json(json.dumps([[0, 1, 2]]))


@given(interval_sets(), st.floats(0.01, 10), st.floats(-10, 10))
def test_scale_translate_measure(X, a, c):
    Y = X.scale_translate(a, c)
    assert Y.measure == pytest.approx(a * X.measure, rel=1e-12, abs=1e-12)
    assert len(Y) == len(X)


@settings(max_examples=50)
@given(interval_sets(), st.floats(-60, 60), st.floats(0.01, 20))
def test_remove_reduces_measure_exactly(X, left, width):
    right = left + width
    Y = X.remove(left, right)
    assert Y.measure == pytest.approx(X.measure - X.measure_in(left, right), abs=1e-9)
    for a, b in Y:
        assert b <= left or a >= right


def test_tiny_interval_collapse_is_reported():
    with pytest.raises(IntervalSetError):
        IntervalSet([(0.0, 1e-300)]).scale_translate(1.0, 1.0)
