from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjfield import truth
from conjfield.data import (
    PairSet,
    Series,
    TimeSeriesSet,
    build_pairs_resampled,
    build_pairs_uniform,
    load_pairs,
    load_series,
    merge_pair_sets,
    parse_series,
    write_pairs,
    write_series,
)
from conjfield.errors import EmptySeries, InsufficientSpan, MixedDeltaT, NonMonotoneTime, NonUniformGrid, ParseError


def test_parse_single_series():
    ts = parse_series("s1,0,0.5\ns1,1,0.3333333")
    assert len(ts) == 1
    assert ts.series[0].id == "s1"
    np.testing.assert_allclose(ts.series[0].x, [0.5, 0.3333333])


def test_parse_two_columns_and_header():
    ts = parse_series("t,x\n0,0.5\n1,0.25\n")
    assert ts.series[0].id == "default"
    np.testing.assert_allclose(ts.series[0].t, [0.0, 1.0])


def test_times_out_of_order(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("s,1,0.5\ns,0,0.4\n")
    with pytest.raises(NonMonotoneTime):
        load_series(p)


def test_two_series_ids():
    ts = parse_series("a,0,0.5\na,1,0.3\nb,0,0.9\nb,1,0.8\n")
    assert len(ts) == 2


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_series("s,0,0.5\ns,1,abc\ns,2,0.2")
    with pytest.raises(EmptySeries):
        parse_series("# nothing here\n")


def test_uniform_pairs_from_quadratic_trajectory():
    ts = TimeSeriesSet.single([0, 1, 2], [0.5, 1 / 3, 0.2])
    p = build_pairs_uniform(ts, 1.0)
    np.testing.assert_allclose(p.x, [1 / 3, 0.5])
    np.testing.assert_allclose(p.y, [0.2, 1 / 3])


def test_two_samples_give_one_pair():
    assert len(build_pairs_uniform(TimeSeriesSet.single([0, 1], [0.5, 0.4]), 1.0)) == 1


def test_non_uniform_spacing():
    with pytest.raises(NonUniformGrid):
        build_pairs_uniform(TimeSeriesSet.single([0, 1, 2.5], [0.5, 0.4, 0.3]), 1.0)


def test_resampled_linear_matches_uniform():
    e = truth.quadratic()
    t, x = e.trajectory(0.9, 8)
    ts = TimeSeriesSet.single(t, x)
    a = build_pairs_uniform(ts, 1.0)
    b = build_pairs_resampled(ts, 1.0, "linear")
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)


def test_resampled_cubic_approximates_map():
    e = truth.quadratic()
    t = np.array([0, 0.5, 1.0, 1.7, 2.0])
    ts = TimeSeriesSet.single(t, e.flow(0.5, t))
    p = build_pairs_resampled(ts, 1.0, "cubic")
    assert len(p) >= 2
    assert np.max(np.abs(p.y - e.D(p.x))) < 1e-3


def test_resampled_short_series():
    with pytest.raises(InsufficientSpan):
        build_pairs_resampled(TimeSeriesSet.single([0, 0.5], [0.5, 0.4]), 1.0)


def test_merge_sorted():
    D = truth.quadratic().D
    m = merge_pair_sets([PairSet([0.5], [1 / 3]), PairSet([0.2], [D(0.2)])])
    np.testing.assert_allclose(m.x, [0.2, 0.5])
    assert m.y[0] == pytest.approx(1 / 9)


def test_merge_identical_sets_averages_duplicates():
    p = PairSet([0.1, 0.2], [0.05, 0.1])
    m = merge_pair_sets([p, PairSet([0.1, 0.2], [0.07, 0.1])])
    assert len(m) == 2
    assert m.y[0] == pytest.approx(0.06)


def test_merge_mixed_delta_t():
    with pytest.raises(MixedDeltaT):
        merge_pair_sets([PairSet([0.1], [0.05], 1.0), PairSet([0.2], [0.1], 0.5)])


def test_series_round_trip(tmp_path):
    ts = TimeSeriesSet((Series("a", [0, 1, 2], [0.5, 1 / 3, 0.2]), Series("b", [0, 1], [0.9, 0.1 + 1e-17])))
    p = tmp_path / "s.csv"
    write_series(ts, p)
    back = load_series(p)
    for s, r in zip(ts.series, back.series):
        assert s.id == r.id
        np.testing.assert_array_equal(s.t, r.t)
        np.testing.assert_array_equal(s.x, r.x)


def test_pairs_round_trip(tmp_path):
    p = PairSet(np.array([0.1, 0.7, 1 / 3]), np.array([1 / 19, 0.5, 0.2]), 0.5)
    path = tmp_path / "p.csv"
    write_pairs(p, path)
    back = load_pairs(path)
    np.testing.assert_array_equal(back.x, p.x)
    np.testing.assert_array_equal(back.y, p.y)
    assert back.delta_t == 0.5


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(0.05, 0.95), n=st.integers(2, 30))
def test_uniform_pairs_are_exact(x0, n):
    e = truth.quadratic()
    t, x = e.trajectory(x0, n)
    p = build_pairs_uniform(TimeSeriesSet.single(t, x), 1.0)
    np.testing.assert_allclose(p.y, e.D(p.x), rtol=1e-14, atol=1e-300)


@settings(max_examples=30, deadline=None)
@given(slope=st.floats(0.1, 2.0), c=st.floats(-1, 1), n=st.integers(3, 12))
def test_linear_resampling_exact_on_linear_data(slope, c, n):
    t = np.arange(n, dtype=float)
    ts = TimeSeriesSet.single(t, c + slope * t)
    a = build_pairs_uniform(ts, 1.0)
    b = build_pairs_resampled(ts, 1.0, "linear")
    np.testing.assert_allclose(b.y, a.y, rtol=0, atol=1e-12)
