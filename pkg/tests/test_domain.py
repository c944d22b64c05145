from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact
from conjfield.domain import find_fixed_points, solver_grid, splinter, subdivide
from conjfield.errors import PreconditionError
from conjfield.propagation import exact_map


def test_quadratic_fixed_points():
    _, D = exact("quadratic", (0.0, 0.9))
    fps = find_fixed_points(D, (0.0, 0.9))
    assert len(fps) == 1
    assert fps[0].location == pytest.approx(0.0, abs=1e-12)
    assert fps[0].multiplier == pytest.approx(0.5, abs=1e-8)


def test_cubic_fixed_points():
    _, D = exact("cubic")
    fps = find_fixed_points(D, (-2.04, 2.04))
    np.testing.assert_allclose([f.location for f in fps], [-1, 0, 1], atol=1e-10)
    np.testing.assert_allclose([f.multiplier for f in fps], [1 / 0.81, 0.9, 1 / 0.81], rtol=1e-7)


def test_linear_map_fixed_point():
    D = exact_map(lambda x: 0.5 * x, lambda x: 0.5 + 0 * x, (0.0, 1.0))
    fps = find_fixed_points(D, (0.0, 1.0))
    assert [(round(f.location, 12), round(f.multiplier, 12)) for f in fps] == [(0.0, 0.5)]


def test_subdivide_cubic_symmetric_interval():
    _, D = exact("cubic")
    subs = subdivide(D, (-1.0, 1.0))
    assert [(s.lo, s.hi) for s in subs] == [(-1.0, pytest.approx(0.0, abs=1e-12)), (pytest.approx(0.0, abs=1e-12), 1.0)]
    right = subs[1]
    assert right.sign == "below"
    assert right.attractor == pytest.approx(0.0, abs=1e-12)
    assert right.direction == "forward"


def test_subdivide_quadratic():
    _, D = exact("quadratic", (0.0, 0.9))
    (s,) = subdivide(D, (0.0, 0.9))
    assert s.sign == "below" and s.attractor_end == "lo" and s.attractor == 0.0


def test_subdivide_cubic_outer_piece_runs_backward():
    _, D = exact("cubic")
    (s,) = subdivide(D, (1.0, 2.04))
    assert s.sign == "above"
    assert s.direction == "backward"
    assert s.attractor == pytest.approx(1.0, abs=1e-10)
    assert s.multiplier_at_attractor == pytest.approx(0.81, rel=1e-7)


def test_subdivide_covers_and_alternates():
    _, D = exact("cubic")
    subs = subdivide(D, (-2.04, 2.04))
    assert subs[0].lo == -2.04 and subs[-1].hi == 2.04
    for a, b in zip(subs[:-1], subs[1:]):
        assert a.hi == b.lo
        assert a.hi_fixed and b.lo_fixed
        assert a.sign != b.sign


def test_quadratic_splinter():
    _, D = exact("quadratic", (0.0, 0.9))
    (s,) = subdivide(D, (0.0, 0.9))
    sp = splinter(D, s, 0.5)
    np.testing.assert_allclose(sp.points[:4], [0.5, 1 / 3, 0.2, 1 / 9], rtol=1e-14)
    assert sp.limit == 0.0


def test_cubic_backward_splinter():
    _, D = exact("cubic")
    (s,) = subdivide(D, (1.0, 2.04))
    sp = splinter(D, s, 1.5)
    assert np.all(np.diff(sp.points) < 0)
    assert sp.points[-1] == pytest.approx(1.0, abs=1e-11)


def test_splinter_from_attractor_is_rejected():
    _, D = exact("quadratic", (0.0, 0.9))
    (s,) = subdivide(D, (0.0, 0.9))
    with pytest.raises(PreconditionError):
        splinter(D, s, 0.0)


def test_solver_grid_margins():
    _, D = exact("quadratic", (0.0, 0.9))
    (s,) = subdivide(D, (0.0, 0.9))
    g = solver_grid(s, 11)
    assert g[0] == pytest.approx(0.005 * 0.9)
    assert g[-1] == 0.9


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(0.05, 0.9), which=st.sampled_from(["quadratic", "cubic-inner", "cubic-outer"]))
def test_splinter_rate_matches_multiplier(x0, which):
    if which == "quadratic":
        _, D = exact("quadratic", (0.0, 0.95))
        (s,) = subdivide(D, (0.0, 0.95))
    elif which == "cubic-inner":
        _, D = exact("cubic")
        s = subdivide(D, (0.0, 1.0))[0]
    else:
        _, D = exact("cubic")
        (s,) = subdivide(D, (1.0, 2.04))
        x0 = 1.0 + x0
    sp = splinter(D, s, x0, tol=1e-9)
    pts = sp.points
    assert np.all(np.diff(pts) < 0) or np.all(np.diff(pts) > 0)
    gaps = np.abs(pts - sp.limit)
    if gaps.size < 7:
        return
    ratios = gaps[-5:] / gaps[-6:-1]
    np.testing.assert_allclose(ratios, s.multiplier_at_attractor, rtol=0.2)
