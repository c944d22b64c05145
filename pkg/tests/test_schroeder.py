from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact
from conjfield.domain import subdivide
from conjfield.errors import OutOfRange
from conjfield.julia import julia_fixed_point
from conjfield.schroeder import field_from_h, flow, h_prime_product, koenigs_h, solve_schroeder

LOG_HALF = math.log(0.5)


@pytest.fixture(scope="module")
def quad_conj():
    _, D = exact("quadratic")
    (sub,) = subdivide(D, (0.0, 0.95))
    return D, sub, solve_schroeder(D, sub)


def test_koenigs_examples(quad_conj):
    D, sub, _ = quad_conj
    assert koenigs_h(D, sub, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert koenigs_h(D, sub, 0.0) == 0.0
    assert koenigs_h(D, sub, 1 / 3) == pytest.approx(0.5, abs=1e-12)


def test_h_prime_examples(quad_conj):
    D, sub, _ = quad_conj
    assert h_prime_product(D, sub, 0.5) == pytest.approx(4.0, abs=1e-10)
    assert h_prime_product(D, sub, 0.0) == 1.0
    assert h_prime_product(D, sub, 0.2) == pytest.approx(1.5625, abs=1e-10)


def test_koenigs_closed_form(quad_conj):
    D, sub, conj = quad_conj
    x = conj.h.grid
    np.testing.assert_allclose(conj.h.values, x / (1 - x), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(conj.h_prime.values, 1 / (1 - x) ** 2, rtol=1e-10)


def test_flow_examples(quad_conj):
    D, _, conj = quad_conj
    assert flow(D, conj, 0.5, 1.0) == pytest.approx(1 / 3, abs=1e-14)
    assert flow(D, conj, 0.5, 0.0) == 0.5
    assert flow(D, conj, 0.5, 2.0) == pytest.approx(0.2, abs=1e-14)


def test_flow_fractional_matches_closed_form(quad_conj):
    D, _, conj = quad_conj
    e, _ = exact("quadratic")
    for t in (0.5, 1.5, -0.5, 7.25):
        assert flow(D, conj, 0.5, t) == pytest.approx(float(e.flow(0.5, t)), rel=1e-12)


def test_flow_out_of_range_reports_boundary_time(quad_conj):
    D, _, conj = quad_conj
    with pytest.raises(OutOfRange) as info:
        flow(D, conj, 0.5, -10.0)
    # h(0.95) = 19 and h(0.5) = 1, so the edge is reached at 0.5**t = 19
    assert info.value.boundary_time == pytest.approx(math.log(19) / LOG_HALF, rel=1e-8)


def test_field_from_h_examples(quad_conj):
    _, _, conj = quad_conj
    assert field_from_h(conj, 0.5) == pytest.approx(-0.1732868, abs=1e-7)
    assert field_from_h(conj, 0.0) == 0.0
    assert field_from_h(conj, 0.2) == pytest.approx(-0.1109035, abs=1e-7)


@pytest.mark.parametrize("name,interval", [
    ("quadratic", (0.0, 0.95)), ("cubic", (0.0, 1.0)), ("cubic", (1.0, 2.04)), ("singular", (-0.5, 0.0)),
    ("singular", (0.0, 1.2)),
])
def test_schroeder_residual(name, interval):
    _, D = exact(name)
    sub = subdivide(D, interval)[0]
    conj = solve_schroeder(D, sub, tol=1e-14)
    x = conj.h.grid
    mu = sub.multiplier_at_attractor
    T = sub.step(D, x)
    r = np.max(np.abs(koenigs_h(D, sub, T) - mu * conj.h.values))
    assert r <= 10 * 1e-14 * np.max(np.abs(conj.h.values))
    assert conj.residual_norm == pytest.approx(r, rel=1e-6, abs=1e-300)


@pytest.mark.parametrize("name,interval", [("quadratic", (0.0, 0.95)), ("cubic", (0.0, 1.0)), ("singular", (0.0, 1.2))])
def test_h_over_h_prime_matches_julia(name, interval):
    e, D = exact(name)
    sub = subdivide(D, interval)[0]
    conj = solve_schroeder(D, sub)
    x = conj.h.grid[5:-5]
    g = julia_fixed_point(D, x, sub=sub)
    ratio = conj.h(x) / conj.h_prime(x)
    np.testing.assert_allclose(ratio, g(x), rtol=1e-6)
    np.testing.assert_allclose(ratio, e.g(x), rtol=1e-6)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(0.05, 0.9), t=st.floats(0.0, 2.0), s=st.floats(0.0, 2.0))
def test_flow_semigroup(quad_conj, x0, t, s):
    D, _, conj = quad_conj
    lhs = flow(D, conj, x0, t + s)
    rhs = flow(D, conj, flow(D, conj, x0, t), s)
    assert abs(lhs - rhs) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(0.05, 0.95), n=st.integers(0, 12))
def test_flow_integer_times_iterate_map(quad_conj, x0, n):
    D, _, conj = quad_conj
    x = x0
    for _ in range(n):
        x = float(D(x))
    assert abs(flow(D, conj, x0, float(n)) - x) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(0.1, 0.9), t=st.floats(0.0, 2.0), s=st.floats(0.0, 2.0))
def test_flow_semigroup_singular(x0, t, s):
    _, D = exact("singular")
    sub = subdivide(D, (0.0, 1.2))[0]
    conj = solve_schroeder(D, sub, n=41)
    assert abs(flow(D, conj, flow(D, conj, x0, t), s) - flow(D, conj, x0, t + s)) <= 1e-8
