from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact
from conjfield import truth
from conjfield.data import PairSet
from conjfield.fitting import fit_rational_barycentric
from conjfield.diagnostics import julia_residual
from conjfield.domain import subdivide
from conjfield.errors import InvalidMultiplier, MismatchedEndpoints, PreconditionError
from conjfield.grid import GridFunction
from conjfield.julia import (
    assemble_field,
    glue_subintervals,
    julia_fixed_point,
    julia_infinite_product,
    julia_least_squares,
    recover_field,
)
from conjfield.propagation import exact_map
from conjfield.schroeder import solve_schroeder

EPS_PRODUCT = 1e-14
EPS_FIXED = 1e-12


def test_product_quadratic():
    _, D = exact("quadratic")
    (sub,) = subdivide(D, (0.0, 0.95))
    assert julia_infinite_product(D, sub, 0.5, 1e-14) == pytest.approx(0.25, abs=1e-14)
    assert julia_infinite_product(D, sub, 0.0) == 0.0


def test_product_singular():
    _, D = exact("singular")
    sub = subdivide(D, (0.0, 1.2))[0]
    assert julia_infinite_product(D, sub, 0.5, 1e-12) == pytest.approx(0.6931472, abs=1e-7)


def test_fixed_point_cubic_case_a():
    e, D = exact("cubic")
    grid = np.linspace(0.005, 0.995, 200)
    g = julia_fixed_point(D, grid, eps=1e-12, rule="barycentric-rational")
    assert np.max(np.abs(g(grid) - e.g(grid))) < 1e-5


def test_fixed_point_linear_map():
    D = exact_map(lambda x: 0.5 * x, lambda x: 0.5 + 0 * x, (0.0, 1.0), base_hint=0.0)
    grid = np.linspace(0.01, 1.0, 50)
    g = julia_fixed_point(D, grid)
    np.testing.assert_allclose(g(grid), grid, rtol=1e-14)


def test_fixed_point_cubic_is_odd():
    _, D = exact("cubic")
    grid = np.linspace(-2.04, 2.04, 401)
    est = recover_field(D, "fixed-point", grid=grid)
    x = grid[np.abs(grid) < 2.0]
    assert np.max(np.abs(est.g(x) + est.g(-x))) < 1e-8


def test_least_squares_quadratic():
    _, D = exact("quadratic")
    est = julia_least_squares(D, np.linspace(0.01, 0.9, 50))
    p2, p3 = est.parametric_form[1]
    assert p2 == pytest.approx(-math.log(0.5), abs=1e-8)
    assert p3 == pytest.approx(0.0, abs=1e-8)


def test_least_squares_cubic_coefficient():
    _, D = exact("cubic")
    est = julia_least_squares(D, np.linspace(0.01, 0.99, 100))
    p2, p3 = est.parametric_form[1]
    assert p3 == pytest.approx(0.10536, abs=1e-4)
    assert abs(p2) < 1e-8


def test_least_squares_needs_enough_points():
    _, D = exact("quadratic")
    with pytest.raises(PreconditionError):
        julia_least_squares(D, [0.3], degree=4)


def test_glue_cubic_across_repelling_fixed_point():
    e, D = exact("cubic")
    inner = subdivide(D, (0.0, 1.0))[0]
    (outer,) = subdivide(D, (1.0, 2.04))
    xi = np.linspace(0.005, 0.995, 200)
    xo = np.linspace(1.005, 2.04, 200)
    parts = [(inner, julia_fixed_point(D, xi, sub=inner)), (outer, julia_fixed_point(D, xo, sub=outer))]
    g = glue_subintervals(D, parts)
    x = np.concatenate([xi, xo])
    assert np.max(np.abs(g(x) - e.g(x))) < 1e-4
    assert g(1.0) == pytest.approx(0.0, abs=1e-12)


def test_glue_single_part_unchanged():
    _, D = exact("quadratic")
    (sub,) = subdivide(D, (0.0, 0.95))
    gf = julia_fixed_point(D, np.linspace(0.01, 0.9, 30), sub=sub)
    assert glue_subintervals(D, [(sub, gf)]) is gf


def test_glue_rejects_parts_without_shared_end():
    _, D = exact("cubic")
    a = subdivide(D, (-1.0, 0.0))[0]
    (b,) = subdivide(D, (1.0, 2.04))
    ga = GridFunction(np.linspace(-0.9, -0.1, 5), np.zeros(5))
    gb = GridFunction(np.linspace(1.1, 2.0, 5), np.zeros(5))
    with pytest.raises(MismatchedEndpoints):
        glue_subintervals(D, [(a, ga), (b, gb)])


def test_assemble_examples():
    g = GridFunction(np.array([0.25, 0.5, 0.75]), np.array([0.1875, 0.25, 0.1875]))
    assert assemble_field(g, 0.5).v(0.5) == pytest.approx(-0.1732868, abs=1e-7)
    zero = GridFunction(np.array([0.0, 1.0]), np.zeros(2))
    assert np.all(assemble_field(zero, 0.5).v.values == 0)
    g2 = GridFunction(np.array([0.25, 0.5, 0.75]), np.array([0.234375, 0.375, 0.328125]))
    assert assemble_field(g2, 0.9).v(0.5) == pytest.approx(-0.0395101, abs=1e-7)
    with pytest.raises(InvalidMultiplier):
        assemble_field(g, 1.0)


def test_field_vanishes_at_interior_fixed_points():
    _, D = exact("cubic")
    est = recover_field(D, "fixed-point", grid=np.linspace(-2.0, 2.0, 401))
    for fp in (-1.0, 0.0, 1.0):
        assert est.v(fp) == pytest.approx(0.0, abs=1e-12)


CASES = {
    "quadratic": np.linspace(0.01, 0.9, 401),
    "cubic": np.linspace(-2.0, 2.0, 401),
    "singular": np.linspace(-0.45, 1.2, 401),
}


@pytest.mark.parametrize("name", list(CASES))
def test_julia_residual_product(name):
    _, D = exact(name)
    grid = CASES[name]
    g = lambda x: recover_field(D, "product", grid=np.atleast_1d(x), eps=EPS_PRODUCT).g.values
    # keep points whose image stays where D is defined
    Dx = D(grid)
    grid = grid[(Dx >= grid[0]) & (Dx <= grid[-1]) & (grid != D.base_fixed_point)]
    assert grid.size > 100
    r = julia_residual(D, g, grid)
    assert r <= 100 * EPS_PRODUCT * np.max(np.abs(g(grid)))


@pytest.mark.parametrize("name", list(CASES))
def test_julia_residual_fixed_point(name):
    _, D = exact(name)
    est = recover_field(D, "fixed-point", grid=CASES[name], eps=EPS_FIXED)
    assert est.diagnostics.julia_residual <= 100 * EPS_FIXED


@pytest.mark.parametrize("name", ["quadratic", "cubic"])
def test_julia_residual_least_squares(name):
    # only the families that contain the true field can reach the bound
    _, D = exact(name)
    grid = CASES[name]
    est = julia_least_squares(D, grid)
    model, p = est.parametric_form
    g = lambda x: model.eval(p, np.asarray(x)) / math.log(D.lam)
    assert julia_residual(D, g, grid) <= 100 * EPS_FIXED * np.max(np.abs(g(grid)))


@pytest.mark.parametrize("name", list(CASES))
def test_normalization_at_base_fixed_point(name):
    _, D = exact(name)
    est = recover_field(D, "fixed-point", grid=CASES[name])
    fp = D.base_fixed_point
    lo, hi = est.g.hull
    near = np.array([x for x in (fp - 1e-4, fp + 1e-4) if lo <= x <= hi])
    slopes = (est.g(near) - est.g(fp)) / (near - fp)
    np.testing.assert_allclose(slopes, 1.0, atol=1e-3)


@pytest.mark.parametrize("name,interval", [("quadratic", (0.0, 0.95)), ("cubic", (0.0, 1.0))])
def test_cross_method_agreement(name, interval):
    _, D = exact(name)
    sub = subdivide(D, interval)[0]
    conj = solve_schroeder(D, sub)
    x = conj.h.grid[10:-10]
    alg1 = julia_infinite_product(D, sub, x)
    alg2 = julia_fixed_point(D, x, sub=sub)(x)
    hh = conj.h.values[10:-10] / conj.h_prime.values[10:-10]
    ls = julia_least_squares(D, x)
    model, p = ls.parametric_form
    lsg = model.eval(p, x) / math.log(D.lam)
    for other in (alg2, hh, lsg):
        np.testing.assert_allclose(other, alg1, rtol=1e-5)


def test_cross_method_agreement_singular():
    _, D = exact("singular")
    sub = subdivide(D, (0.0, 1.2))[0]
    conj = solve_schroeder(D, sub)
    x = conj.h.grid[10:-10]
    alg1 = julia_infinite_product(D, sub, x)
    np.testing.assert_allclose(julia_fixed_point(D, x, sub=sub)(x), alg1, rtol=1e-5)
    np.testing.assert_allclose(conj.h.values[10:-10] / conj.h_prime.values[10:-10], alg1, rtol=1e-5)


def test_glued_cubic_continuous_at_one():
    e, D = exact("cubic")
    d = 1e-7
    g = recover_field(D, "product", grid=[1 - 2 * d, 1 - d, 1 + d, 1 + 2 * d]).g.values
    assert abs((2 * g[1] - g[0]) - (2 * g[2] - g[3])) < 1e-6
    g = g[1:3]
    # one-sided slopes agree with the true g'(1) = -2, so the two scales match
    assert g[1] / d == pytest.approx(-2.0, abs=1e-5)
    assert -g[0] / d == pytest.approx(-2.0, abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_scaled_solution_still_solves(c):
    _, D = exact("quadratic")
    grid = np.linspace(0.01, 0.9, 101)
    g = recover_field(D, "fixed-point", grid=grid).g
    base = julia_residual(D, g, grid)
    assert julia_residual(D, g.scaled(c), grid) <= abs(c) * base * (1 + 1e-12) + 1e-300
    assert julia_residual(D, g.scaled(c), grid) <= 100 * EPS_FIXED * np.max(np.abs(c * g.values))


def test_product_on_fitted_map_closes_tail():
    # a fitted map stops the orbit early; the Taylor tail keeps full accuracy
    e = truth.quadratic()
    x = np.linspace(0.0, 1.5, 100)
    D = fit_rational_barycentric(PairSet(x, e.D(x)))
    grid = np.linspace(0.01, 1.5, 300)
    est = recover_field(D, "product", grid=grid)
    assert np.max(np.abs(est.v(grid) - e.v(grid))) < 1e-9
