from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjfield import truth
from conjfield.errors import DomainMarginWarning, InvalidBracket, OutOfRange
from conjfield.numeric import Bracket, ScalarMap, find_root, invert_monotone, numeric_derivative


def test_find_root_quadratic():
    f = lambda x: x * x - 4
    assert find_root(f, Bracket.around(f, 0.0, 3.0), 1e-12) == pytest.approx(2.0, abs=1e-12)


def test_find_root_inverse_of_quadratic_map():
    D = truth.quadratic().D
    f = lambda x: D(x) - 1 / 3
    assert find_root(f, Bracket.around(f, 0.0, 1.0)) == pytest.approx(0.5, abs=1e-12)


def test_find_root_identity():
    f = lambda x: x
    assert find_root(f, Bracket.around(f, -1.0, 1.0)) == pytest.approx(0.0, abs=1e-12)


def test_find_root_rejects_bracket_without_sign_change():
    f = lambda x: x * x + 1
    with pytest.raises(InvalidBracket):
        find_root(f, Bracket.around(f, -1.0, 1.0))


def test_invert_conjugation_of_quadratic_map():
    h = ScalarMap(lambda x: x / (1 - x), domain=(0.0, 0.9))
    assert invert_monotone(h, 1.0) == pytest.approx(0.5, abs=1e-10)


def test_invert_identity():
    f = ScalarMap(lambda x: x, domain=(-1.0, 1.0))
    assert invert_monotone(f, 0.3) == pytest.approx(0.3, abs=1e-12)


def test_invert_quadratic_map():
    D = truth.quadratic()
    f = ScalarMap(D.D, D.dD, (0.0, 0.9))
    assert invert_monotone(f, 0.2) == pytest.approx(1 / 3, abs=1e-10)


def test_invert_outside_range():
    f = ScalarMap(lambda x: x, domain=(0.0, 1.0))
    with pytest.raises(OutOfRange):
        invert_monotone(f, 2.0)


def test_numeric_derivative_examples():
    assert numeric_derivative(lambda x: x * x, 1.0) == pytest.approx(2.0, abs=1e-8)
    assert numeric_derivative(truth.quadratic().D, 0.5) == pytest.approx(0.8888889, abs=1e-7)
    assert numeric_derivative(truth.singular().D, 0.0) == pytest.approx(0.5, abs=1e-7)


def test_numeric_derivative_one_sided_at_domain_end():
    f = ScalarMap(lambda x: x * x, domain=(0.0, 1.0))
    with pytest.warns(DomainMarginWarning):
        d = numeric_derivative(f, 0.0)
    assert d == pytest.approx(0.0, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(
    c=st.floats(-3, 3), b=st.floats(-3, 3), a=st.floats(-3, 3),
    x=st.floats(-5, 5),
)
def test_numeric_derivative_exact_on_quadratics(a, b, c, x):
    f = lambda t: a * t * t + b * t + c
    exact = 2 * a * x + b
    assert numeric_derivative(f, x) == pytest.approx(exact, rel=1e-8, abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(y=st.floats(0.0, 0.45))
def test_root_resubstitution(y):
    D = truth.quadratic().D
    f = lambda x: D(x) - y
    tol = 1e-12
    root = find_root(f, Bracket.around(f, 0.0, 0.95), tol)
    # a Lipschitz bound of 1 on [0, 0.95] turns 10 tol in x into 10 tol in f
    assert abs(f(root)) <= 10 * tol


@settings(max_examples=50, deadline=None)
@given(y=st.floats(0.0, 9.0))
def test_inverse_resubstitution(y):
    h = ScalarMap(lambda x: x / (1 - x), domain=(0.0, 0.9))
    x = invert_monotone(h, y, tol=1e-13)
    assert math.isclose(h(x), y, rel_tol=1e-10, abs_tol=1e-12)
