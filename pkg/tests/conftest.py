from __future__ import annotations

import warnings

import numpy as np
import pytest

from conjfield import truth
from conjfield.propagation import exact_map

HULLS = {
    "quadratic": (0.0, 0.95),
    "cubic": (-2.04, 2.04),
    "singular": (-0.5, 1.2),
}


def exact(name: str, hull=None):
    """Exact propagation map of a ground-truth example."""
    e = truth.get_example(name)
    return e, exact_map(e.D, e.dD, hull or HULLS[name], base_hint=0.0)


@pytest.fixture
def quad():
    return exact("quadratic")


@pytest.fixture
def cub():
    return exact("cubic")


@pytest.fixture
def sing():
    return exact("singular")


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
