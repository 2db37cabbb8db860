import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from fifkit.fis2d import GridData2D, build_ifs2d
from fifkit.ifs1d import DataSet1D, build_ifs

LATTICE = 4096


@pytest.fixture
def tent():
    return DataSet1D((0.0, 0.5, 1.0), (0.0, 1.0, 0.0))


@pytest.fixture
def tent_ifs(tent):
    return build_ifs(tent, (0.3, 0.3))


@pytest.fixture
def unit3():
    return (0.0, 0.5, 1.0)


@pytest.fixture
def xy_grid(unit3):
    return GridData2D.from_function(lambda x, y: x * y, unit3, unit3)


@pytest.fixture
def bumped_grid(xy_grid, unit3):
    """z = xy with the bottom-side knot (0.5, 0) raised by 0.1: not collinear."""
    z = np.array(xy_grid.zs)
    z[1, 0] += 0.1
    return GridData2D(unit3, unit3, z)


@pytest.fixture
def collinear_grid(xy_grid, unit3):
    """z = xy with the centre knot moved; boundary data stay collinear."""
    z = np.array(xy_grid.zs)
    z[1, 1] = 0.7
    return GridData2D(unit3, unit3, z)


@st.composite
def datasets(draw, max_n=5, on_lattice=True, uniform=False):
    """Random data sets; knots lie on the 4096-interval lattice over [0, 1] unless told otherwise."""
    n = draw(st.integers(2, max_n))
    if uniform:
        knots = tuple(np.linspace(0.0, 1.0, n + 1))
    elif on_lattice:
        inner = draw(st.lists(st.integers(1, LATTICE - 1), min_size=n - 1, max_size=n - 1, unique=True))
        knots = tuple([0.0] + [i / LATTICE for i in sorted(inner)] + [1.0])
    else:
        gaps = draw(st.lists(st.floats(0.05, 3.0), min_size=n, max_size=n))
        start = draw(st.floats(-10, 10))
        knots = tuple(np.concatenate([[start], start + np.cumsum(gaps)]))
    values = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=n + 1, max_size=n + 1))
    return DataSet1D(knots, tuple(values))


@st.composite
def ifs_systems(draw, max_alpha=0.8, **kw):
    data = draw(datasets(**kw))
    alphas = draw(st.lists(st.floats(-max_alpha, max_alpha), min_size=data.N, max_size=data.N))
    return build_ifs(data, alphas)


def random_ifs(rng, max_n=5, max_alpha=0.8, uniform=False):
    n = int(rng.integers(2, max_n + 1))
    if uniform:
        t = np.linspace(0.0, 1.0, n + 1)
    else:
        inner = np.sort(rng.choice(np.arange(1, LATTICE), n - 1, replace=False))
        t = np.r_[0, inner, LATTICE] / LATTICE
    x = rng.uniform(-2, 2, n + 1)
    return build_ifs(DataSet1D(t, x), rng.uniform(-max_alpha, max_alpha, n))


def random_grid_ifs(rng, alpha=0.2, n=2, m=2):
    xs, ys = np.linspace(0, 1, n + 1), np.linspace(0, 1, m + 1)
    return build_ifs2d(GridData2D(tuple(xs), tuple(ys), rng.uniform(-1, 1, (n + 1, m + 1))), alpha)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n].line())
