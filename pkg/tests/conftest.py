import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from utils.step_functions import StepFn

DYADIC = 16
MIN_GAP = 1e-3

settings.register_profile(
    "varlp",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("varlp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_step(rng, cells=None, low=-3.0, high=3.0, resolution=DYADIC):
    """Step function with breakpoints on the grid j / resolution."""
    cells = cells or int(rng.integers(1, 6))
    interior = np.sort(rng.choice(np.arange(1, resolution), size=min(cells - 1, resolution - 1), replace=False))
    breakpoints = np.concatenate(([0.0], interior / resolution, [1.0]))
    return StepFn(breakpoints, rng.uniform(low, high, size=len(breakpoints) - 1))


def random_exponent(rng, cells=None, low=1.0, high=4.0, resolution=DYADIC):
    return random_step(rng, cells, low, high, resolution)


def _spaced(points):
    points = np.sort(np.asarray(points, dtype=float))
    keep, last = [], 0.0
    for t in points:
        if t - last >= MIN_GAP and 1.0 - t >= MIN_GAP:
            keep.append(t)
            last = t
    return np.array(keep)


def irregular_step(rng, cells=None, low=-3.0, high=3.0):
    """Step function with uniformly random breakpoints, off every dyadic grid."""
    cells = cells or int(rng.integers(1, 6))
    interior = _spaced(rng.uniform(0.0, 1.0, size=cells - 1))
    breakpoints = np.concatenate(([0.0], interior, [1.0]))
    return StepFn(breakpoints, rng.uniform(low, high, size=len(breakpoints) - 1))


def irregular_exponent(rng, cells=None, low=1.0, high=4.0):
    return irregular_step(rng, cells, low, high)


@st.composite
def step_functions(draw, max_cells=5, low=-3.0, high=3.0, dyadic=False):
    """Step functions with breakpoints anywhere in (0, 1), or on the 1/16 grid with dyadic=True."""
    cells = draw(st.integers(1, max_cells))
    if dyadic:
        interior = draw(st.lists(st.integers(1, DYADIC - 1), min_size=cells - 1, max_size=cells - 1, unique=True))
        interior = np.sort(np.array(interior, dtype=float)) / DYADIC
    else:
        points = st.floats(0.0, 1.0, exclude_min=True, exclude_max=True)
        interior = _spaced(draw(st.lists(points, min_size=cells - 1, max_size=cells - 1)))
    breakpoints = np.concatenate(([0.0], interior, [1.0]))
    values = draw(st.lists(st.floats(low, high), min_size=len(breakpoints) - 1, max_size=len(breakpoints) - 1))
    return StepFn(breakpoints, values)


def exponents(max_cells=4, low=1.0, high=4.0, dyadic=False):
    return step_functions(max_cells, low, high, dyadic)


@pytest.fixture
def step_factory(rng):
    return lambda **kwargs: random_step(rng, **kwargs)


@pytest.fixture
def exponent_factory(rng):
    return lambda **kwargs: random_exponent(rng, **kwargs)


@pytest.fixture
def irregular_factory(rng):
    return lambda **kwargs: irregular_step(rng, **kwargs)


@pytest.fixture
def two_step_exponent():
    return StepFn([0.0, 0.5, 1.0], [1.0, 2.0])


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document into tmp_path and return its path as a string."""

    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return _write
