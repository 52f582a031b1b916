import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from services.approx_service import lusin_sets
from services.odenorm_service import (
    check_exponent,
    lp_norm,
    lp_norm_combinations,
    phi_numeric,
    phi_step,
    restricted_sup_norm,
)
from utils.errors import DomainError, ShapeError
from utils.step_functions import IntervalUnion, SampledFn, StepFn

from conftest import exponents, irregular_exponent, irregular_step, random_exponent, random_step, step_functions


def test_constant_inputs():
    assert lp_norm(StepFn.constant(1.0), StepFn.constant(2.0)) == pytest.approx(1.0, abs=1e-12)
    for c in [0.5, 3.0, -7.0]:
        for q in [1.0, 1.5, 4.0, 30.0]:
            assert lp_norm(StepFn.constant(c), StepFn.constant(q)) == pytest.approx(abs(c), rel=1e-12)


def test_two_step_exponent(two_step_exponent):
    solution = phi_step(StepFn.constant(1.0), two_step_exponent)
    assert solution.at(0.5) == pytest.approx(0.5, abs=1e-12)
    assert solution.terminal == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert solution.phi[0] == 0.0


def test_zero_function(two_step_exponent):
    assert lp_norm(StepFn.constant(0.0), two_step_exponent) == 0.0


def test_identity_on_a_fine_grid():
    norm = lp_norm(lambda t: t, lambda t: np.full_like(t, 2.0), grid=10_000)
    assert norm == pytest.approx(1 / math.sqrt(3), abs=1e-3)


def test_grid_refinement_converges():
    grids = [1024, 2048, 4096, 8192, 16384]
    values = [lp_norm(lambda t: t, lambda t: 1.0 + t, grid=n) for n in grids]
    steps = np.abs(np.diff(values))
    assert np.all(np.diff(steps) < 0)
    assert steps[-1] < 1e-4


def test_constant_exponent_matches_classical_norm(rng):
    for q in [1.0, 1.5, 2.0, 3.0, 7.0]:
        for _ in range(100):
            f = random_step(rng)
            classical = np.dot(np.abs(f.values) ** q, f.lengths) ** (1 / q)
            assert lp_norm(f, StepFn.constant(q)) == pytest.approx(classical, rel=1e-10, abs=1e-12)


@given(step_functions(), exponents(), st.floats(-5.0, 5.0))
def test_homogeneity(f, p, factor):
    assert lp_norm(factor * f, p) == pytest.approx(abs(factor) * lp_norm(f, p), rel=1e-12, abs=1e-14)


@given(step_functions(), step_functions(), exponents())
def test_triangle_inequality(f, g, p):
    assert lp_norm(f + g, p) <= lp_norm(f, p) + lp_norm(g, p) + 1e-12


@given(step_functions(max_cells=7), st.data(), exponents())
def test_lattice_monotonicity_along_the_trajectory(f, data, p):
    extra = data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(f.values), max_size=len(f.values)))
    g = StepFn(f.breakpoints, np.where(f.values < 0, -1.0, 1.0) * (np.abs(f.values) + np.array(extra)))
    small, large = phi_step(f, p), phi_step(g, p)
    assert np.array_equal(small.t, large.t)
    assert np.all(small.phi <= large.phi + 1e-12)


def test_phi_grows_only_on_the_support(rng, exponent_factory):
    support = IntervalUnion(((0.25, 0.5),))
    f = random_step(rng, low=0.5, high=2.0).restrict(support)
    solution = phi_step(f, exponent_factory())
    assert np.all(np.diff(solution.phi) >= 0)
    assert np.all(solution.phi[solution.t <= 0.25] == 0.0)
    tail = solution.phi[solution.t >= 0.5]
    assert np.all(tail == tail[0])


def test_restriction_raises_the_slopes_inside(rng):
    support = IntervalUnion(((0.25, 0.5), (0.75, 1.0)))
    for _ in range(100):
        f = random_step(rng, low=0.1, high=3.0).refine(support.endpoints)
        p = random_exponent(rng)
        full, restricted = phi_step(f, p), phi_step(f.restrict(support), p)
        assert np.array_equal(full.t, restricted.t)
        mids = 0.5 * (full.t[:-1] + full.t[1:])
        inside = support.contains(mids)
        slopes_full = full.difference_quotients()[inside]
        slopes_restricted = restricted.difference_quotients()[inside]
        assert np.all(slopes_restricted >= slopes_full - 1e-12)


def test_sampled_solver_agrees_with_the_exact_one(rng):
    for _ in range(10):
        f, p = random_step(rng), random_exponent(rng)
        sampled = phi_numeric(SampledFn.from_step(f, 10_000), SampledFn.from_step(p, 10_000), h=1e-4)
        assert sampled.terminal == pytest.approx(phi_step(f, p).terminal, abs=1e-9)


@pytest.mark.parametrize("n", [1_000, 10_000, 100_000])
def test_sampled_solver_off_the_grid(n):
    f = StepFn([0.0, 1 / math.pi, 1.0], [1.0, 0.0])
    p = StepFn.constant(2.0)
    exact = lp_norm(f, p)
    assert exact == pytest.approx(math.sqrt(1 / math.pi), rel=1e-12)
    assert abs(lp_norm(f, p, grid=n) - exact) <= 1.0 / n


def test_sampled_solver_converges_on_irregular_data(rng):
    for _ in range(5):
        f, p = irregular_step(rng), irregular_exponent(rng, cells=3)
        exact = lp_norm(f, p)
        errors = [abs(lp_norm(f, p, grid=n) - exact) for n in [4_000, 64_000]]
        assert errors[0] <= 5e-2 * exact + 1e-12
        assert errors[1] <= 1e-2 * exact + 1e-12


def test_sampled_solver_checks_the_grid():
    f = SampledFn.from_callable(lambda t: t, 10)
    with pytest.raises(ShapeError):
        phi_numeric(f, SampledFn.from_callable(lambda t: 2.0, 20))
    with pytest.raises(ShapeError):
        phi_numeric(f, SampledFn.from_callable(lambda t: 2.0, 10), h=0.05)


def test_exponent_range():
    with pytest.raises(DomainError):
        lp_norm(StepFn.constant(1.0), StepFn.constant(0.5))
    with pytest.raises(DomainError):
        check_exponent(StepFn.constant(100.0))
    check_exponent(StepFn.constant(64.0))


def test_combinations_match_single_norms(rng):
    basis = [random_step(rng) for _ in range(3)]
    p = random_exponent(rng)
    coefficients = rng.normal(size=(50, 3))
    batch = lp_norm_combinations(basis, p, coefficients)
    assert batch.shape == (50,)
    for c, value in zip(coefficients, batch):
        combined = sum((float(ci) * f for ci, f in zip(c, basis[1:])), float(c[0]) * basis[0])
        assert value == pytest.approx(lp_norm(combined, p), rel=1e-12, abs=1e-14)


def test_restricted_sup_norm_on_growing_sets():
    f, p = StepFn.constant(1.0), StepFn.constant(2.0)
    sets = [IntervalUnion(((0.0, 1.0 - 1.0 / n),)) for n in range(1, 1001)]
    assert restricted_sup_norm(f, p, sets) == pytest.approx(1.0, abs=1e-3)
    assert restricted_sup_norm(f, p, [IntervalUnion.full()]) == pytest.approx(lp_norm(f, p))


def test_restricted_sup_norm_on_lusin_sets(rng):
    for _ in range(20):
        f, p = random_step(rng, low=-1.0, high=1.0), random_exponent(rng)
        sets = [lusin_sets(p, n) for n in range(1, 31)]
        assert restricted_sup_norm(f, p, sets) == pytest.approx(lp_norm(f, p), abs=1e-6)


def test_restricted_sup_norm_warns_on_unordered_sets(caplog):
    sets = [IntervalUnion(((0.0, 0.5),)), IntervalUnion(((0.5, 1.0),))]
    with caplog.at_level(logging.WARNING):
        value = restricted_sup_norm(StepFn.constant(1.0), StepFn.constant(1.0), sets)
    assert value == pytest.approx(0.5)
    assert "not increasing" in caplog.text
