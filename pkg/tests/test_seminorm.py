import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from config.settings import SEMINORM_COLUMNS
from services.odenorm_service import lp_norm
from services.seminorm_service import (
    SINGULAR,
    SeminormBlock,
    SeminormSpec,
    bracket_gap,
    bracket_spec,
    build_schedule,
    classical_norm,
    select_cuts,
    seminorm_converge,
    simple_seminorm,
    variant_Nprime,
)
from utils.errors import SpecError
from utils.step_functions import IntervalUnion, StepFn

from conftest import exponents, random_step, step_functions

FULL = IntervalUnion.full()


def _block(a, b, inner, connector=None):
    return SeminormBlock(IntervalUnion(((a, b),)), inner, connector)


def _staircase(steps=64):
    """p(t) = 1 + t sampled at the midpoints of `steps` equal cells."""
    return StepFn(np.linspace(0.0, 1.0, steps + 1), 1.0 + (np.arange(steps) + 0.5) / steps)


def test_simple_seminorm_known_values():
    assert simple_seminorm(StepFn.constant(1.0), SeminormSpec((_block(0, 1, 2.0),))) == pytest.approx(1.0)

    f = StepFn([0.0, 0.25, 1.0], [2.0, 3.0])
    spec = SeminormSpec((_block(0, 0.25, 1.0), _block(0.25, 1, 2.0, 2.0)))
    assert simple_seminorm(f, spec) == pytest.approx(math.sqrt(7), abs=1e-12)

    halves = SeminormSpec((_block(0, 0.5, 2.0), _block(0.5, 1, 2.0, 2.0)))
    assert simple_seminorm(StepFn.constant(1.0), halves) == pytest.approx(1.0, abs=1e-12)
    assert simple_seminorm(f, SeminormSpec()) == 0.0


@given(step_functions(), st.floats(1.0, 5.0), st.floats(0.01, 0.99))
def test_splitting_is_isometric(f, q, cut):
    spec = SeminormSpec((_block(0, cut, q), _block(cut, 1, q, q)))
    assert simple_seminorm(f, spec) == pytest.approx(classical_norm(f, q), rel=1e-12)


def test_spec_validation():
    with pytest.raises(SpecError):
        SeminormSpec((_block(0, 1, 0.5),))
    with pytest.raises(SpecError):
        SeminormSpec((_block(0, 1, 2.0, 2.0),))
    with pytest.raises(SpecError):
        SeminormSpec((_block(0, 0.5, 2.0), _block(0.5, 1, 2.0)))
    with pytest.raises(SpecError):
        SeminormSpec((_block(0, 0.6, 2.0), _block(0.5, 1, 2.0, 2.0)))
    with pytest.raises(SpecError):
        simple_seminorm(StepFn.constant(1.0), [(FULL, 2.0)])


def test_variant_nprime_known_values():
    spec = SeminormSpec((_block(0, 0.5, 1.4), _block(0.5, 1, 1.4, 1.6)))
    assert variant_Nprime(spec).connectors == (1.4,)
    tight = SeminormSpec((_block(0, 0.5, 2.0), _block(0.5, 1, 3.0, 3.0)))
    assert variant_Nprime(tight).blocks == tight.blocks
    mixed = SeminormSpec((_block(0, 0.5, 1.0), _block(0.5, 1, 2.0, 3.0)))
    assert variant_Nprime(mixed).connectors == (2.0,)
    assert mixed.is_bracketing()


def test_bracket_spec_known_values():
    spec = bracket_spec(StepFn.constant(2.0), FULL, [0.0, 0.3, 1.0])
    assert spec.inner == (2.0, 2.0) and spec.connectors == (2.0,)

    p = StepFn([0.0, 0.5, 1.0], [1.0, 3.0])
    exact = bracket_spec(p, FULL, [0.0, 0.5, 1.0])
    assert exact.inner == (1.0, 3.0) and exact.connectors == (3.0,)

    spanning = bracket_spec(p, FULL, [0.0, 0.25, 1.0])
    assert spanning.inner == (1.0, 1.0) and spanning.connectors == (3.0,)
    assert spanning.blocks[1].support.intervals == ((0.25, 1.0),)

    assert len(bracket_spec(p, IntervalUnion.empty(), [0.0, 1.0])) == 0


def test_bracket_spec_drops_null_cells():
    support = IntervalUnion(((0.0, 0.25), (0.75, 1.0)))
    spec = bracket_spec(StepFn.constant(2.0), support, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert len(spec) == 2
    assert [s.intervals for s in spec.supports] == [((0.0, 0.25),), ((0.75, 1.0),)]


def test_bracket_gap_known_values():
    assert bracket_gap(0.5, 0.7, 2.0, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert bracket_gap(0.5, 0.0, 1.5, 3.0) == 0.0
    assert bracket_gap(1.0, 1.0, 2.0, 2.1) == pytest.approx(abs(1 / 2.1 - 1 / 2), rel=1e-12)
    assert bracket_gap(0.0, 1.0, 1.0, 1.0) == 0.0
    assert bracket_gap(0.0, 1.0, 1.5, 2.0) == SINGULAR
    with pytest.raises(SpecError):
        bracket_gap(1.0, 1.0, 2.0, 1.5)


def test_bracket_gap_vanishes_uniformly():
    grid = np.linspace(0.02, 1.0, 50)
    worst = []
    for width in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]:
        worst.append(max(bracket_gap(A, x, 2.0, 2.0 + width) for A in grid for x in grid))
    assert np.all(np.diff(worst) < 0)
    assert worst[-1] < 1e-3


@given(step_functions(), exponents(max_cells=5))
def test_bracketing_specs_dominate_from_below(f, p):
    target = lp_norm(f, p)
    for support, cuts in build_schedule(p, 6):
        spec = bracket_spec(p, support, cuts)
        n_value = simple_seminorm(f, spec)
        assert n_value <= lp_norm(f.restrict(support), p) + 1e-12
        assert n_value <= target + 1e-12


@given(step_functions(), exponents(max_cells=5))
def test_spread_cuts_keep_n_below_nprime(f, p):
    for support, cuts in build_schedule(p, 4, use_jumps=False, spread=0.5):
        spec = bracket_spec(p, support, cuts)
        assert spec.is_bracketing()
        assert simple_seminorm(f, spec) <= simple_seminorm(f, variant_Nprime(spec)) + 1e-12


def test_select_cuts_by_spread():
    p = _staircase()
    cuts = select_cuts(p, FULL, generation=0, spread=1 / 16, use_jumps=False)
    assert len(cuts) == 17
    with_jumps = select_cuts(p, FULL, generation=2)
    assert len(with_jumps) == 65


def test_converge_constant_exponent(rng):
    f = random_step(rng)
    table = seminorm_converge(f, StepFn.constant(2.5), build_schedule(StepFn.constant(2.5), 5))
    assert list(table.columns) == SEMINORM_COLUMNS
    assert np.allclose(table["n_value"], lp_norm(f, StepFn.constant(2.5)), rtol=1e-12)
    assert np.allclose(table["gap"], 0.0, atol=1e-12)


def test_converge_two_step_exact_at_first_stage(two_step_exponent):
    table = seminorm_converge(StepFn.constant(1.0), two_step_exponent, [(FULL, [0.0, 0.5, 1.0])])
    assert table["n_value"].iloc[0] == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert table["nprime_value"].iloc[0] == pytest.approx(math.sqrt(3) / 2, abs=1e-12)


def test_converge_on_a_staircase_exponent():
    p = _staircase()
    table = seminorm_converge(StepFn.constant(1.0), p, build_schedule(p, 10))
    assert np.all(np.diff(table["n_value"]) >= -1e-12)
    assert np.all(table["n_value"] <= table["nprime_value"] + 1e-12)
    final = table.iloc[-1]
    assert final["gap"] / final["lp_norm"] < 1e-3
