"""
Simple seminorms

    |f|_N = ((L^(p_1)(mu_1) ⊕_(q_2) L^(p_2)(mu_2)) ⊕_(q_3) ...) ⊕_(q_j) L^(p_j)(mu_j)

over successive supports, their N' versions (connectors replaced by the inner
exponents) and the bracket specs built from an exponent and a set of cuts.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from config.settings import P_MAX, SCHEDULE_MAX_GENERATION, SEMINORM_COLUMNS, SPREAD_MAX_GENERATION
from services.approx_service import lusin_sets
from services.odenorm_service import lp_norm
from utils.errors import SpecError
from utils.seqspace import ladder_norm
from utils.step_functions import IntervalUnion

logger = logging.getLogger(__name__)

# bracket_gap at A = 0: the start of phi is singular there and handled in closed form elsewhere
SINGULAR = math.inf


@dataclass(frozen=True)
class SeminormBlock:
    """L^inner on `support`, joined to the previous blocks with `connector`."""

    support: IntervalUnion
    inner: float
    connector: float = None


@dataclass(frozen=True)
class SeminormSpec:
    blocks: tuple = ()

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        for i, block in enumerate(blocks):
            if not 1 <= block.inner <= P_MAX:
                raise SpecError(f"block {i}: inner exponent {block.inner} outside [1, {P_MAX}]")
            if i == 0:
                if block.connector is not None:
                    raise SpecError("block 0: the first block has no connector")
            elif block.connector is None or not 1 <= block.connector <= P_MAX:
                raise SpecError(f"block {i}: connector {block.connector} outside [1, {P_MAX}]")
        for i, (left, right) in enumerate(zip(blocks, blocks[1:])):
            if left.support and right.support and left.support.upper > right.support.lower:
                raise SpecError(f"blocks {i} and {i + 1}: supports are not successive")

    def __len__(self):
        return len(self.blocks)

    @property
    def inner(self):
        return tuple(block.inner for block in self.blocks)

    @property
    def connectors(self):
        return tuple(block.connector for block in self.blocks[1:])

    @property
    def supports(self):
        return [block.support for block in self.blocks]

    def is_bracketing(self):
        return all(block.inner <= block.connector for block in self.blocks[1:])


def classical_norm(f, q, support=None):
    """
    (∫_S |f|^q)^(1/q) over an IntervalUnion S (all of [0, 1] by default)

    Scaled by the largest value so large q cannot overflow.
    """
    support = IntervalUnion.full() if support is None else support
    refined = f.refine(support.endpoints)
    inside = support.contains(refined.midpoints) & (refined.lengths > 0)
    values = np.abs(refined.values[inside])
    if values.size == 0:
        return 0.0
    top = float(values.max())
    if top == 0.0:
        return 0.0
    if math.isinf(q):
        return top
    return top * float(np.dot((values / top) ** q, refined.lengths[inside])) ** (1.0 / q)


def simple_seminorm(f, spec):
    """
    |f|_N: block-wise L^(p_i) norms folded with the connectors

    Args:
        f: StepFn
        spec: SeminormSpec

    Returns:
        Nonnegative float
    """
    if not isinstance(spec, SeminormSpec):
        raise SpecError(f"expected a SeminormSpec, got {type(spec).__name__}")
    if not spec.blocks:
        return 0.0
    parts = [classical_norm(f, block.inner, block.support) for block in spec.blocks]
    return ladder_norm(np.asarray(parts), spec.connectors)


def variant_Nprime(spec):
    """The N' version of a spec: every connector replaced by its block's inner exponent."""
    blocks = [spec.blocks[0]] if spec.blocks else []
    blocks.extend(replace(block, connector=block.inner) for block in spec.blocks[1:])
    return SeminormSpec(tuple(blocks))


def _cell_ranges(p, support, cuts):
    """Per cut cell: m(C ∩ cell) and inf p, sup p over it (inf, -inf on null cells)."""
    breakpoints = np.union1d(np.union1d(cuts, support.endpoints), p.breakpoints)
    mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    inside = support.contains(mids)
    cell = np.clip(np.searchsorted(cuts, mids, side="right") - 1, 0, len(cuts) - 2)
    values = p(mids)

    weights = np.where(inside, np.diff(breakpoints), 0.0)
    measures = np.bincount(cell, weights=weights, minlength=len(cuts) - 1)
    lows = np.full(len(cuts) - 1, np.inf)
    highs = np.full(len(cuts) - 1, -np.inf)
    np.minimum.at(lows, cell[inside], values[inside])
    np.maximum.at(highs, cell[inside], values[inside])
    return measures, lows, highs


def bracket_spec(p, support, cuts):
    """
    Bracketing spec of p on C over the cells [a_i, a_(i+1)] of the cuts

    Block i lives on C ∩ [a_i, a_(i+1)] with inner exponent inf p and connector
    sup p over that set; cells meeting C in a null set are dropped.

    Args:
        p: StepFn exponent
        support: IntervalUnion C
        cuts: 0 = a_1 < ... < a_j = 1

    Returns:
        SeminormSpec (empty when C is null)
    """
    cuts = np.union1d(np.asarray(cuts, dtype=float), [0.0, 1.0])
    measures, lows, highs = _cell_ranges(p, support, cuts)
    blocks = []
    for i in np.flatnonzero(measures > 0):
        piece = support.clip(cuts[i], cuts[i + 1])
        blocks.append(SeminormBlock(piece, float(lows[i]), float(highs[i]) if blocks else None))
    return SeminormSpec(tuple(blocks))


def bracket_gap(A, x, p_lo, q_hi):
    """
    |x^q / q * A^(1-q) - x^p / p * A^(1-p)| with p = p_lo and q = q_hi

    The first term is the rate of (A^q + (t x^p)^(q/p))^(1/q) at t = 0, the
    second the right-hand side of the phi equation; the gap vanishes as the
    bracket [p_lo, q_hi] shrinks.

    Returns:
        Nonnegative float, or SINGULAR when A = 0 and q_hi > 1
    """
    if not 1 <= p_lo <= q_hi <= P_MAX:
        raise SpecError(f"need 1 <= p_lo <= q_hi <= {P_MAX}, got p_lo={p_lo}, q_hi={q_hi}")
    x = abs(x)
    if x == 0:
        return 0.0
    if A == 0:
        return 0.0 if q_hi == 1 else SINGULAR
    upper = x ** q_hi / q_hi * A ** (1 - q_hi)
    lower = x ** p_lo / p_lo * A ** (1 - p_lo)
    return abs(upper - lower)


def _max_spread(p, support, cuts):
    measures, lows, highs = _cell_ranges(p, support, cuts)
    inside = measures > 0
    return float(np.max(highs[inside] - lows[inside])) if np.any(inside) else 0.0


def select_cuts(p, support, generation=0, spread=0.0, use_jumps=True, max_generation=SPREAD_MAX_GENERATION):
    """
    Cuts for a bracket spec: dyadic points j / 2^k, plus the jumps of p

    With use_jumps the cells carry a constant exponent already. Otherwise k
    grows from `generation` until sup p - inf p on every C ∩ cell is at most
    `spread`, or until max_generation.

    Returns:
        Sorted cut array containing 0 and 1
    """
    extra = p.jumps if use_jumps else np.zeros(0)
    k = generation
    while True:
        cuts = np.union1d(np.linspace(0.0, 1.0, 2 ** k + 1), extra)
        if use_jumps or k >= max_generation or _max_spread(p, support, cuts) <= spread:
            return cuts
        k += 1


def build_schedule(p, stages, use_jumps=True, spread=0.0, max_generation=SCHEDULE_MAX_GENERATION):
    """[(C_m, cuts_m)] for m = 1..stages with dyadic resolution 2^-min(m, max_generation)."""
    schedule = []
    for m in range(1, stages + 1):
        support = lusin_sets(p, m)
        cuts = select_cuts(p, support, min(m, max_generation), spread, use_jumps)
        schedule.append((support, cuts))
    return schedule


def seminorm_converge(f, p, schedule):
    """
    |f|_(N_n) and |f|_(N'_n) along a schedule of (C_m, cuts)

    Args:
        f: StepFn
        p: StepFn exponent
        schedule: Iterable of (IntervalUnion, cuts)

    Returns:
        DataFrame with columns stage, n_value, nprime_value, lp_norm, gap
    """
    target = lp_norm(f, p)
    rows = []
    for stage, (support, cuts) in enumerate(schedule, start=1):
        spec = bracket_spec(p, support, cuts)
        n_value = simple_seminorm(f, spec)
        nprime_value = simple_seminorm(f, variant_Nprime(spec))
        rows.append([stage, n_value, nprime_value, target, target - n_value])
        logger.debug("stage %d: %d blocks, N = %.12g, N' = %.12g", stage, len(spec), n_value, nprime_value)
    return pd.DataFrame(rows, columns=SEMINORM_COLUMNS)
