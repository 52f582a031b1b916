"""
The embedding pipeline into the universal sequence space l^(r(·)).

Stage n maps a function f to

    x_n = place(b_map(E(T_n f | C_n, F_(k_n))))

where C_n are the Lusin sets of p, F_(k_n) the dyadic partition refined by
the endpoints of C_n and by the breakpoints of the pipeline's inputs, and T_n
the truncation at alpha_n. Everything except T_n depends on p, n and the
seed points only, so a pipeline caches one StageFrame per stage and the stage
map is linear once alpha_n >= max |f|.

Frames are built in order. When stage n has the connectors of stage n - 1,
its rationals are taken at or below the previous ones, so the stage norms of
a fixed input never decrease once the atoms stop changing.

Sequences (x_n) stand for elements of the ultrapower. Every sequence built
here converges, so equality, order and norm are judged by ordinary limits
over a final Cauchy window. The same semantics carry over to sequences of
placed matrices in the double space.
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd

from config.settings import (
    CAUCHY_WINDOW,
    DELTA_HALVINGS,
    DELTA_START_FACTOR,
    DOUBLE_EMBED_COLUMNS,
    EMBED_COLUMNS,
    MAX_GENERATION,
    PLACEMENT_START_INDEX,
    QUASI_SLACK,
    QUASI_TARGET_POWER,
    UP_LEQ_TOL,
)
from services.approx_service import TruncationSchedule, cond_expect, lusin_sets, stage_partition, truncate
from services.odenorm_service import check_exponent, lp_norm
from services.seminorm_service import bracket_spec, variant_Nprime
from utils.errors import BudgetExceededError, DistortionError, DomainError, PreconditionError
from utils.exponents import DEFAULT_ENUM
from utils.seqspace import LEFT, SparseVector, VarMatrix, double_norm, ladder_norm, sparse_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbedConfig:
    """
    Schedules of the pipeline

    Args:
        alpha: Truncation levels alpha_n
        max_generation: Cap on the dyadic generation k_n = min(n, max_generation)
        target_power: Placement distortion target 1 + 1/n^target_power; >= 1 keeps
            it below (n + 1) / n
        delta_start_factor: First placement width, relative to the width that
            meets the target for any choice of rationals
        delta_halvings: Placement retries before giving up
        start_index: l^(r(·)) position of the first coordinate
    """

    alpha: TruncationSchedule = field(default_factory=TruncationSchedule)
    max_generation: int = MAX_GENERATION
    target_power: float = QUASI_TARGET_POWER
    delta_start_factor: float = DELTA_START_FACTOR
    delta_halvings: int = DELTA_HALVINGS
    start_index: int = PLACEMENT_START_INDEX

    def __post_init__(self):
        if self.max_generation < 0:
            raise DomainError(f"max_generation: must be >= 0, got {self.max_generation}")
        if self.target_power < 1:
            raise DomainError(f"target_power: must be >= 1, got {self.target_power}")
        if not self.delta_start_factor > 0:
            raise DomainError(f"delta_start_factor: must be > 0, got {self.delta_start_factor}")
        if self.delta_halvings < 0:
            raise DomainError(f"delta_halvings: must be >= 0, got {self.delta_halvings}")
        if self.start_index < 1:
            raise DomainError(f"start_index: must be >= 1, got {self.start_index}")

    def lusin_index(self, n):
        return n

    def generation(self, n):
        return min(n, self.max_generation)

    def target(self, n):
        return 1.0 + 1.0 / n ** self.target_power


@dataclass(frozen=True, eq=False)
class LadderImage:
    """A vector of R^j with the connectors (p_2, ..., p_j) of an N' spec."""

    values: np.ndarray
    connectors: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        connectors = tuple(float(q) for q in self.connectors)
        if len(values) and len(connectors) != len(values) - 1:
            raise DomainError(f"{len(values)} coordinates need {len(values) - 1} connectors")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "connectors", connectors)

    def __len__(self):
        return len(self.values)

    def norm(self):
        if not len(self.values):
            return 0.0
        return ladder_norm(self.values, self.connectors)


@dataclass(frozen=True)
class Placement:
    """Strictly increasing positions and the connector rationals they pick up."""

    positions: tuple
    rationals: tuple
    delta: float
    bound: float


def structural_bound(targets, placed):
    """
    2^(sum_k 1/q_k - 1/r_k): worst-case ratio between the ladder norms with
    connectors q and with the larger connectors r, over all vectors.
    """
    exponent = sum(1.0 / q - 1.0 / r for q, r in zip(targets, placed))
    return 2.0 ** exponent


def _positions(connectors, enum, delta, start):
    positions, rationals = [start], []
    for q in connectors:
        index, rational = enum.find_index_above(q, delta, positions[-1] - 1)
        positions.append(index + 1)
        rationals.append(rational)
    return tuple(positions), tuple(rationals)


def _nested_positions(connectors, previous, enum, width, start):
    """
    Positions whose rationals sit in [q_k, r_k] for the previous rationals r_k

    Returns None when a connector hit exactly comes too early in the enumeration.
    """
    positions, rationals = [start], []
    for q, before in zip(connectors, previous.rationals):
        if before.fraction == Fraction(q):
            index, rational = enum.index_of(before), before
            if index + 1 <= positions[-1]:
                return None
        else:
            index, rational = enum.find_index_above(q, min(width, before.fraction - Fraction(q)), positions[-1] - 1)
        positions.append(index + 1)
        rationals.append(rational)
    return tuple(positions), tuple(rationals)


def placement_for(connectors, enum, target, config=None, previous=None):
    """
    Positions for a ladder with the given connectors, distorting by at most `target`

    The bracket width starts at delta_start_factor * log2(target) / sum 1/q_k^2
    and is halved until the structural bound reaches the target.

    With a `previous` Placement for the same connectors, every new rational is
    taken in [q_k, r_k] of the previous one, and the previous placement itself
    is returned when it already meets the target.

    Returns:
        Placement

    Raises:
        BudgetExceededError: the halving budget ran out
    """
    config = config or EmbedConfig()
    connectors = tuple(float(q) for q in connectors)
    if any(math.isinf(q) for q in connectors):
        raise DomainError("placement needs finite connectors")
    if not connectors:
        return Placement((config.start_index,), (), 0.0, 1.0)
    if previous is not None and len(previous.rationals) != len(connectors):
        raise PreconditionError(f"previous placement has {len(previous.rationals)} rationals for {len(connectors)} connectors")
    if previous is not None and previous.bound <= target:
        return previous

    delta = Fraction(config.delta_start_factor * math.log2(target) / sum(1.0 / q ** 2 for q in connectors))
    for attempt in range(config.delta_halvings + 1):
        if previous is None:
            found = _positions(connectors, enum, delta, config.start_index)
        else:
            found = _nested_positions(connectors, previous, enum, delta, config.start_index)
            if found is None:
                logger.debug("nested placement blocked by an exact connector, placing afresh")
                return placement_for(connectors, enum, target, config)
        positions, rationals = found
        bound = structural_bound(connectors, [float(r) for r in rationals])
        if bound <= target:
            logger.debug("placed %d connectors with delta %.3g after %d halvings", len(connectors), float(delta), attempt)
            return Placement(positions, rationals, float(delta), bound)
        delta /= 2
    raise BudgetExceededError(f"no placement within target {target} after {config.delta_halvings} halvings")


def b_map(g, atoms, exponents):
    """
    B: g ↦ (m(Δ_1)^(1/p_1) g|Δ_1, ..., m(Δ_j)^(1/p_j) g|Δ_j)

    Args:
        g: StepFn constant on every atom
        atoms: Successive IntervalUnion atoms Δ_1, ..., Δ_j
        exponents: Inner exponents p_1, ..., p_j

    Returns:
        LadderImage with connectors (p_2, ..., p_j)

    Raises:
        PreconditionError: g is not constant on some atom
    """
    if len(atoms) != len(exponents):
        raise DomainError(f"{len(atoms)} atoms for {len(exponents)} exponents")
    values = []
    for i, (atom, q) in enumerate(zip(atoms, exponents)):
        lo, hi = g.essential_range(atom)
        if lo != hi:
            raise PreconditionError(f"atom {i}: g is not constant ({lo} .. {hi})")
        values.append(atom.measure ** (1.0 / q) * lo)
    return LadderImage(np.asarray(values), tuple(exponents[1:]))


def place(image, delta, enum=None, start=PLACEMENT_START_INDEX):
    """
    iota: put the coordinates of a LadderImage at strictly increasing positions

    Coordinate k + 1 goes right after the connector rational r(i_k) in
    [p_k, p_k + delta]; zero coordinates in between collapse, so the sparse
    norm uses the rationals in place of the connectors.

    Args:
        image: LadderImage
        delta: Bracket width, > 0
        enum: RationalEnum
        start: Position of the first coordinate

    Returns:
        Tuple (SparseVector, Placement)
    """
    enum = enum or DEFAULT_ENUM
    if not len(image):
        return SparseVector(), Placement((), (), 0.0, 1.0)
    positions, rationals = _positions(image.connectors, enum, delta, start)
    bound = structural_bound(image.connectors, [float(r) for r in rationals])
    return SparseVector(positions, image.values), Placement(positions, rationals, delta, bound)


@dataclass(frozen=True, eq=False)
class StageFrame:
    """Everything stage n needs that does not depend on f."""

    n: int
    lusin_index: int
    generation: int
    lusin: object
    partition: object
    spec: object
    placement: Placement
    target: float

    @property
    def atoms(self):
        return self.spec.supports


@dataclass(frozen=True, eq=False)
class StageState:
    """Stage n applied to one input: the image of B_n, its placement and norms."""

    frame: StageFrame
    alpha: float
    image: LadderImage
    vector: SparseVector
    image_norm: float
    stage_norm: float

    @property
    def n(self):
        return self.frame.n

    @property
    def placement(self):
        return self.frame.placement.positions

    @property
    def quasi_ratio(self):
        if self.stage_norm == 0:
            return 1.0
        return self.image_norm / self.stage_norm

    def check_quasi(self):
        """stage_norm <= image_norm <= target * stage_norm, with rounding slack."""
        slack = QUASI_SLACK * max(self.image_norm, 1.0)
        return (
            self.stage_norm <= self.image_norm + slack
            and self.image_norm <= self.frame.target * self.stage_norm + slack
        )


class EmbeddingPipeline:
    """
    Stage maps x_n for a fixed exponent p

    Frames are cached per stage, so inputs sharing a pipeline share positions
    and their stage vectors can be added and compared entrywise. The partitions
    are cut at `points`; inputs stepping elsewhere only see their conditional
    expectations on the atoms.
    """

    def __init__(self, p, config=None, enum=None, points=()):
        check_exponent(p)
        self.p = p
        self.config = config or EmbedConfig()
        self.enum = enum or DEFAULT_ENUM
        points = np.asarray(points, dtype=float).reshape(-1)
        self.points = np.unique(points[(points > 0.0) & (points < 1.0)])
        self._frames = []
        self._lock = threading.Lock()

    @classmethod
    def for_inputs(cls, p, inputs, config=None, enum=None):
        """Pipeline whose atoms carry every breakpoint of the given step functions."""
        points = [f.breakpoints for f in inputs]
        return cls(p, config, enum, np.concatenate(points) if points else ())

    def frame(self, n):
        if n < 1:
            raise DomainError(f"stage must be >= 1, got {n}")
        if n <= len(self._frames):
            return self._frames[n - 1]
        with self._lock:
            while len(self._frames) < n:
                previous = self._frames[-1] if self._frames else None
                self._frames.append(self._build_frame(len(self._frames) + 1, previous))
        return self._frames[n - 1]

    def _build_frame(self, n, previous=None):
        config = self.config
        lusin = lusin_sets(self.p, config.lusin_index(n))
        partition = stage_partition(lusin, n, config.max_generation, self.points)
        spec = variant_Nprime(bracket_spec(self.p, lusin, partition.cuts))
        target = config.target(n)
        nested = previous.placement if previous is not None and previous.spec.connectors == spec.connectors else None
        placement = placement_for(spec.connectors, self.enum, target, config, nested)
        logger.debug(
            "frame %d: m(C) = %.12g, %d blocks, placement bound %.9g <= %.9g",
            n, lusin.measure, len(spec), placement.bound, target,
        )
        return StageFrame(
            n, config.lusin_index(n), config.generation(n), lusin, partition, spec, placement, target
        )

    def stage(self, f, n):
        """StageState of f at stage n; raises DistortionError if the quasi inequality fails."""
        frame = self.frame(n)
        alpha = self.config.alpha.alpha(n)
        g = cond_expect(truncate(f, alpha), frame.lusin, frame.partition)
        image = b_map(g, frame.atoms, frame.spec.inner)
        vector = SparseVector(frame.placement.positions, image.values) if len(image) else SparseVector()
        state = StageState(frame, alpha, image, vector, image.norm(), sparse_norm(vector, self.enum))
        if not state.check_quasi():
            raise DistortionError(
                f"stage {n}: quasi inequality fails ({state.stage_norm} vs {state.image_norm})"
            )
        return state

    def embed(self, f, stages):
        if stages < 1:
            raise DomainError(f"need at least one stage, got {stages}")
        states = tuple(self.stage(f, n) for n in range(1, stages + 1))
        return UltrapowerElement(tuple(s.vector for s in states), self.enum, states)

    def trace(self, f, stages):
        """Per-stage DataFrame with the EMBED_COLUMNS."""
        element = self.embed(f, stages)
        return element.trace(lp_norm(f, self.p))


def build_stage(f, p, n, config=None, enum=None):
    """Stage n for a single input: (StageState, SparseVector)."""
    state = EmbeddingPipeline.for_inputs(p, [f], config, enum).stage(f, n)
    return state, state.vector


def embed(f, p, stages, config=None, enum=None):
    """Stages 1..stages of f as an UltrapowerElement."""
    return EmbeddingPipeline.for_inputs(p, [f], config, enum).embed(f, stages)


def _stage_norm(x, enum):
    if isinstance(x, PlacedMatrix):
        return x.norm(enum)
    return sparse_norm(x, enum, LEFT)


@dataclass(frozen=True, eq=False)
class UltrapowerElement:
    """
    A sequence (x_1, ..., x_N) of finitely supported vectors standing for its
    class in the ultrapower

    Args:
        stages: SparseVector (or PlacedMatrix) per stage
        enum: RationalEnum of the l^(r(·)) norm
        states: Optional StageState records of the pipeline run
    """

    stages: tuple
    enum: object = None
    states: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "enum", self.enum or DEFAULT_ENUM)
        if not self.stages:
            raise DomainError("an ultrapower element needs at least one stage")

    @classmethod
    def zero(cls, enum=None):
        return cls((SparseVector(),), enum)

    def __len__(self):
        return len(self.stages)

    @property
    def norms(self):
        return np.array([_stage_norm(x, self.enum) for x in self.stages])

    def padded(self, length):
        """The same class with the final stage repeated up to `length` stages."""
        if length <= len(self):
            return self
        stages = self.stages + (self.stages[-1],) * (length - len(self))
        return UltrapowerElement(stages, self.enum)

    def cauchy_width(self, window=CAUCHY_WINDOW):
        if len(self) < 2:
            return 0.0
        return up_norm(self, min(window, len(self)))[1]

    def trace(self, target=math.nan):
        rows = [
            [
                s.n,
                s.alpha,
                s.frame.lusin.measure,
                len(s.image),
                s.stage_norm,
                target,
                s.quasi_ratio,
            ]
            for s in self.states
        ]
        return pd.DataFrame(rows, columns=EMBED_COLUMNS)


def _aligned(u, v):
    if u.enum is not v.enum:
        raise PreconditionError("elements live in spaces with different enumerations")
    length = max(len(u), len(v))
    return u.padded(length), v.padded(length)


def up_add(u, v):
    u, v = _aligned(u, v)
    return UltrapowerElement(tuple(x + y for x, y in zip(u.stages, v.stages)), u.enum)


def up_sub(u, v):
    u, v = _aligned(u, v)
    return UltrapowerElement(tuple(x - y for x, y in zip(u.stages, v.stages)), u.enum)


def up_scale(u, factor):
    return UltrapowerElement(tuple(x.scale(factor) for x in u.stages), u.enum)


def up_abs(u):
    """Entrywise absolute value at every stage."""
    return UltrapowerElement(tuple(x.abs() for x in u.stages), u.enum)


def up_norm(u, window=CAUCHY_WINDOW):
    """
    Limit norm of u: (last stage norm, max - min of the norms over the final window)

    Raises:
        PreconditionError: fewer than 2 stages, or a window longer than u
    """
    if len(u) < 2:
        raise PreconditionError(f"the limit norm needs at least 2 stages, got {len(u)}")
    if window < 1 or window > len(u):
        raise PreconditionError(f"window {window} does not fit {len(u)} stages")
    tail = u.norms[-window:]
    return float(tail[-1]), float(tail.max() - tail.min())


def cone_defects(w):
    """||(|w_n| - w_n)|| per stage; zero exactly at stages where w_n >= 0."""
    return np.array([_stage_norm(x.abs() - x, w.enum) for x in w.stages])


def up_leq(u, v, tol=UP_LEQ_TOL, window=CAUCHY_WINDOW):
    """
    u ⪯ v in the ultrapower: v - u lies in the positive cone

    Holds iff ||(|w_n| - w_n)|| for w = v - u stays below tol plus the Cauchy
    widths of u and v over the final window. Stagewise order is sufficient
    but never used as the definition.
    """
    w = up_sub(v, u)
    window = min(window, len(w))
    tolerance = tol + max(u.cauchy_width(window), v.cauchy_width(window))
    return bool(cone_defects(w)[-window:].max() <= tolerance)


@dataclass(frozen=True, eq=False)
class PlacedMatrix:
    """k x k block of a matrix placed at rows n_1 < ... < n_k and columns m_1 < ... < m_k."""

    rows: tuple
    cols: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(len(self.rows), len(self.cols)))

    def norm(self, enum=None):
        enum = enum or DEFAULT_ENUM
        if not self.rows:
            return 0.0
        row_norms = sparse_norm((self.cols, self.values.T), enum)
        return sparse_norm((self.rows, np.atleast_1d(row_norms)), enum)

    def entries(self):
        return [
            [i, j, float(self.values[a, b])]
            for a, i in enumerate(self.rows)
            for b, j in enumerate(self.cols)
            if self.values[a, b] != 0
        ]

    def _check_same_frame(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise PreconditionError("placed matrices sit at different rows or columns")

    def __add__(self, other):
        self._check_same_frame(other)
        return PlacedMatrix(self.rows, self.cols, self.values + other.values)

    def __sub__(self, other):
        self._check_same_frame(other)
        return PlacedMatrix(self.rows, self.cols, self.values - other.values)

    def scale(self, factor):
        return PlacedMatrix(self.rows, self.cols, self.values * float(factor))

    def abs(self):
        return PlacedMatrix(self.rows, self.cols, np.abs(self.values))


@dataclass(frozen=True)
class DistortionRecord:
    k: int
    original_norm: float
    embedded_norm: float
    ratio: float
    bound: float
    rows: tuple
    cols: tuple

    def to_dict(self):
        return {
            "k": self.k,
            "original_norm": self.original_norm,
            "embedded_norm": self.embedded_norm,
            "ratio": self.ratio,
            "bound": self.bound,
            "rows": list(self.rows),
            "cols": list(self.cols),
        }


def _padded_exponents(exponents, needed, available, name):
    """
    The first `needed` exponents; the ones past the matrix are free

    Joins beyond the last row (or column) only ever meet zeros, so missing
    exponents there repeat the last one given.
    """
    exponents = tuple(float(q) for q in exponents)[:needed]
    required = min(needed, max(available - 1, 0))
    if len(exponents) < required:
        raise DomainError(f"{name}: {required} exponents needed, got {len(exponents)}")
    if len(exponents) < needed:
        logger.debug("%s: padding %d exponents past the matrix", name, needed - len(exponents))
        fill = exponents[-1] if exponents else 1.0
        exponents += (fill,) * (needed - len(exponents))
    return exponents


def double_embed(matrix, outer, inner, k, enum=None, config=None):
    """
    Project a matrix to its leading k x k block and place it in l^(r(·))(l^(r(·)))

    Rows and columns are placed independently, each within sqrt((k+1)/k), so

        embedded_norm <= original_norm <= (k+1)/k * embedded_norm

    Args:
        matrix: VarMatrix or nested rows
        outer: Row exponents q(·), entry i joins rows i and i+1
        inner: Column exponents s(·), entry i joins columns i and i+1
        k: Projection size, >= 1; may exceed the matrix, which is padded with zeros
        enum: RationalEnum

    Returns:
        Tuple (PlacedMatrix, DistortionRecord)

    Raises:
        DomainError: fewer exponents than the matrix itself needs
        DistortionError: the two-sided inequality fails
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    enum = enum or DEFAULT_ENUM
    if not isinstance(matrix, VarMatrix):
        matrix = VarMatrix(matrix)
    n_rows, n_cols = matrix.shape
    block = matrix.dense(k, k)
    outer = _padded_exponents(outer, k - 1, n_rows, "outer")
    inner = _padded_exponents(inner, k - 1, n_cols, "inner")

    phase_target = math.sqrt((k + 1) / k)
    rows = placement_for(outer, enum, phase_target, config)
    cols = placement_for(inner, enum, phase_target, config)
    placed = PlacedMatrix(rows.positions, cols.positions, block)

    original = double_norm(block, outer, inner)
    embedded = placed.norm(enum)
    limit = (k + 1) / k
    slack = QUASI_SLACK * max(original, 1.0)
    if embedded > original + slack or original > limit * embedded + slack:
        raise DistortionError(f"k = {k}: original {original} vs embedded {embedded}")
    ratio = 1.0 if embedded == 0 else original / embedded
    record = DistortionRecord(k, original, embedded, ratio, rows.bound * cols.bound, rows.positions, cols.positions)
    logger.debug("double embed k = %d: ratio %.12g, bound %.12g", k, ratio, record.bound)
    return placed, record


def double_embed_trace(matrix, outer, inner, max_k, enum=None, config=None):
    """DistortionRecords for k = 1..max_k as a DataFrame with the DOUBLE_EMBED_COLUMNS."""
    records = [double_embed(matrix, outer, inner, k, enum, config)[1] for k in range(1, max_k + 1)]
    return pd.DataFrame(
        [[r.k, r.original_norm, r.embedded_norm, r.ratio, r.bound] for r in records],
        columns=DOUBLE_EMBED_COLUMNS,
    )


def double_embed_sequence(matrix, outer, inner, stages, enum=None, config=None):
    """
    S: M ↦ (iota_k r_k M)_k for k = 1..stages as an UltrapowerElement

    Stage k is the placed leading k x k block. Entrywise order passes to the
    stages, and the limit norm equals the double norm of M once the blocks
    cover it.
    """
    if stages < 1:
        raise DomainError(f"need at least one stage, got {stages}")
    enum = enum or DEFAULT_ENUM
    placed = tuple(double_embed(matrix, outer, inner, k, enum, config)[0] for k in range(1, stages + 1))
    return UltrapowerElement(placed, enum)
