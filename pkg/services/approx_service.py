"""
Approximation operators used by the embedding pipeline: Lusin sets C_n,
truncations T_n, dyadic partitions F_k and conditional expectations E(f | C, F).
"""
import logging
from dataclasses import dataclass

import numpy as np

from config.settings import MAX_GENERATION
from utils.errors import DomainError
from utils.step_functions import IntervalUnion, StepFn

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FinitePartition:
    """Atoms [a_i, a_(i+1)) of [0, 1] (the last one closed) and their generation."""

    cuts: np.ndarray
    generation: int = 0

    def __post_init__(self):
        cuts = np.union1d(np.asarray(self.cuts, dtype=float), [0.0, 1.0])
        cuts = cuts[(cuts >= 0.0) & (cuts <= 1.0)]
        cuts.setflags(write=False)
        object.__setattr__(self, "cuts", cuts)

    @property
    def atoms(self):
        return list(zip(self.cuts[:-1].tolist(), self.cuts[1:].tolist()))

    def __len__(self):
        return len(self.cuts) - 1

    @property
    def max_diameter(self):
        return float(np.max(np.diff(self.cuts)))

    def atom_of(self, t):
        """Index of the atom holding each point of t."""
        return np.clip(np.searchsorted(self.cuts, t, side="right") - 1, 0, len(self) - 1)

    def refines(self, other):
        return bool(np.all(np.isin(other.cuts, self.cuts)))


@dataclass(frozen=True)
class TruncationSchedule:
    """
    Levels alpha_n of the truncations T_n

    alpha_n = scale * n unless explicit levels are given; past the end of the
    explicit list the schedule continues with max(last level, scale * n).
    """

    scale: float = 1.0
    levels: tuple = ()

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale: must be > 0, got {self.scale}")
        levels = tuple(float(a) for a in self.levels)
        if any(a <= 0 for a in levels):
            raise DomainError("levels: truncation levels must be positive")
        if any(b < a for a, b in zip(levels, levels[1:])):
            raise DomainError("levels: truncation levels must be nondecreasing")
        object.__setattr__(self, "levels", levels)

    def alpha(self, n):
        if n < 1:
            raise DomainError(f"stage must be >= 1, got {n}")
        if n <= len(self.levels):
            return self.levels[n - 1]
        return max(self.levels[-1] if self.levels else 0.0, self.scale * n)


def lusin_sets(p, n):
    """
    C_n: [0, 1] with an open neighbourhood of every jump of p removed

    The radius is 2^(-n-2) / max(J, 1) for J jumps, so m(C_n) >= 1 - 2^(-n-1),
    p is constant on every component and C_n grows with n.

    Args:
        p: StepFn exponent
        n: Stage, >= 1

    Returns:
        IntervalUnion
    """
    if n < 1:
        raise DomainError(f"Lusin index must be >= 1, got {n}")
    jumps = p.jumps
    radius = 2.0 ** (-n - 2) / max(len(jumps), 1)
    removed = IntervalUnion(tuple((t - radius, t + radius) for t in jumps))
    sets = removed.complement()
    logger.debug("C_%d: %d components, measure %.12g", n, len(sets), sets.measure)
    return sets


def truncate(f, alpha):
    """T(f) = min(alpha, max(-alpha, f)) pointwise."""
    if not alpha >= 0:
        raise DomainError(f"truncation level must be >= 0, got {alpha}")
    return f.map(lambda v: np.clip(v, -alpha, alpha))


def refine_partition(seeds, k, points=()):
    """
    F_k generated by the seed endpoints and the dyadic cuts j / 2^k

    Args:
        seeds: List of IntervalUnion whose endpoints become cuts
        k: Generation; the atoms have diameter at most 2^(-k)
        points: Extra cut points

    Returns:
        FinitePartition
    """
    if k < 0:
        raise DomainError(f"generation must be >= 0, got {k}")
    cuts = [np.linspace(0.0, 1.0, 2 ** k + 1), np.asarray(points, dtype=float).reshape(-1)]
    cuts.extend(seed.endpoints for seed in seeds)
    return FinitePartition(np.concatenate(cuts), generation=k)


def stage_partition(lusin, n, max_generation=MAX_GENERATION, points=()):
    """
    F_(k_n) for stage n with k_n = min(n, max_generation)

    The atoms are cut at the endpoints of C_n and at `points`, so inputs whose
    breakpoints are among the points are constant on every atom.
    """
    return refine_partition([lusin], min(n, max_generation), points)


def cond_expect(f, support, partition):
    """
    E(f | C, F): the average of f over each atom intersected with C

    Atoms meeting C in a null set and everything off C map to 0.

    Args:
        f: StepFn
        support: IntervalUnion C
        partition: FinitePartition F

    Returns:
        StepFn constant on every atom ∩ C
    """
    breakpoints = np.union1d(np.union1d(f.breakpoints, partition.cuts), support.endpoints)
    mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    atom = partition.atom_of(mids)
    inside = support.contains(mids)
    weights = np.where(inside, np.diff(breakpoints), 0.0)

    sums = np.bincount(atom, weights=f(mids) * weights, minlength=len(partition))
    measures = np.bincount(atom, weights=weights, minlength=len(partition))
    averages = np.divide(sums, measures, out=np.zeros_like(sums), where=measures > 0)
    return StepFn(breakpoints, np.where(inside, averages[atom], 0.0))
