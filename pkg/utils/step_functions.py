"""
Piecewise-constant functions on [0, 1] and finite unions of closed intervals.

Cells are half-open [t_(k-1), t_k) except the last one; values at single
points never matter (a.e. semantics).
"""
from dataclasses import dataclass

import numpy as np

from utils.errors import DomainError, ShapeError


def _frozen(array):
    array = np.array(array, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, disjoint closed intervals inside [0, 1]."""

    intervals: tuple = ()

    def __post_init__(self):
        pieces = []
        for a, b in sorted((max(float(a), 0.0), min(float(b), 1.0)) for a, b in self.intervals):
            if b <= a:
                continue
            if pieces and a <= pieces[-1][1]:
                pieces[-1] = (pieces[-1][0], max(pieces[-1][1], b))
            else:
                pieces.append((a, b))
        object.__setattr__(self, "intervals", tuple(pieces))

    @classmethod
    def full(cls):
        return cls(((0.0, 1.0),))

    @classmethod
    def empty(cls):
        return cls(())

    @property
    def measure(self):
        return float(sum(b - a for a, b in self.intervals))

    @property
    def endpoints(self):
        return np.array([t for iv in self.intervals for t in iv], dtype=float)

    @property
    def lower(self):
        return self.intervals[0][0] if self.intervals else None

    @property
    def upper(self):
        return self.intervals[-1][1] if self.intervals else None

    def __bool__(self):
        return bool(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (t >= a) & (t <= b)
        return inside

    def intersect(self, other):
        pieces = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    pieces.append((lo, hi))
        return IntervalUnion(tuple(pieces))

    def complement(self):
        """Closure of [0, 1] minus the union."""
        cuts = [0.0, *self.endpoints.tolist(), 1.0]
        return IntervalUnion(tuple(zip(cuts[::2], cuts[1::2])))

    def clip(self, a, b):
        return self.intersect(IntervalUnion(((a, b),)))

    def issubset(self, other):
        return abs(self.intersect(other).measure - self.measure) <= 1e-15


@dataclass(frozen=True, eq=False)
class StepFn:
    """
    Piecewise-constant real function on [0, 1]

    Args:
        breakpoints: 0 = t_0 < t_1 < ... < t_K = 1
        values: c_1, ..., c_K, one per cell [t_(k-1), t_k)
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breakpoints = _frozen(self.breakpoints)
        values = _frozen(self.values)
        if len(breakpoints) < 2 or breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
            raise DomainError("breakpoints must start at exactly 0 and end at exactly 1")
        if np.any(np.diff(breakpoints) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if len(values) != len(breakpoints) - 1:
            raise ShapeError(f"{len(breakpoints)} breakpoints need {len(breakpoints) - 1} values")
        if not np.all(np.isfinite(values)):
            raise DomainError("step function values must be finite")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value):
        return cls([0.0, 1.0], [value])

    @classmethod
    def from_dict(cls, data):
        return cls(data["breakpoints"], data["values"])

    def to_dict(self):
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @property
    def lengths(self):
        return np.diff(self.breakpoints)

    @property
    def midpoints(self):
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    @property
    def jumps(self):
        """Interior breakpoints where the value actually changes."""
        change = self.values[1:] != self.values[:-1]
        return self.breakpoints[1:-1][change]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        cell = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0, len(self.values) - 1)
        return self.values[cell]

    def refine(self, points):
        """Same function on the common refinement with `points`."""
        points = np.asarray(points, dtype=float).reshape(-1)
        points = points[(points > 0.0) & (points < 1.0)]
        breakpoints = np.union1d(self.breakpoints, points)
        mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
        return StepFn(breakpoints, self(mids))

    def align(self, other):
        """Both functions on their common refinement: (breakpoints, mine, theirs)."""
        breakpoints = np.union1d(self.breakpoints, other.breakpoints)
        mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
        return breakpoints, self(mids), other(mids)

    def simplify(self):
        """Merge neighbouring cells carrying the same value."""
        keep = np.concatenate(([True], self.values[1:] != self.values[:-1]))
        breakpoints = np.append(self.breakpoints[:-1][keep], 1.0)
        return StepFn(breakpoints, self.values[keep])

    def map(self, func):
        return StepFn(self.breakpoints, func(self.values))

    def __add__(self, other):
        if not isinstance(other, StepFn):
            return self.map(lambda v: v + other)
        breakpoints, mine, theirs = self.align(other)
        return StepFn(breakpoints, mine + theirs)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self.map(np.negative)

    def __mul__(self, factor):
        return self.map(lambda v: v * float(factor))

    __rmul__ = __mul__

    def __abs__(self):
        return self.map(np.abs)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def restrict(self, support):
        """The product 1_C f for an IntervalUnion C."""
        refined = self.refine(support.endpoints)
        inside = support.contains(refined.midpoints)
        return StepFn(refined.breakpoints, np.where(inside, refined.values, 0.0))

    def integral(self, support=None, power=None):
        """Integral of f (or of |f|^power) over [0, 1] or over an IntervalUnion."""
        refined = self if support is None else self.refine(support.endpoints)
        weights = refined.lengths
        if support is not None:
            weights = np.where(support.contains(refined.midpoints), weights, 0.0)
        integrand = refined.values if power is None else np.abs(refined.values) ** power
        return float(np.dot(integrand, weights))

    def essential_range(self, support):
        """(inf, sup) of f over the positive-measure part of an IntervalUnion."""
        refined = self.refine(support.endpoints)
        inside = support.contains(refined.midpoints)
        if not np.any(inside):
            raise DomainError("support has measure zero")
        values = refined.values[inside]
        return float(values.min()), float(values.max())


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Function sampled at the midpoints of a uniform grid with h = 1/n."""

    n: int
    samples: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"grid size must be a positive integer, got {self.n}")
        samples = _frozen(self.samples)
        if len(samples) != self.n:
            raise ShapeError(f"grid of {self.n} cells needs {self.n} samples, got {len(samples)}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_callable(cls, func, n):
        mids = (np.arange(n) + 0.5) / n
        return cls(n, np.broadcast_to(np.asarray(func(mids), dtype=float), (n,)))

    @classmethod
    def from_step(cls, step, n):
        return cls.from_callable(step, n)

    @property
    def h(self):
        return 1.0 / self.n

    def to_step(self):
        return StepFn(np.linspace(0.0, 1.0, self.n + 1), self.samples)
