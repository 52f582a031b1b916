"""
Nested varying-exponent sequence norms.

Every function here works on numpy arrays. Vector arguments index their
coordinates along the first axis, so a (length, samples) array evaluates one
norm per column in a single fold.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from utils.errors import DomainError, ShapeError

LEFT = "left"
RIGHT = "right"
NESTINGS = (LEFT, RIGHT)


def _check_exponent(p):
    if not (p >= 1):
        raise DomainError(f"exponent must lie in [1, inf], got {p}")


def boxplus(a, b, p):
    """
    Two-term p-sum a ⊞_p b = (a^p + b^p)^(1/p), max(a, b) for p = inf

    Evaluated as m * (1 + (s/m)^p)^(1/p) with m = max(a, b), s = min(a, b);
    naive powering overflows once p is a few hundred.

    Args:
        a: Nonnegative scalar or array
        b: Nonnegative scalar or array (broadcast against a)
        p: Exponent in [1, inf]

    Returns:
        Float for scalar input, array otherwise
    """
    _check_exponent(p)
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise DomainError("boxplus is defined for nonnegative arguments only")

    big = np.maximum(a_arr, b_arr)
    if math.isinf(p):
        out = big
    else:
        small = np.minimum(a_arr, b_arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(big > 0, small / np.where(big > 0, big, 1.0), 0.0)
            out = big * np.power(1.0 + ratio ** p, 1.0 / p)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ExponentLadder:
    """Connector exponents (q_2, ..., q_j) of a finite nested space."""

    connectors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "connectors", tuple(float(q) for q in self.connectors))
        for q in self.connectors:
            _check_exponent(q)

    def __len__(self):
        return len(self.connectors)


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Finitely supported element of the universal sequence space.

    Indices are python ints (they may exceed 64 bits) and strictly increase.
    """

    indices: tuple = ()
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(indices) != len(values):
            raise ShapeError(f"{len(indices)} indices for {len(values)} values")
        if any(i < 1 for i in indices):
            raise ShapeError("indices must be positive")
        if any(j <= i for i, j in zip(indices, indices[1:])):
            raise ShapeError("indices must be strictly increasing")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_entries(cls, entries):
        entries = sorted(entries)
        return cls(tuple(i for i, _ in entries), [v for _, v in entries])

    def entries(self):
        return list(zip(self.indices, self.values.tolist()))

    def _combine(self, other, op):
        index = sorted(set(self.indices) | set(other.indices))
        mine = dict(zip(self.indices, self.values))
        theirs = dict(zip(other.indices, other.values))
        values = [op(mine.get(i, 0.0), theirs.get(i, 0.0)) for i in index]
        return SparseVector(tuple(index), values)

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def scale(self, factor):
        return SparseVector(self.indices, self.values * factor)

    def abs(self):
        return SparseVector(self.indices, np.abs(self.values))

    def to_dense(self, length=None):
        length = length or (self.indices[-1] if self.indices else 0)
        dense = np.zeros(length)
        for i, v in zip(self.indices, self.values):
            dense[i - 1] = v
        return dense


@dataclass(frozen=True, eq=False)
class VarMatrix:
    """Finite matrix for the double space; ragged rows are padded with zeros."""

    rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "rows", tuple(np.asarray(row, dtype=float).reshape(-1) for row in self.rows)
        )

    @property
    def shape(self):
        width = max((len(row) for row in self.rows), default=0)
        return len(self.rows), width

    def dense(self, n_rows=None, n_cols=None):
        rows, cols = self.shape
        out = np.zeros((n_rows or rows, n_cols or cols))
        for i, row in enumerate(self.rows[: out.shape[0]]):
            width = min(len(row), out.shape[1])
            out[i, :width] = row[:width]
        return out


def ladder_norm(x, connectors, nesting=LEFT):
    """
    Norm of R^(j+1) nested with the connectors (q_2, ..., q_j)

    Left nesting folds (((|x_1| ⊞ |x_2|) ⊞ |x_3|) ...), right nesting folds
    |x_1| ⊞ (|x_2| ⊞ (...)) from the tail. Connector k joins coordinates k and k+1.

    Args:
        x: Array whose first axis holds the coordinates
        connectors: Sequence or ExponentLadder with len(x) - 1 exponents
        nesting: "left" or "right"

    Returns:
        Float (or array over the trailing axes of x)
    """
    if isinstance(connectors, ExponentLadder):
        connectors = connectors.connectors
    connectors = tuple(connectors)
    if nesting not in NESTINGS:
        raise ShapeError(f"unknown nesting {nesting!r}")
    x = np.abs(np.asarray(x, dtype=float))
    if x.shape[0] == 0 and not connectors:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[1:])
    if x.shape[0] != len(connectors) + 1:
        raise ShapeError(
            f"{x.shape[0]} coordinates need {x.shape[0] - 1} connectors, got {len(connectors)}"
        )

    if nesting == LEFT:
        acc = x[0]
        for q, coord in zip(connectors, x[1:]):
            acc = boxplus(acc, coord, q)
    else:
        acc = x[-1]
        for q, coord in zip(reversed(connectors), x[-2::-1]):
            acc = boxplus(coord, acc, q)
    if np.ndim(acc) == 0:
        return float(acc)
    return acc


def effective_connectors(indices, enum, nesting=LEFT):
    """Connectors acting between the supported coordinates of a sparse vector.

    Zero coordinates collapse (a ⊞ 0 = a), so under left nesting the entry at
    index j joins with r(j - 1) and under right nesting with r(j).
    """
    if nesting == LEFT:
        return tuple(enum.value(j - 1) for j in indices[1:])
    return tuple(enum.value(j) for j in indices[:-1])


def sparse_norm(x, enum, nesting=LEFT):
    """
    Norm of a finitely supported vector in the space with exponents r(·)

    Equals ladder_norm of the dense prefix up to the largest index.

    Args:
        x: SparseVector, or an (indices, values) pair where values may carry
            extra trailing axes
        enum: RationalEnum supplying r
        nesting: "left" or "right"

    Returns:
        Float (or array over the trailing axes of the values)
    """
    if isinstance(x, SparseVector):
        indices, values = x.indices, x.values
    else:
        indices, values = x
        values = np.asarray(values, dtype=float)
    if not indices:
        return 0.0
    return ladder_norm(values, effective_connectors(indices, enum, nesting), nesting)


def _exponents(values, needed, name):
    values = tuple(float(v) for v in values)
    if len(values) < needed:
        raise ShapeError(f"{name} needs {needed} exponents, got {len(values)}")
    return values[:needed]


def double_norm(matrix, outer, inner, nesting=LEFT):
    """
    Norm of the double space: row norms with inner exponents, then the outer fold

    Args:
        matrix: VarMatrix or nested list of rows
        outer: Exponent list p(·); entry k joins rows k and k+1
        inner: Exponent list s(·); entry k joins columns k and k+1
        nesting: "left" or "right", used in both phases

    Returns:
        Float
    """
    if not isinstance(matrix, VarMatrix):
        matrix = VarMatrix(matrix)
    n_rows, n_cols = matrix.shape
    if n_rows == 0:
        return 0.0
    dense = matrix.dense()
    inner = _exponents(inner, max(n_cols - 1, 0), "inner")
    outer = _exponents(outer, n_rows - 1, "outer")
    row_norms = ladder_norm(dense.T, inner, nesting) if n_cols else np.zeros(n_rows)
    return ladder_norm(np.atleast_1d(row_norms), outer, nesting)
