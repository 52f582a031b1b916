"""
The ODE-determined norm ||f|| = phi_f(1), where

    phi_f(0) = 0,  phi_f'(t) = |f(t)|^p(t) / p(t) * phi_f(t)^(1 - p(t))  a.e.

On a cell with constant exponent p_k and constant |f| = c_k the equation reads
d(phi^p_k)/dt = c_k^p_k, so

    phi(t_k) = phi(t_(k-1)) ⊞_(p_k) c_k * (t_k - t_(k-1))^(1/p_k)

which is the exact Caratheodory solution on step data and is finite at the
singular start phi = 0.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config.settings import P_MAX, PHI_TRACE_COLUMNS
from utils.errors import DomainError, ShapeError
from utils.seqspace import boxplus
from utils.step_functions import SampledFn, StepFn

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PhiSolution:
    """Grid values of phi_f; phi(0) = 0 and phi is nondecreasing."""

    t: np.ndarray
    phi: np.ndarray

    @property
    def terminal(self):
        return float(self.phi[-1])

    def difference_quotients(self):
        """Per-cell slopes (phi(t_k) - phi(t_(k-1))) / (t_k - t_(k-1))."""
        return np.diff(self.phi) / np.diff(self.t)

    def at(self, t):
        """phi at grid points (exact) or linearly interpolated in between."""
        return np.interp(t, self.t, self.phi)

    def to_frame(self):
        return pd.DataFrame({PHI_TRACE_COLUMNS[0]: self.t, PHI_TRACE_COLUMNS[1]: self.phi})


def check_exponent(p, p_max=P_MAX):
    values = p.values if isinstance(p, StepFn) else np.asarray(p)
    if np.any(values < 1):
        raise DomainError(f"exponent values must be >= 1, got min {float(np.min(values))}")
    if np.any(values > p_max):
        raise DomainError(f"exponent values must be <= P_MAX = {p_max}, got max {float(np.max(values))}")


def _phi_cells(abs_values, lengths, exponents):
    """Fold the closed form over the cells; abs_values may carry trailing axes."""
    phi = [np.zeros(abs_values.shape[1:]) if abs_values.ndim > 1 else 0.0]
    for c, dt, q in zip(abs_values, lengths, exponents):
        phi.append(boxplus(phi[-1], c * dt ** (1.0 / q), q))
    return phi


def phi_step(f, p, p_max=P_MAX):
    """
    Exact solution of the norm-defining equation for step data

    Args:
        f: StepFn
        p: StepFn exponent with values in [1, p_max]
        p_max: Upper bound for the exponent

    Returns:
        PhiSolution on the common refinement of f and p
    """
    check_exponent(p, p_max)
    breakpoints, f_values, p_values = f.align(p)
    phi = _phi_cells(np.abs(f_values), np.diff(breakpoints), p_values)
    return PhiSolution(breakpoints, np.asarray(phi, dtype=float))


def phi_numeric(f, p, h=None, p_max=P_MAX):
    """
    Grid solution for sampled data: each cell carries its midpoint value

    The first cell uses the same closed form, phi(h) = |f| * h^(1/p), so the
    singular start is never stepped explicitly.

    Args:
        f: SampledFn
        p: SampledFn exponent on the same grid
        h: Optional grid step; must match the grid of f and p when given

    Returns:
        PhiSolution on the uniform grid
    """
    if f.n != p.n:
        raise ShapeError(f"f is sampled on {f.n} cells but p on {p.n}")
    if h is not None and abs(h - f.h) > 1e-15:
        raise ShapeError(f"step {h} does not match grid step {f.h}")
    return phi_step(f.to_step(), p.to_step(), p_max)


def lp_norm(f, p, grid=None, p_max=P_MAX):
    """
    ||f|| = phi_f(1)

    Args:
        f: StepFn, SampledFn or vectorised callable on [0, 1]
        p: Same kinds as f
        grid: Number of cells when f or p has to be sampled

    Returns:
        Nonnegative float
    """
    if isinstance(f, StepFn) and isinstance(p, StepFn) and grid is None:
        return phi_step(f, p, p_max).terminal
    if grid is None:
        grid = f.n if isinstance(f, SampledFn) else p.n
    f = f if isinstance(f, SampledFn) else SampledFn.from_callable(f, grid)
    p = p if isinstance(p, SampledFn) else SampledFn.from_callable(p, grid)
    return phi_numeric(f, p, p_max=p_max).terminal


def lp_norm_combinations(basis, p, coefficients, p_max=P_MAX):
    """
    lp_norm(sum_i c_i f_i, p) for every row c of a coefficient matrix

    Args:
        basis: Sequence of StepFn f_1, ..., f_d
        p: StepFn exponent
        coefficients: Array of shape (samples, d)

    Returns:
        Array of shape (samples,)
    """
    check_exponent(p, p_max)
    breakpoints = p.breakpoints
    for f in basis:
        breakpoints = np.union1d(breakpoints, f.breakpoints)
    mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    cells = np.stack([f(mids) for f in basis], axis=1)
    combined = np.abs(cells @ np.asarray(coefficients, dtype=float).T)
    return np.asarray(_phi_cells(combined, np.diff(breakpoints), p(mids))[-1])


def restricted_sup_norm(f, p, sets, p_max=P_MAX):
    """
    sup_n ||1_(C_n) f|| over an increasing family of interval unions

    Args:
        f: StepFn
        p: StepFn exponent
        sets: Increasing list of IntervalUnion C_1 ⊆ C_2 ⊆ ...

    Returns:
        Nonnegative float
    """
    for smaller, larger in zip(sets, sets[1:]):
        if not smaller.issubset(larger):
            logger.warning("restriction sets are not increasing; the supremum is still taken")
    return max((lp_norm(f.restrict(c), p, p_max=p_max) for c in sets), default=0.0)
