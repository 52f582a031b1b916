"""
Finite-representability certificates: measured ||T|| ||T^-1|| of stage maps on
finite-dimensional subspaces spanned by step functions.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd

from config.settings import (
    CERTIFY_CAVEAT,
    CERTIFY_MAX_DIMENSION,
    CERTIFY_REFINE_ITERS,
    CERTIFY_SAMPLE_BATCH,
    CERTIFY_SAMPLES,
    CERTIFY_TRACE_COLUMNS,
    DEGENERACY_RATIO,
    DISTORTION_MAX_DIMENSION,
    HOMOGENEITY_RTOL,
    SCHEMA_VERSION,
    THREADS,
    VERIFY_SAMPLE_FACTOR,
    VERIFY_SLACK,
)
from services.embed_service import EmbedConfig, EmbeddingPipeline
from services.odenorm_service import lp_norm_combinations
from utils.errors import BudgetExceededError, DomainError, PreconditionError, RankDeficiencyError, SchemaError
from utils.exponents import DEFAULT_ENUM
from utils.seqspace import sparse_norm
from utils.step_functions import StepFn

logger = logging.getLogger(__name__)


def _check_homogeneous(evaluator, name, d, rng):
    points = rng.standard_normal((4, d))
    factors = rng.uniform(-3.0, 3.0, size=4)
    base = np.asarray(evaluator(points), dtype=float)
    scaled = np.asarray(evaluator(points * factors[:, None]), dtype=float)
    expected = np.abs(factors) * base
    if np.any(np.abs(scaled - expected) > HOMOGENEITY_RTOL * np.maximum(1.0, expected)):
        raise PreconditionError(f"{name} evaluator is not absolutely homogeneous")


def _ratios(domain_norm, codomain_norm, points):
    below = np.asarray(domain_norm(points), dtype=float)
    if np.any(below <= 0):
        raise RankDeficiencyError("domain norm vanishes on a nonzero coefficient vector")
    return np.asarray(codomain_norm(points), dtype=float) / below


def _ascend(domain_norm, codomain_norm, start, value, iters, sign):
    """Coordinate ascent of sign * codomain / domain from `start`."""
    d = len(start)
    moves = np.vstack([np.eye(d), -np.eye(d)])
    point, step = start.copy(), 0.25 * np.max(np.abs(start))
    for _ in range(iters):
        candidates = point + step * moves
        ratios = _ratios(domain_norm, codomain_norm, candidates)
        best = int(np.argmax(sign * ratios))
        if sign * ratios[best] > sign * value:
            point, value = candidates[best], float(ratios[best])
        else:
            step /= 2
    return value


def distortion_estimate(
    domain_norm,
    codomain_norm,
    d,
    samples=CERTIFY_SAMPLES,
    refine_iters=CERTIFY_REFINE_ITERS,
    seed=0,
    threads=THREADS,
):
    """
    Sampled ||T||, ||T^-1|| and their product for T: (R^d, domain) -> (R^d, codomain)

    Gaussian coefficient vectors are drawn up front and normalised by the domain
    norm, evaluated in fixed batches, then the extremal samples are improved by
    coordinate ascent. Both norms are lower bounds of the true operator norms.

    Args:
        domain_norm: Vectorised evaluator, (samples, d) array -> (samples,) norms
        codomain_norm: Same for the codomain
        d: Dimension, at most DISTORTION_MAX_DIMENSION
        samples: Number of sphere samples
        refine_iters: Coordinate ascent steps from each extremal sample
        seed: Seed of numpy's default_rng

    Returns:
        Tuple (normT, normTinv, distortion)

    Raises:
        RankDeficiencyError: the codomain norm is numerically degenerate
    """
    if not 1 <= d <= DISTORTION_MAX_DIMENSION:
        raise DomainError(f"dimension must lie in [1, {DISTORTION_MAX_DIMENSION}], got {d}")
    if samples < 1:
        raise DomainError(f"need at least one sample, got {samples}")
    rng = np.random.default_rng(seed)
    _check_homogeneous(domain_norm, "domain", d, rng)
    _check_homogeneous(codomain_norm, "codomain", d, rng)

    points = rng.standard_normal((samples, d))
    batches = [points[i:i + CERTIFY_SAMPLE_BATCH] for i in range(0, samples, CERTIFY_SAMPLE_BATCH)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        ratios = np.concatenate(list(pool.map(lambda b: _ratios(domain_norm, codomain_norm, b), batches)))

    top = _ascend(domain_norm, codomain_norm, points[np.argmax(ratios)], float(ratios.max()), refine_iters, 1.0)
    bottom = _ascend(domain_norm, codomain_norm, points[np.argmin(ratios)], float(ratios.min()), refine_iters, -1.0)
    if bottom <= DEGENERACY_RATIO * top:
        raise RankDeficiencyError(f"degenerate basis: min ratio {bottom} against max {top}")
    logger.debug("distortion estimate over %d samples: %.12g / %.12g", samples, top, bottom)
    return top, 1.0 / bottom, top / bottom


@dataclass(frozen=True)
class EmbeddingCertificate:
    """Measured distortion of stage n on span(f_1, ..., f_d), reproducible from the seed."""

    basis: tuple
    exponent: dict
    stage: int
    placement: tuple
    rationals: tuple
    normT: float
    normTinv: float
    distortion: float
    epsilon: float
    samples: int
    refine_iters: int
    seed: int
    scheme: str = DEFAULT_ENUM.scheme
    caveat: str = CERTIFY_CAVEAT

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "basis": [dict(f) for f in self.basis],
            "exponent": dict(self.exponent),
            "stage": self.stage,
            "placement": [str(i) for i in self.placement],
            "rationals": list(self.rationals),
            "normT": self.normT,
            "normTinv": self.normTinv,
            "distortion": self.distortion,
            "epsilon": self.epsilon,
            "samples": self.samples,
            "refine_iters": self.refine_iters,
            "seed": self.seed,
            "scheme": self.scheme,
            "caveat": self.caveat,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            basis=tuple(data["basis"]),
            exponent=data["exponent"],
            stage=int(data["stage"]),
            placement=tuple(int(i) for i in data["placement"]),
            rationals=tuple(data["rationals"]),
            normT=float(data["normT"]),
            normTinv=float(data["normTinv"]),
            distortion=float(data["distortion"]),
            epsilon=float(data["epsilon"]),
            samples=int(data["samples"]),
            refine_iters=int(data["refine_iters"]),
            seed=int(data["seed"]),
            scheme=data.get("scheme", DEFAULT_ENUM.scheme),
            caveat=data.get("caveat", CERTIFY_CAVEAT),
        )


def check_basis(basis):
    """Raise RankDeficiencyError unless the step functions are linearly independent."""
    breakpoints = np.unique(np.concatenate([f.breakpoints for f in basis]))
    mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    weights = np.sqrt(np.diff(breakpoints))[:, None]
    cells = np.stack([f(mids) for f in basis], axis=1) * weights
    rank = np.linalg.matrix_rank(cells)
    if rank < len(basis):
        raise RankDeficiencyError(f"basis of {len(basis)} functions spans only {rank} dimensions")


def stage_evaluators(basis, p, pipeline, n):
    """(domain, codomain) evaluators of the stage-n map on span(basis)."""
    states = [pipeline.stage(f, n) for f in basis]
    positions = states[0].vector.indices
    columns = np.stack([s.vector.values for s in states], axis=1)
    enum = pipeline.enum

    def domain_norm(coefficients):
        return lp_norm_combinations(basis, p, coefficients)

    def codomain_norm(coefficients):
        if not positions:
            return np.zeros(len(coefficients))
        return np.atleast_1d(sparse_norm((positions, columns @ np.asarray(coefficients).T), enum))

    return domain_norm, codomain_norm, states[0].frame.placement


def finite_repr_certificate(
    basis,
    p,
    epsilon,
    budget,
    seed=0,
    samples=CERTIFY_SAMPLES,
    refine_iters=CERTIFY_REFINE_ITERS,
    config=None,
    enum=None,
):
    """
    Advance the stage n until span(basis) embeds with distortion <= 1 + epsilon

    Args:
        basis: Linearly independent StepFn f_1, ..., f_d with d <= CERTIFY_MAX_DIMENSION
        p: StepFn exponent
        epsilon: Distortion target above 1
        budget: Last stage to try
        seed: Sampling seed, the same at every stage

    Returns:
        EmbeddingCertificate

    Raises:
        BudgetExceededError: no stage up to `budget` reached the target; the
            search trace is attached as a DataFrame
    """
    basis = tuple(basis)
    if not 1 <= len(basis) <= CERTIFY_MAX_DIMENSION:
        raise DomainError(f"basis size must lie in [1, {CERTIFY_MAX_DIMENSION}], got {len(basis)}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")
    check_basis(basis)
    pipeline = EmbeddingPipeline.for_inputs(p, basis, config or EmbedConfig(), enum)

    rows = []
    for n in range(1, budget + 1):
        domain_norm, codomain_norm, placement = stage_evaluators(basis, p, pipeline, n)
        try:
            normT, normTinv, distortion = distortion_estimate(
                domain_norm, codomain_norm, len(basis), samples, refine_iters, seed
            )
        except RankDeficiencyError as e:
            logger.info("stage %d: %s", n, e)
            normT, normTinv, distortion = np.nan, np.inf, np.inf
        rows.append([n, normT, normTinv, distortion])
        logger.info("stage %d: distortion %.9g", n, distortion)
        if distortion <= 1 + epsilon:
            return EmbeddingCertificate(
                basis=tuple(f.to_dict() for f in basis),
                exponent=p.to_dict(),
                stage=n,
                placement=placement.positions,
                rationals=tuple(str(r) for r in placement.rationals),
                normT=normT,
                normTinv=normTinv,
                distortion=distortion,
                epsilon=epsilon,
                samples=samples,
                refine_iters=refine_iters,
                seed=seed,
                scheme=pipeline.enum.scheme,
            )
    raise BudgetExceededError(
        f"distortion above 1 + {epsilon} through stage {budget}",
        trace=pd.DataFrame(rows, columns=CERTIFY_TRACE_COLUMNS),
    )


def check_placement_record(certificate, enum=None):
    """
    Raise SchemaError unless every recorded rational sits at the enumeration
    index just before the position it was recorded for.
    """
    enum = enum or DEFAULT_ENUM
    positions = certificate.placement[1:]
    if len(positions) != len(certificate.rationals):
        raise SchemaError("rationals", f"{len(certificate.rationals)} rationals for {len(positions)} placed connectors")
    for k, (position, text) in enumerate(zip(positions, certificate.rationals)):
        try:
            index = enum.index_of(Fraction(text))
        except (ValueError, ZeroDivisionError) as e:
            raise SchemaError(f"rationals[{k}]", f"not a rational >= 1: {text!r}") from e
        if index != position - 1:
            raise SchemaError(f"rationals[{k}]", f"{text} has index {index}, placed at {position}")


@dataclass(frozen=True)
class Verification:
    distortion: float
    limit: float
    samples: int

    @property
    def passed(self):
        return self.distortion <= self.limit


def verify_certificate(certificate, sample_factor=VERIFY_SAMPLE_FACTOR, config=None, enum=None):
    """Re-measure a certificate with sample_factor times the samples, same seed and stage."""
    basis = [StepFn.from_dict(f) for f in certificate.basis]
    p = StepFn.from_dict(certificate.exponent)
    pipeline = EmbeddingPipeline.for_inputs(p, basis, config or EmbedConfig(), enum)
    check_placement_record(certificate, pipeline.enum)
    domain_norm, codomain_norm, placement = stage_evaluators(basis, p, pipeline, certificate.stage)
    if tuple(placement.positions) != tuple(certificate.placement):
        logger.warning("placement differs from the certificate; was it made with another configuration?")
    samples = certificate.samples * sample_factor
    _, _, distortion = distortion_estimate(
        domain_norm, codomain_norm, len(basis), samples, certificate.refine_iters, certificate.seed
    )
    return Verification(distortion, 1 + certificate.epsilon + VERIFY_SLACK, samples)
