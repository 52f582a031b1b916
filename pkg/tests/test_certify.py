import math
from fractions import Fraction

import numpy as np
import pytest

from config.settings import CERTIFY_TRACE_COLUMNS
from services.certify_service import (
    EmbeddingCertificate,
    check_basis,
    check_placement_record,
    distortion_estimate,
    finite_repr_certificate,
    verify_certificate,
)
from services.embed_service import EmbedConfig
from utils.errors import BudgetExceededError, DomainError, PreconditionError, RankDeficiencyError, SchemaError
from utils.step_functions import StepFn


def _euclidean(c):
    return np.linalg.norm(c, axis=1)


def _halves():
    return [StepFn([0.0, 0.5, 1.0], [1.0, 0.0]), StepFn([0.0, 0.5, 1.0], [0.0, 1.0])]


def test_identity_has_no_distortion():
    normT, normTinv, distortion = distortion_estimate(_euclidean, _euclidean, 3, samples=500)
    assert (normT, normTinv, distortion) == (1.0, 1.0, 1.0)


def test_scaled_codomain():
    normT, normTinv, distortion = distortion_estimate(_euclidean, lambda c: 2 * _euclidean(c), 2, samples=500)
    assert normT == pytest.approx(2.0)
    assert normTinv == pytest.approx(0.5)
    assert distortion == pytest.approx(1.0)


def test_l2_into_l1_distortion():
    l1 = lambda c: np.abs(c).sum(axis=1)
    normT, normTinv, distortion = distortion_estimate(_euclidean, l1, 2, samples=10_000, seed=3)
    assert normT == pytest.approx(math.sqrt(2), abs=1e-3)
    assert normTinv == pytest.approx(1.0, abs=1e-3)
    assert distortion == pytest.approx(math.sqrt(2), abs=2e-3)


def test_estimate_is_reproducible():
    l1 = lambda c: np.abs(c).sum(axis=1)
    first = distortion_estimate(_euclidean, l1, 3, samples=2000, seed=11)
    assert distortion_estimate(_euclidean, l1, 3, samples=2000, seed=11) == first


def test_degenerate_and_invalid_evaluators():
    with pytest.raises(RankDeficiencyError):
        distortion_estimate(_euclidean, lambda c: np.zeros(len(c)), 2, samples=100)
    with pytest.raises(PreconditionError):
        distortion_estimate(_euclidean, lambda c: _euclidean(c) ** 2, 2, samples=100)
    with pytest.raises(DomainError):
        distortion_estimate(_euclidean, _euclidean, 7, samples=100)
    with pytest.raises(DomainError):
        distortion_estimate(_euclidean, _euclidean, 2, samples=0)


def test_single_vector_certifies_at_the_first_stage():
    certificate = finite_repr_certificate([StepFn.constant(1.0)], StepFn.constant(2.0), 0.1, 5, samples=1000)
    assert certificate.stage == 1
    assert certificate.distortion == pytest.approx(1.0, abs=1e-9)


def test_two_halves_certify_and_reverify(two_step_exponent):
    certificate = finite_repr_certificate(_halves(), two_step_exponent, 0.05, 10, seed=7, samples=4000)
    assert certificate.distortion <= 1.05
    assert certificate.normT * certificate.normTinv == pytest.approx(certificate.distortion)
    assert len(certificate.placement) == len(certificate.rationals) + 1

    restored = EmbeddingCertificate.from_dict(certificate.to_dict())
    assert restored == certificate

    result = verify_certificate(restored)
    assert result.samples == 40_000
    assert result.passed


def test_unreachable_epsilon_exhausts_the_budget(two_step_exponent):
    with pytest.raises(BudgetExceededError) as excinfo:
        finite_repr_certificate(_halves(), two_step_exponent, 1e-9, 2, samples=500)
    trace = excinfo.value.trace
    assert list(trace.columns) == CERTIFY_TRACE_COLUMNS
    assert trace["stage"].tolist() == [1, 2]
    assert np.all(trace["distortion"] >= 1.0)


def test_basis_checks(two_step_exponent):
    f = StepFn([0.0, 0.25, 1.0], [1.0, -2.0])
    with pytest.raises(RankDeficiencyError):
        check_basis([f, 2.0 * f])
    with pytest.raises(RankDeficiencyError):
        finite_repr_certificate([f, -f], two_step_exponent, 0.1, 3)
    with pytest.raises(DomainError):
        finite_repr_certificate([f] * 5, two_step_exponent, 0.1, 3)
    with pytest.raises(DomainError):
        finite_repr_certificate([f], two_step_exponent, 0.0, 3)
    check_basis(_halves())


def test_distortion_never_grows_along_the_search():
    config = EmbedConfig(max_generation=1)
    with pytest.raises(BudgetExceededError) as excinfo:
        finite_repr_certificate(_halves(), StepFn.constant(math.sqrt(2)), 1e-9, 6, samples=2000, config=config)
    distortion = excinfo.value.trace["distortion"].to_numpy()
    assert len(distortion) == 6
    assert np.all(distortion >= 1.0)
    assert np.all(np.diff(distortion) <= 1e-9)


def test_basis_off_the_dyadic_grid_certifies(two_step_exponent):
    cut = 1 / math.pi
    basis = [StepFn([0.0, cut, 1.0], [1.0, 0.0]), StepFn([0.0, cut, 1.0], [0.0, 1.0])]
    certificate = finite_repr_certificate(basis, two_step_exponent, 0.05, 10, seed=5, samples=4000)
    assert certificate.distortion <= 1.05
    assert verify_certificate(EmbeddingCertificate.from_dict(certificate.to_dict())).passed


def test_tampered_rationals_are_rejected(two_step_exponent):
    certificate = finite_repr_certificate(_halves(), two_step_exponent, 0.05, 10, seed=7, samples=1000)
    check_placement_record(certificate)

    data = certificate.to_dict()
    data["rationals"][0] = str(Fraction(data["rationals"][0]) + 1)
    with pytest.raises(SchemaError, match=r"rationals\[0\]"):
        verify_certificate(EmbeddingCertificate.from_dict(data))

    data = certificate.to_dict()
    data["rationals"].append("5/2")
    with pytest.raises(SchemaError, match="rationals"):
        check_placement_record(EmbeddingCertificate.from_dict(data))

    data = certificate.to_dict()
    data["rationals"][0] = "1/2"
    with pytest.raises(SchemaError, match="not a rational"):
        check_placement_record(EmbeddingCertificate.from_dict(data))
