import logging

from config.settings import EXIT_CODES
from services.certify_service import EmbeddingCertificate, finite_repr_certificate, verify_certificate
from utils.data_loader import load_basis, load_certificate_data, load_step_function
from utils.data_processor import write_json, write_table
from utils.errors import BudgetExceededError

logger = logging.getLogger(__name__)


def run_certify(config):
    """Search for a certificate, or re-check one with --verify."""
    if config.verify:
        return _run_verify(config)

    basis = load_basis(config.basis)
    p = load_step_function(config.p)
    try:
        certificate = finite_repr_certificate(
            basis, p, config.eps, config.budget, config.seed, config.samples, config.refine_iters
        )
    except BudgetExceededError as e:
        if config.trace and e.trace is not None:
            write_table(e.trace, config.trace)
        logger.error("no certificate: %s", e)
        return EXIT_CODES["budget"]
    write_json(certificate.to_dict(), config.output)
    return EXIT_CODES["ok"]


def _run_verify(config):
    certificate = EmbeddingCertificate.from_dict(load_certificate_data(config.verify))
    result = verify_certificate(certificate)
    write_json(
        {"distortion": result.distortion, "limit": result.limit, "samples": result.samples, "passed": result.passed},
        config.output,
    )
    if not result.passed:
        logger.error("certificate does not re-validate: %.9g > %.9g", result.distortion, result.limit)
        return EXIT_CODES["failed"]
    return EXIT_CODES["ok"]
