import logging

from config.settings import EXIT_CODES
from services.seminorm_service import build_schedule, seminorm_converge
from utils.data_loader import load_step_function
from utils.data_processor import write_table

logger = logging.getLogger(__name__)


def run_seminorm(config):
    """Seminorm values along the default schedule as CSV."""
    f = load_step_function(config.f)
    p = load_step_function(config.p)
    table = seminorm_converge(f, p, build_schedule(p, config.stages))
    write_table(table, config.output)

    final = table.iloc[-1]
    scale = max(abs(final["lp_norm"]), 1e-300)
    if abs(final["gap"]) / scale > config.tol:
        logger.warning(
            "relative gap %.3g after %d stages exceeds %.3g", abs(final["gap"]) / scale, config.stages, config.tol
        )
    return EXIT_CODES["ok"]
