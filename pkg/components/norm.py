import logging

from config.settings import EXIT_CODES
from services.odenorm_service import phi_numeric, phi_step
from utils.data_loader import load_step_function
from utils.data_processor import write_output, write_table
from utils.step_functions import SampledFn

logger = logging.getLogger(__name__)


def run_norm(config):
    """Print ||f|| = phi_f(1); optionally write the phi trace."""
    f = load_step_function(config.f)
    p = load_step_function(config.p)
    if config.grid:
        solution = phi_numeric(SampledFn.from_step(f, config.grid), SampledFn.from_step(p, config.grid))
    else:
        solution = phi_step(f, p)
    write_output(repr(solution.terminal), config.output)
    if config.trace:
        write_table(solution.to_frame(), config.trace)
    return EXIT_CODES["ok"]
