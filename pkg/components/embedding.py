import logging

from config.settings import EXIT_CODES
from services.embed_service import EmbeddingPipeline, double_embed, double_embed_sequence, double_embed_trace, up_norm
from services.odenorm_service import lp_norm
from utils.data_loader import load_matrix, load_step_function
from utils.data_processor import write_json, write_table
from utils.errors import SchemaError
from utils.seqspace import LEFT

logger = logging.getLogger(__name__)


def run_embed(config):
    """Embed f stage by stage; print the limit norm, optionally write the per-stage trace."""
    f = load_step_function(config.f)
    p = load_step_function(config.p)
    element = EmbeddingPipeline.for_inputs(p, [f]).embed(f, config.stages)
    target = lp_norm(f, p)

    summary = {"stages": config.stages, "lp_norm": target, "norm": float(element.norms[-1]), "cauchy_width": None}
    if config.stages >= 2:
        summary["norm"], summary["cauchy_width"] = up_norm(element, min(config.window, config.stages))
    else:
        logger.warning("a single stage gives no Cauchy width")
    write_json(summary, config.output)
    if config.trace:
        write_table(element.trace(target), config.trace)
    return EXIT_CODES["ok"]


def run_doubleembed(config):
    """Place the leading k x k block of a matrix; print its distortion record."""
    matrix, outer, inner, nesting = load_matrix(config.matrix)
    if nesting != LEFT:
        raise SchemaError("nesting", "the double embedding uses left nesting")
    placed, record = double_embed(matrix, outer, inner, config.k)
    result = record.to_dict()
    result["rows"] = [str(i) for i in record.rows]
    result["cols"] = [str(j) for j in record.cols]
    result["entries"] = [[str(i), str(j), v] for i, j, v in placed.entries()]
    if config.k >= 2:
        sequence = double_embed_sequence(matrix, outer, inner, config.k)
        result["sequence_norm"], result["cauchy_width"] = up_norm(sequence, min(config.window, config.k))
    write_json(result, config.output)
    if config.trace:
        write_table(double_embed_trace(matrix, outer, inner, config.k), config.trace)
    return EXIT_CODES["ok"]
