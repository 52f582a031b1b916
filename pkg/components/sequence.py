from config.settings import EXIT_CODES
from utils.data_loader import load_matrix, load_sequence
from utils.data_processor import write_output
from utils.seqspace import double_norm, ladder_norm


def run_seqnorm(config):
    values, connectors, nesting = load_sequence(config.input)
    norm = ladder_norm(values, connectors, nesting) if values else 0.0
    write_output(repr(norm), config.output)
    return EXIT_CODES["ok"]


def run_doublenorm(config):
    matrix, outer, inner, nesting = load_matrix(config.input)
    write_output(repr(double_norm(matrix, outer, inner, nesting)), config.output)
    return EXIT_CODES["ok"]
