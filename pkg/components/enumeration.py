import pandas as pd

from config.settings import ENUM_COLUMNS, EXIT_CODES
from utils.data_processor import write_table
from utils.exponents import DEFAULT_ENUM


def run_enum(config):
    """index,value CSV of the first `count` rationals of the enumeration."""
    rows = [[i, str(q)] for i, q in enumerate(DEFAULT_ENUM.prefix(config.count), start=1)]
    write_table(pd.DataFrame(rows, columns=ENUM_COLUMNS), config.output)
    return EXIT_CODES["ok"]
