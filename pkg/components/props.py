import logging
from pathlib import Path

import pytest

logger = logging.getLogger(__name__)

TESTS_DIR = Path(__file__).resolve().parent.parent / "tests"


def run_props(config):
    """Run the invariant suite; the exit status is pytest's."""
    logger.info("running %s", TESTS_DIR)
    return int(pytest.main([str(TESTS_DIR), "-q"]))
