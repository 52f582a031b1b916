import argparse
import logging
import sys
from dataclasses import dataclass, fields

# Import components
from components.certify import run_certify
from components.embedding import run_doubleembed, run_embed
from components.enumeration import run_enum
from components.norm import run_norm
from components.props import run_props
from components.seminorm import run_seminorm
from components.sequence import run_doublenorm, run_seqnorm

# Import configuration
from config.settings import (
    CAUCHY_WINDOW,
    CERTIFY_REFINE_ITERS,
    CERTIFY_SAMPLES,
    DEFAULT_CERTIFY_BUDGET,
    DEFAULT_EMBED_STAGES,
    DEFAULT_ENUM_COUNT,
    DEFAULT_SEMINORM_STAGES,
    EXIT_CODES,
    LOG_FORMAT,
    LOG_LEVEL,
    MAX_DOUBLE_EMBED_K,
    SEMINORM_REL_TOL,
)
from utils.errors import BudgetExceededError, DistortionError, SchemaError, VarLpError

logger = logging.getLogger("varlp")

COMMANDS = {
    "norm": run_norm,
    "seqnorm": run_seqnorm,
    "doublenorm": run_doublenorm,
    "seminorm": run_seminorm,
    "embed": run_embed,
    "doubleembed": run_doubleembed,
    "certify": run_certify,
    "enum": run_enum,
    "props": run_props,
}

REQUIRED_INPUTS = {
    "norm": ("f", "p"),
    "seqnorm": ("input",),
    "doublenorm": ("input",),
    "seminorm": ("f", "p"),
    "embed": ("f", "p"),
    "doubleembed": ("matrix",),
    "certify": ("basis", "p", "seed"),
    "enum": (),
    "props": (),
}


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: subcommand, input paths, numeric overrides and outputs."""

    command: str
    f: str = None
    p: str = None
    input: str = None
    matrix: str = None
    basis: str = None
    verify: str = None
    grid: int = None
    stages: int = None
    k: int = None
    count: int = DEFAULT_ENUM_COUNT
    eps: float = 0.05
    seed: int = None
    window: int = CAUCHY_WINDOW
    tol: float = SEMINORM_REL_TOL
    budget: int = DEFAULT_CERTIFY_BUDGET
    samples: int = CERTIFY_SAMPLES
    refine_iters: int = CERTIFY_REFINE_ITERS
    output: str = None
    trace: str = None
    log_level: str = LOG_LEVEL

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SchemaError("command", f"unknown subcommand {self.command!r}")
        required = REQUIRED_INPUTS[self.command]
        if self.command == "certify" and self.verify:
            required = ()
        for name in required:
            if getattr(self, name) is None:
                raise SchemaError(name, f"required by {self.command}")

        if self.stages is None:
            default = DEFAULT_EMBED_STAGES if self.command == "embed" else DEFAULT_SEMINORM_STAGES
            object.__setattr__(self, "stages", default)
        if self.command == "doubleembed" and self.k is None:
            object.__setattr__(self, "k", 1)

        self._check_range("grid", 1)
        self._check_range("stages", 1)
        self._check_range("k", 1, MAX_DOUBLE_EMBED_K)
        self._check_range("count", 1)
        self._check_range("window", 1)
        self._check_range("budget", 1)
        self._check_range("samples", 1)
        self._check_range("refine_iters", 0)
        self._check_range("seed", 0)
        if not self.eps > 0:
            raise SchemaError("eps", f"must be > 0, got {self.eps}")
        if not self.tol > 0:
            raise SchemaError("tol", f"must be > 0, got {self.tol}")
        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise SchemaError("log_level", f"unknown level {self.log_level!r}")

    def _check_range(self, name, low, high=None):
        value = getattr(self, name)
        if value is None:
            return
        if value < low or (high is not None and value > high):
            bounds = f">= {low}" if high is None else f"in [{low}, {high}]"
            raise SchemaError(name, f"must be {bounds}, got {value}")

    @classmethod
    def from_args(cls, args):
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in vars(args).items() if k in names and v is not None}
        return cls(**values)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="varlp",
        description="Varying-exponent L^p(·) and l^p(·) norms and constructive embeddings",
    )
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    norm = sub.add_parser("norm", help="ODE-determined norm of a step function")
    norm.add_argument("--f", required=True)
    norm.add_argument("--p", required=True)
    norm.add_argument("--grid", type=int, help="sample f and p on N midpoints")
    norm.add_argument("--trace", help="write the phi trace (t, phi) as CSV")

    seqnorm = sub.add_parser("seqnorm", help="nested l^p(·) norm of a finite vector")
    seqnorm.add_argument("--input", required=True)

    doublenorm = sub.add_parser("doublenorm", help="norm of a finite matrix in the double space")
    doublenorm.add_argument("--input", required=True)

    seminorm = sub.add_parser("seminorm", help="convergence of bracketing simple seminorms")
    seminorm.add_argument("--f", required=True)
    seminorm.add_argument("--p", required=True)
    seminorm.add_argument("--stages", type=int)
    seminorm.add_argument("--tol", type=float, help="relative target for the final stage")
    seminorm.add_argument("--output")

    embed = sub.add_parser("embed", help="stage vectors of the embedding pipeline")
    embed.add_argument("--f", required=True)
    embed.add_argument("--p", required=True)
    embed.add_argument("--stages", type=int)
    embed.add_argument("--window", type=int)
    embed.add_argument("--trace", help="write the per-stage trace as CSV")
    embed.add_argument("--output")

    doubleembed = sub.add_parser("doubleembed", help="embed a matrix of the double space")
    doubleembed.add_argument("--matrix", required=True)
    doubleembed.add_argument("--k", type=int)
    doubleembed.add_argument("--window", type=int, help="Cauchy window of the block sequence")
    doubleembed.add_argument("--trace", help="write records for k = 1..K as CSV")
    doubleembed.add_argument("--output")

    certify = sub.add_parser("certify", help="finite-representability certificate")
    certify.add_argument("--basis")
    certify.add_argument("--p")
    certify.add_argument("--eps", type=float)
    certify.add_argument("--seed", type=int)
    certify.add_argument("--budget", type=int)
    certify.add_argument("--samples", type=int)
    certify.add_argument("--verify", help="re-check a certificate JSON")
    certify.add_argument("--trace", help="write the search trace as CSV when the budget runs out")
    certify.add_argument("--output")

    enum = sub.add_parser("enum", help="list the rational enumeration")
    enum.add_argument("--count", type=int)
    enum.add_argument("--output")

    sub.add_parser("props", help="run the invariant test suite")
    return parser


def run(config):
    """Execute one subcommand and map failures to exit codes."""
    try:
        return COMMANDS[config.command](config)
    except BudgetExceededError as e:
        logger.error("budget exceeded: %s", e)
        return EXIT_CODES["budget"]
    except DistortionError as e:
        logger.error("distortion check failed: %s", e)
        return EXIT_CODES["failed"]
    except VarLpError as e:
        logger.error("%s", e)
        return EXIT_CODES["validation"]
    except OSError as e:
        logger.error("%s: %s", e.filename, e.strerror)
        return EXIT_CODES["validation"]


def main(argv=None):
    """Main application entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    try:
        config = RunConfig.from_args(args)
    except SchemaError as e:
        logger.error("%s", e)
        return EXIT_CODES["validation"]
    logging.getLogger().setLevel(config.log_level.upper())
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
