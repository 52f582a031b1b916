import os

# Schema version of every JSON input and output
SCHEMA_VERSION = 1

# Exponent bound: the theory needs ess sup p < infinity
P_MAX = 64.0

# Rational enumeration
ENUM_MEMO_LIMIT = 4096
ENUM_MAX_DEPTH = 200_000

# Seminorm convergence target (relative), overridable from the CLI
SEMINORM_REL_TOL = 1e-3

# Seminorm schedules: generation cap per stage, and cap for the spread-driven cut refinement
SCHEDULE_MAX_GENERATION = 12
SPREAD_MAX_GENERATION = 16

# Partitions: dyadic resolution of F_k is 2^-k, capped at MAX_GENERATION; input
# breakpoints are added on top so every input is constant on the atoms
MAX_GENERATION = 4

# Placement search for iota_n
DELTA_START_FACTOR = 2.0
DELTA_HALVINGS = 40
PLACEMENT_START_INDEX = 1
# Stage n places with distortion target 1 + 1/n**QUASI_TARGET_POWER, never above (n + 1) / n
QUASI_TARGET_POWER = 2

# Slack used when asserting the two-sided distortion inequalities in floating point
QUASI_SLACK = 1e-12

# Ultrapower semantics
CAUCHY_WINDOW = 5
UP_LEQ_TOL = 1e-6

# Certification
CERTIFY_SAMPLES = 10_000
CERTIFY_REFINE_ITERS = 100
CERTIFY_SAMPLE_BATCH = 1_000
CERTIFY_MAX_DIMENSION = 4
DISTORTION_MAX_DIMENSION = 6
DEGENERACY_RATIO = 1e-12
HOMOGENEITY_RTOL = 1e-9
VERIFY_SAMPLE_FACTOR = 10
VERIFY_SLACK = 0.01
CERTIFY_CAVEAT = (
    "normT and normTinv are sampled lower bounds of the operator norms; "
    "the placement half of the bound is the per-stage quasi inequality."
)

# Environment overrides
THREADS = max(1, int(os.environ.get("VARLP_THREADS", os.cpu_count() or 1)))
LOG_LEVEL = os.environ.get("VARLP_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# CLI exit codes
EXIT_CODES = {
    "ok": 0,
    "failed": 1,
    "validation": 2,
    "budget": 3,
}

# Documented CSV columns
ENUM_COLUMNS = ["index", "value"]
PHI_TRACE_COLUMNS = ["t", "phi"]
SEMINORM_COLUMNS = ["stage", "n_value", "nprime_value", "lp_norm", "gap"]
EMBED_COLUMNS = [
    "n",
    "alpha",
    "lusin_measure",
    "atoms",
    "stage_norm",
    "lp_norm",
    "quasi_ratio",
]
CERTIFY_TRACE_COLUMNS = ["stage", "normT", "normTinv", "distortion"]
DOUBLE_EMBED_COLUMNS = ["k", "original_norm", "embedded_norm", "ratio", "bound"]

# CLI defaults
DEFAULT_SEMINORM_STAGES = 10
DEFAULT_EMBED_STAGES = 20
DEFAULT_CERTIFY_BUDGET = 10
DEFAULT_ENUM_COUNT = 20
MAX_DOUBLE_EMBED_K = 64
