import json
import logging
import math

from config.settings import SCHEMA_VERSION
from utils.errors import DomainError, SchemaError, ShapeError
from utils.seqspace import NESTINGS, VarMatrix
from utils.step_functions import StepFn

logger = logging.getLogger(__name__)

STEP_FIELDS = {"schema", "breakpoints", "values"}
SEQUENCE_FIELDS = {"schema", "values", "connectors", "nesting"}
MATRIX_FIELDS = {"schema", "rows", "inner", "outer", "nesting"}
BASIS_FIELDS = {"schema", "basis"}
CERTIFICATE_FIELDS = {
    "schema", "basis", "exponent", "stage", "placement", "rationals", "normT", "normTinv",
    "distortion", "epsilon", "samples", "refine_iters", "seed", "scheme", "caveat",
}

INFINITY_SPELLINGS = {"inf", "+inf", "infinity", "+infinity"}


def load_json(path):
    """Read a JSON document and check its schema version."""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except OSError as e:
        raise SchemaError(str(path), f"cannot read file ({e.strerror})") from e
    except json.JSONDecodeError as e:
        raise SchemaError(str(path), f"invalid JSON at line {e.lineno}: {e.msg}") from e
    return check_document(data)


def check_document(data, fields=None, prefix=""):
    """
    Validate the versioned envelope of an input document

    Args:
        data: Parsed JSON object
        fields: Allowed top-level fields; unknown ones are rejected
        prefix: Field path of `data` inside a larger document

    Returns:
        data
    """
    if not isinstance(data, dict):
        raise SchemaError(prefix or "document", "expected a JSON object")
    if not prefix:
        if "schema" not in data:
            raise SchemaError("schema", "missing; expected 1")
        if data["schema"] != SCHEMA_VERSION:
            raise SchemaError("schema", f"unsupported version {data['schema']!r}, expected {SCHEMA_VERSION}")
    if fields is not None:
        unknown = sorted(set(data) - set(fields))
        if unknown:
            raise SchemaError(f"{prefix}{unknown[0]}", "unknown field")
    return data


def _required(data, name, prefix=""):
    if name not in data:
        raise SchemaError(f"{prefix}{name}", "missing")
    return data[name]


def parse_number(value, field):
    """A JSON number, or one of the strings 'inf' / 'infinity'."""
    if isinstance(value, str) and value.strip().lower() in INFINITY_SPELLINGS:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(field, f"expected a number, got {value!r}")
    return float(value)


def parse_numbers(values, field):
    if not isinstance(values, list):
        raise SchemaError(field, "expected a list")
    return [parse_number(v, f"{field}[{i}]") for i, v in enumerate(values)]


def _nesting(data):
    nesting = data.get("nesting", "left")
    if nesting not in NESTINGS:
        raise SchemaError("nesting", f"expected one of {NESTINGS}, got {nesting!r}")
    return nesting


def parse_step_function(data, prefix=""):
    """StepFn from {"breakpoints": [0, ..., 1], "values": [...]}"""
    check_document(data, STEP_FIELDS, prefix)
    breakpoints = parse_numbers(_required(data, "breakpoints", prefix), f"{prefix}breakpoints")
    values = parse_numbers(_required(data, "values", prefix), f"{prefix}values")
    try:
        return StepFn(breakpoints, values)
    except ShapeError as e:
        raise SchemaError(f"{prefix}values", str(e)) from e
    except DomainError as e:
        field = "values" if "values" in str(e) else "breakpoints"
        raise SchemaError(f"{prefix}{field}", str(e)) from e


def load_step_function(path):
    return parse_step_function(load_json(path))


def load_sequence(path):
    """(values, connectors, nesting) from {"values": [...], "connectors": [...]}"""
    data = check_document(load_json(path), SEQUENCE_FIELDS)
    values = parse_numbers(_required(data, "values"), "values")
    connectors = parse_numbers(data.get("connectors", []), "connectors")
    if values and len(connectors) != len(values) - 1:
        raise SchemaError("connectors", f"{len(values)} values need {len(values) - 1} connectors")
    if any(q < 1 for q in connectors):
        raise SchemaError("connectors", "exponents must be >= 1")
    return values, connectors, _nesting(data)


def load_matrix(path):
    """(VarMatrix, outer, inner, nesting) from {"rows": [[...]], "inner": [...], "outer": [...]}"""
    data = check_document(load_json(path), MATRIX_FIELDS)
    rows = _required(data, "rows")
    if not isinstance(rows, list):
        raise SchemaError("rows", "expected a list of rows")
    matrix = VarMatrix(tuple(parse_numbers(row, f"rows[{i}]") for i, row in enumerate(rows)))
    inner = parse_numbers(data.get("inner", []), "inner")
    outer = parse_numbers(data.get("outer", []), "outer")
    for name, exponents in (("inner", inner), ("outer", outer)):
        if any(q < 1 for q in exponents):
            raise SchemaError(name, "exponents must be >= 1")
    return matrix, outer, inner, _nesting(data)


def load_basis(path):
    """List of StepFn from {"basis": [{"breakpoints": ..., "values": ...}, ...]}"""
    data = check_document(load_json(path), BASIS_FIELDS)
    basis = _required(data, "basis")
    if not isinstance(basis, list) or not basis:
        raise SchemaError("basis", "expected a nonempty list of step functions")
    return [parse_step_function(item, f"basis[{i}].") for i, item in enumerate(basis)]


def load_certificate_data(path):
    data = check_document(load_json(path), CERTIFICATE_FIELDS)
    for name in CERTIFICATE_FIELDS - {"schema", "scheme", "caveat"}:
        _required(data, name)
    return data
