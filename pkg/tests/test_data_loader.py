import json
import math

import pandas as pd
import pytest

from utils.data_loader import load_basis, load_matrix, load_sequence, load_step_function, parse_number
from utils.data_processor import export_data
from utils.errors import SchemaError


def test_numbers_accept_infinity():
    assert parse_number("inf", "x") == math.inf
    assert parse_number("Infinity", "x") == math.inf
    assert parse_number(3, "x") == 3.0
    with pytest.raises(SchemaError):
        parse_number(True, "x")
    with pytest.raises(SchemaError):
        parse_number("seven", "x")


def test_step_function_document(write_json):
    f = load_step_function(write_json("f.json", {"schema": 1, "breakpoints": [0, 0.5, 1], "values": [1, -2]}))
    assert f.values.tolist() == [1.0, -2.0]
    with pytest.raises(SchemaError) as excinfo:
        load_step_function(write_json("g.json", {"schema": 1, "breakpoints": [0, 0.5, 1], "values": [1]}))
    assert excinfo.value.field == "values"
    with pytest.raises(SchemaError) as excinfo:
        load_step_function(write_json("h.json", {"breakpoints": [0, 1], "values": [1]}))
    assert excinfo.value.field == "schema"


def test_sequence_and_matrix_documents(write_json):
    values, connectors, nesting = load_sequence(write_json("x.json", {"schema": 1, "values": [1, 2], "connectors": ["inf"]}))
    assert (values, connectors, nesting) == ([1.0, 2.0], [math.inf], "left")
    with pytest.raises(SchemaError) as excinfo:
        load_sequence(write_json("y.json", {"schema": 1, "values": [1, 2], "connectors": [0.5]}))
    assert excinfo.value.field == "connectors"

    matrix, outer, inner, nesting = load_matrix(
        write_json("a.json", {"schema": 1, "rows": [[1, 2], [3]], "outer": [2], "inner": [1.5]})
    )
    assert matrix.shape == (2, 2) and outer == [2.0] and inner == [1.5]
    with pytest.raises(SchemaError) as excinfo:
        load_matrix(write_json("b.json", {"schema": 1, "rows": [[1]], "nesting": "middle"}))
    assert excinfo.value.field == "nesting"


def test_basis_errors_point_into_the_list(write_json):
    good = {"breakpoints": [0, 1], "values": [1]}
    bad = {"breakpoints": [0, 1], "values": [1], "weight": 2}
    with pytest.raises(SchemaError) as excinfo:
        load_basis(write_json("basis.json", {"schema": 1, "basis": [good, bad]}))
    assert excinfo.value.field == "basis[1].weight"
    with pytest.raises(SchemaError):
        load_basis(write_json("empty.json", {"schema": 1, "basis": []}))
    assert len(load_basis(write_json("ok.json", {"schema": 1, "basis": [good, good]}))) == 2


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError, match="invalid JSON"):
        load_step_function(str(path))


def test_export_formats():
    df = pd.DataFrame({"index": [1, 2], "value": ["1/1", "2/1"]})
    assert export_data(df) == "index,value\n1,1/1\n2,2/1\n"
    assert json.loads(export_data(df, "json")) == [{"index": 1, "value": "1/1"}, {"index": 2, "value": "2/1"}]
    with pytest.raises(ValueError):
        export_data(df, "xlsx")
