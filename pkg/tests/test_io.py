import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate.errors import InputError
from tailrate.io import (
    dump_csv,
    dumps,
    grid_points,
    load_csv,
    load_decomposition,
    load_graph,
    load_samples,
    load_scenario,
    make_run,
    write_report,
)
from tailrate.norms import FunctionSample
from tailrate.space import ExhaustedSpace

jsonschema = pytest.importorskip("jsonschema")
SCHEMA = json.loads(resources.files("tailrate").joinpath("schema/report_v1.json").read_text())


def validate(text):
    jsonschema.validate(json.loads(text), SCHEMA)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(st.floats(0, 1e300), finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    h, f, x = (np.array(c) for c in zip(*rows))
    s = ExhaustedSpace(h, coords=x)
    dump_csv(s, FunctionSample(f), path)
    s2, f2 = load_csv(path)
    assert np.array_equal(s2.h, h) and np.array_equal(f2.values, f)
    assert np.array_equal(s2.coords[:, 0], x) and np.array_equal(s2.ids, s.ids)


def test_csv_missing_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("id,h\n0,1\n")
    with pytest.raises(InputError, match="'f'"):
        load_csv(p)


def test_csv_non_numeric_cell(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("id,h,f\n0,1,2\n1,2,abc\n")
    with pytest.raises(InputError, match="row 3, column 'f'"):
        load_csv(p)


def test_csv_optional_columns(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("id,h,f,x1,x2,mu,m,end\n4,0,1,0.5,1,2,1,core\n9,3,2,1.5,2,2,3,e1\n")
    s, f = load_csv(p)
    assert list(s.ids) == [4, 9] and s.coords.shape == (2, 2)
    assert list(s.membership) == [1, 3] and s.end_label == ("core", "e1")


def test_grid_synthesis():
    np.testing.assert_allclose(grid_points({"from": 0, "to": 40, "count": 5}), [0, 10, 20, 30, 40])
    np.testing.assert_allclose(grid_points({"from": 1, "to": 100, "count": 3, "spacing": "log"}), [1, 10, 100])
    assert grid_points({"from": 1, "to": 2, "count": 2, "negate": True})[1] == -2


def test_log_grid_needs_positive_endpoints():
    with pytest.raises(InputError, match="log spacing"):
        grid_points({"from": 0, "to": 10, "count": 5, "spacing": "log"})


def test_samples_from_scenario(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({
        "domain": {"grid": {"from": 0, "to": 4, "count": 5}},
        "f_expr": "exp(-x)", "h_expr": "x", "weight": "poly:p=1",
    }))
    s, f = load_samples(p)
    np.testing.assert_allclose(f.values, np.exp(-np.arange(5.0)))
    np.testing.assert_allclose(s.h, np.arange(5.0))


def test_scenario_errors(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("{not json")
    with pytest.raises(InputError):
        load_scenario(p)
    p.write_text(json.dumps({"domain": {"csv": "missing.csv"}}))
    with pytest.raises(InputError, match="does not exist"):
        load_scenario(p)


def test_graph_parse(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 2\n# levels\n0 0\n1 1\n2 2\n")
    g = load_graph(p)
    assert len(g.vertices) == 3
    p.write_text("0 1\n")
    with pytest.raises(InputError, match="levels"):
        load_graph(p)
    p.write_text("0 x\n# levels\n0 0\n")
    with pytest.raises(InputError, match="line 1"):
        load_graph(p)


def test_explicit_decomposition():
    s = ExhaustedSpace([0.0, 1.0, 2.0], ids=[0, 1, 2])
    dec = load_decomposition({"core": [0], "ends": [{"label": "e", "ids": [1, 2], "h": [0, 1], "weight": "exp:a=1"}]})
    assert dec.locate(s)[1][0].tolist() == [1, 2]
    with pytest.raises(InputError):
        load_decomposition({"ends": [{"label": "e"}]})


def test_empty_report():
    text = write_report([], None)
    assert json.loads(text) == {"version": "1", "runs": []}
    validate(text)


def test_report_fields_and_diagnostics():
    run = make_run("sharp_norm", {"value": 1.5, "c_star": 0.5, "n_points": 3}, "poly:p=1")
    assert run["diagnostics"] == {"n_points": 3}
    text = write_report([run], None)
    validate(text)
    assert json.loads(text)["runs"][0]["weight"] == "poly:p=1"


def test_non_finite_values_are_strings():
    text = dumps({"a": float("inf"), "b": float("nan"), "c": 1.0})
    assert json.loads(text) == {"a": "+inf", "b": "nan", "c": 1.0}
    validate(write_report([make_run("asymptotic_constant", {"value": float("inf"), "status": "Diverges"})], None))


def test_floats_keep_17_digits():
    x = 0.1 + 0.2
    assert float(json.loads(dumps({"x": x}))["x"]) == x


def test_ladder_sibling_csv(tmp_path):
    run = make_run("tail_ladder", {"ladder": [{"R": 0.0, "T": 1.0, "loc": 0.0}, {"R": 1.0, "T": 0.5, "loc": 0.25}]})
    out = tmp_path / "rep.json"
    write_report([run], out)
    report = json.loads(out.read_text())
    validate(out.read_text())
    csv_path = tmp_path / report["runs"][0]["csv"]
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "R,T,loc" and lines[2] == "1,0.5,0.25"


def test_report_to_missing_directory(tmp_path):
    with pytest.raises(InputError):
        write_report([], tmp_path / "nope" / "r.json")


def test_schema_rejects_unknown_op():
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"version": "1", "runs": [{"op": "bogus"}]}, SCHEMA)
