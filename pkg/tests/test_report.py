import csv
import io
import json
import math

import numpy as np

from wickcgl.harness.report import CSV_COLUMNS, SCHEMA_VERSION, ExperimentReport


def _report():
    r = ExperimentReport("demo", {"seed": 1})
    r.check("obs", "slope", -2.0, "in [-2.3, -1.7]", 1000, True, se=0.05)
    r.check("obs", "count", np.int64(0), "== 0", 20, np.bool_(True))
    r.series["s"] = {"t": np.arange(3.0), "z": [1 + 2j, math.nan]}
    r.tables["t"] = {"inf": math.inf}
    r.timing["seconds"] = 1.5
    return r


def test_json_schema_and_cleaning():
    r = _report()
    d = json.loads(r.to_json())
    assert d["schema_version"] == SCHEMA_VERSION
    assert d["passed"] is True
    assert d["checks"][0]["n_samples"] == 1000 and d["checks"][0]["tolerance"] == "in [-2.3, -1.7]"
    assert d["series"]["s"]["z"] == [[1.0, 2.0], "nan"]
    assert d["tables"]["t"]["inf"] == "inf"
    assert "seconds" not in r.to_json()


def test_every_check_has_tolerance_and_sample_size():
    for c in json.loads(_report().to_json())["checks"]:
        assert c["tolerance"] and c["n_samples"] > 0


def test_csv_columns_fixed():
    rows = list(csv.reader(io.StringIO(_report().to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 3 and rows[1][-1] == "1"


def test_write_is_deterministic(tmp_path):
    a = _report().write(tmp_path / "a")
    b = _report().write(tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a" / "demo_timing.json").exists()
    c = _report().write(tmp_path / "c", "csv")
    assert c.suffix == ".csv"


def test_failure_propagates():
    r = _report()
    r.check("x", "y", 1.0, "< 0", 1, False)
    assert not r.passed
    assert r.summary_lines()[-1].startswith("[FAIL]")
