import json

import numpy as np

from torsiongeo.audit import killing_curvature_check, make_report
from torsiongeo.scenarios import CATALOG, run_scenario
from torsiongeo.traceio import (CSV_COLUMNS, read_trace_csv, reports_to_json,
                                trace_to_csv, write_reports_json, write_trace_csv)


def test_csv_round_trip_bit_exact(tmp_path):
    tr = run_scenario(CATALOG["plane-winding-offset"], span=(-1.0, 1.0))
    path = write_trace_csv(tr, tmp_path / "trace.csv")
    back = read_trace_csv(path)
    for name in ("t", "u", "v", "du", "dv", "speed", "kappa", "g_v"):
        a = getattr(tr, name)
        b = getattr(back, name)
        assert np.array_equal(a, b), name
    assert back.E == tr.speed[0]


def test_csv_header_and_determinism():
    tr = run_scenario(CATALOG["plane-straight"], span=(0.0, 0.01))
    text = trace_to_csv(tr)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert trace_to_csv(tr) == text


def test_report_json_schema(tmp_path):
    tr = run_scenario(CATALOG["plane-winding-center"], span=(-1.0, 1.0))
    reports = [killing_curvature_check(tr),
               make_report("dummy", tr.t, tr.speed, threshold=1e-5)]
    path = write_reports_json(reports, tmp_path / "r.json", scenario_id="x")
    data = json.loads(path.read_text())
    assert data["scenario"] == "x"
    assert data["all_passed"] is True
    names = {r["name"] for r in data["reports"]}
    assert names == {"killing-curvature", "dummy"}
    for rep in data["reports"]:
        assert {"name", "max_dev", "std", "verdict"} <= set(rep)


def test_failed_report_marks_payload():
    tr = run_scenario(CATALOG["plane-winding-center"], span=(-1.0, 1.0))
    rep = make_report("too-strict", tr.t, tr.u, threshold=1e-30)
    payload = json.loads(reports_to_json([rep]))
    assert payload["all_passed"] is False
    assert payload["reports"][0]["verdict"] == "FAIL"
