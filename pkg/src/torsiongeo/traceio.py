"""Trace CSV and report JSON serialization.

CSV columns are t,u,v,du,dv,speed,kappa,gV at 17 significant digits, which
round-trips IEEE doubles bit-exactly: a written trace can be re-parsed and
replayed or audited without re-integration.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .audit import InvariantReport
from .integrate import Trace

CSV_COLUMNS = ("t", "u", "v", "du", "dv", "speed", "kappa", "gV")


def trace_to_csv(trace: Trace) -> str:
    lines = [",".join(CSV_COLUMNS)]
    cols = (trace.t, trace.u, trace.v, trace.du, trace.dv,
            trace.speed, trace.kappa, trace.g_v)
    for i in range(len(trace)):
        lines.append(",".join(f"{col[i]:.17g}" for col in cols))
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: Trace, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(trace_to_csv(trace))
    return path


def read_trace_csv(path: str | Path) -> Trace:
    """Parse a trace CSV; the result carries no chart or field objects."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    if data.size == 0:
        raise ValueError("trace CSV has no samples")
    t, u, v, du, dv, speed, kappa, g_v = data.T
    E = float(speed[0])
    return Trace(t=t, u=u, v=v, du=du, dv=dv, speed=speed, kappa=kappa,
                 g_v=g_v, E=E, chart=None, field=None, settings=None,
                 stop_reason="from-csv")


def reports_to_json(reports: list[InvariantReport], scenario_id: str | None = None) -> str:
    payload = {
        "scenario": scenario_id,
        "reports": [r.to_dict() for r in reports],
        "all_passed": all(r.passed is not False for r in reports),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_reports_json(reports: list[InvariantReport], path: str | Path,
                       scenario_id: str | None = None) -> Path:
    path = Path(path)
    path.write_text(reports_to_json(reports, scenario_id))
    return path
