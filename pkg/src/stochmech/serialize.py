"""CSV and JSON emission with reproducible bytes.

Data files never contain wall-clock information; run metadata goes to a
sidecar.  Floats are written with 17 significant digits, newline line
endings, '.' decimal separator; JSON uses sorted keys so repeated runs
produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .bell import ChshReport
from .correlators import CorrelationSeries

__all__ = [
    "fmt",
    "write_csv",
    "write_json",
    "series_to_dict",
    "series_from_dict",
    "chsh_report_to_dict",
    "chsh_report_from_dict",
    "write_sidecar",
]


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: str | Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def series_to_dict(series: CorrelationSeries) -> dict:
    out = {
        "method": series.method,
        "lags": list(series.lags),
        "values": list(series.values),
    }
    if series.stderr is not None:
        out["stderr"] = list(series.stderr)
    return out


def series_from_dict(raw: dict) -> CorrelationSeries:
    return CorrelationSeries(
        lags=tuple(raw["lags"]),
        values=tuple(raw["values"]),
        method=raw["method"],
        stderr=tuple(raw["stderr"]) if "stderr" in raw else None,
    )


def chsh_report_to_dict(report: ChshReport) -> dict:
    return {
        "alpha": report.alpha,
        "omega": report.omega,
        "times": list(report.times),
        "correlations": [list(row) for row in report.correlations],
        "marginals": list(report.marginals),
        "S": report.S,
        "classical_feasible": report.classical_feasible,
    }


def chsh_report_from_dict(raw: dict) -> ChshReport:
    return ChshReport(
        alpha=raw["alpha"],
        omega=raw["omega"],
        times=tuple(raw["times"]),
        correlations=tuple(tuple(row) for row in raw["correlations"]),
        marginals=tuple(raw["marginals"]),
        S=raw["S"],
        classical_feasible=raw["classical_feasible"],
    )


def chsh_report_csv_row(report: ChshReport) -> list:
    (e11, e12), (e21, e22) = report.correlations
    return [
        report.alpha, report.omega, *report.times,
        e11, e12, e21, e22, report.S, report.classical_feasible,
    ]


CHSH_CSV_HEADER = [
    "alpha", "omega", "t1", "t2", "s1", "s2",
    "E11", "E12", "E21", "E22", "S", "feasible",
]


def write_sidecar(data_path: str | Path, config_path: str | Path | None) -> None:
    """Run metadata next to the data file; the only place timestamps live."""
    meta = {
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "argv": sys.argv,
        "data_file": str(data_path),
    }
    if config_path is not None:
        body = Path(config_path).read_bytes()
        meta["config_file"] = str(config_path)
        meta["config_sha256"] = hashlib.sha256(body).hexdigest()
    Path(str(data_path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n"
    )
