"""
Box-Ball Toolkit - Reporting
============================

Output helpers shared by the CLI:
- JSON with a schema version, exact rationals written as strings
- CSV time series and tables through pandas
- Plain-text rendering of experiment reports and scalar tables
"""

import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import numpy as np
import pandas as pd

from boxball.harness import SCHEMA_VERSION, ExperimentReport
from boxball.qstat import ScalarTable

logger = logging.getLogger(__name__)


def _default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, default=_default)


def with_schema(payload: Dict[str, Any]) -> Dict[str, Any]:
    if "schema_version" not in payload:
        payload = {"schema_version": SCHEMA_VERSION, **payload}
    return payload


def write_text(text: str, path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """Write to a file when a path is given, otherwise to the stream (stdout by default)."""
    if not text.endswith("\n"):
        text += "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
        logger.info("wrote %s", path)
    else:
        (stream or sys.stdout).write(text)


def write_json(payload: Dict[str, Any], path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    write_text(dumps(with_schema(payload)), path, stream)


def series_frame(report: ExperimentReport) -> pd.DataFrame:
    """Equal-length numeric series of a report as columns."""
    columns = {k: v for k, v in report.series.items() if v and not isinstance(v[0], dict)}
    if not columns:
        return pd.DataFrame()
    length = max(len(v) for v in columns.values())
    return pd.DataFrame({k: pd.Series(v) for k, v in columns.items()}).reindex(range(length))


def write_series_csv(report: ExperimentReport, path: str) -> None:
    frame = series_frame(report)
    frame.to_csv(path, index_label="row")
    logger.info("wrote %d rows to %s", len(frame), path)


def checks_frame(report: ExperimentReport) -> pd.DataFrame:
    return pd.DataFrame([c.to_json() for c in report.checks])


def render_report(report: ExperimentReport) -> str:
    """Human-readable summary of a report."""
    lines = [
        f"{report.experiment}: {'PASS' if report.passed else 'FAIL'}",
        "  " + ", ".join(f"{k}={v}" for k, v in report.spec.items() if k != "q"),
    ]
    if report.checks:
        frame = checks_frame(report)[["name", "estimate", "stderr", "theory", "tolerance", "verdict"]]
        lines.append(frame.to_string(index=False))
    for c in report.checks:
        if c.note:
            lines.append(f"  note [{c.name}]: {c.note}")
    return "\n".join(lines)


def table_frame(table: ScalarTable) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for row in table.rows:
        rows.append({k: (str(v) if isinstance(v, Fraction) else v) for k, v in row.items()})
    return pd.DataFrame(rows).set_index("k")


def render_table(table: ScalarTable) -> str:
    frame = table_frame(table)
    return frame.to_string()
