"""Delimited and JSON serialization of sweep results."""

from __future__ import annotations

import json
from pathlib import Path

CSV_COLUMNS = (
    "nth", "omega_over_2pi_mhz", "delta_over_2pi_mhz", "epsilon",
    "delta", "delta_slow", "delta_l2", "e_s_ev", "tau_s_us", "p_s_ev_per_us",
    "c_l1", "s_von", "overshoot", "status",
)

#: metric/row key behind each CSV column
_COLUMN_KEYS = {
    "nth": "nth",
    "omega_over_2pi_mhz": "omega_over_2pi_mhz",
    "delta_over_2pi_mhz": "delta_over_2pi_mhz",
    "epsilon": "epsilon",
    "delta": "delta",
    "delta_slow": "delta_slow",
    "delta_l2": "delta_l2",
    "e_s_ev": "e_s",
    "tau_s_us": "tau_s",
    "p_s_ev_per_us": "p_s",
    "c_l1": "c_l1",
    "s_von": "s_von",
    "overshoot": "overshoot",
    "status": "status",
}

#: row keys carried into JSON records beyond the CSV schema, when present
_EXTRA_JSON_KEYS = ("lambda_slow_real", "lambda_slow_imag")


def format_value(value) -> str:
    """Serialize one cell: 12 significant digits for floats, true/false for
    booleans, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def format_row(row: dict) -> str:
    return ",".join(format_value(row.get(key)) for key in _COLUMN_KEYS.values())


def emit_csv(result, path) -> Path:
    """Write rows under the fixed header; unrequested metrics stay empty."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(format_row(row) for row in result.rows)
    path.write_text("\n".join(lines) + "\n", newline="")
    return path


def _json_record(row: dict) -> dict:
    rec = {col: row.get(key) for col, key in _COLUMN_KEYS.items()}
    for key in _EXTRA_JSON_KEYS:
        if key in row:
            rec[key] = row[key]
    return rec


def emit_json(result, path) -> Path:
    path = Path(path)
    doc = {
        "metadata": result.metadata,
        "records": [_json_record(row) for row in result.rows],
    }
    if getattr(result, "ep_curve", None) is not None:
        doc["ep_curve"] = [
            {"omega_over_2pi_mhz": om, "nth_ep": n} for om, n in result.ep_curve
        ]
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def emit(result, fmt: str, path) -> Path:
    if fmt == "csv":
        return emit_csv(result, path)
    if fmt == "json":
        return emit_json(result, path)
    raise ValueError(f"unknown output format {fmt!r}")


def write_table(path, header, rows) -> Path:
    """Small helper for preset-specific delimited files."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="")
    return path
