"""Byte-stable artifact emission (CSV and JSON) with provenance headers.

Identical records produce byte-identical files: floats are printed with 17
significant digits, column order is fixed by the schema, rows end with a
newline, and JSON keys keep insertion order.
"""

import json

from . import __version__
from .backend import backend_name

SCHEMAS = {
    "beta": ("n", "m", "k", "exact", "mc_mean", "mc_stderr", "reps"),
    "decay": ("n", "m", "k", "replicate", "seed", "value"),
    "cap": ("n", "phi", "cap_ratio", "log_cap_ratio"),
    "distinguish": ("trial", "hypothesis", "n", "d", "query_value", "null_center",
                    "threshold", "decision", "correct"),
    "concentration": ("n", "d", "query_id", "replicate", "gap", "tau", "exceeded"),
    "discrete-gauss": ("s", "theta", "k", "moment", "gaussian_moment", "abs_error"),
    "chi2-avg": ("n", "m", "value", "chi2", "normalization_error", "refinement_change"),
}


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def header_lines(meta: dict) -> list:
    lines = [f"# tool_version: {__version__}", f"# backend: {backend_name()}"]
    for key, value in meta.items():
        lines.append(f"# {key}: {value}")
    return lines


def emit_csv(path, schema: str, rows, meta: dict) -> None:
    columns = SCHEMAS[schema]
    with open(path, "w", newline="") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row width {len(row)} != schema {schema!r}")
            fh.write(",".join(format_value(v) for v in row) + "\n")


def emit_json(path, schema: str, rows, meta: dict) -> None:
    columns = SCHEMAS[schema]
    payload = {
        "meta": {"tool_version": __version__, "backend": backend_name(), **meta},
        "schema": schema,
        "columns": list(columns),
        "records": [dict(zip(columns, row)) for row in rows],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def emit_report(path, schema: str, rows, meta: dict, fmt: str = "csv") -> None:
    """Write records under a named schema; fmt is "csv" or "json"."""
    rows = [tuple(row) for row in rows]
    if fmt == "csv":
        emit_csv(path, schema, rows, meta)
    elif fmt == "json":
        emit_json(path, schema, rows, meta)
    else:
        raise ValueError(f"unknown format {fmt!r}")
