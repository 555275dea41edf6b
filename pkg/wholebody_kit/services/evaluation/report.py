"""Rendering of evaluation reports as a text table, JSON or CSV"""

import csv
import io
import json
from typing import Dict, Mapping, Optional

from wholebody_kit.models.schemas import METRIC_NAMES, EvalReport, PartKind

FORMATS = ("table", "json", "csv")
UNDEFINED_CELL = "—"


def _rows(report: EvalReport, per_part: Optional[Mapping[PartKind, EvalReport]]) -> Dict[str, EvalReport]:
    rows = {"wholebody": report}
    for part, part_report in (per_part or {}).items():
        rows[PartKind(part).value] = part_report
    return rows


def _cell(value: Optional[float]) -> str:
    return UNDEFINED_CELL if value is None else f"{100.0 * value:.1f}"


def format_table(report: EvalReport, per_part: Optional[Mapping[PartKind, EvalReport]] = None) -> str:
    """Fixed-width table, metrics in percent, one row per evaluated keypoint group"""
    rows = _rows(report, per_part)
    label_width = max(len(name) for name in rows)
    header = " ".join([f"{'':<{label_width}}"] + [f"{name:>6}" for name in METRIC_NAMES])
    lines = [header]
    for name, row in rows.items():
        cells = [f"{_cell(getattr(row, metric)):>6}" for metric in METRIC_NAMES]
        lines.append(" ".join([f"{name:<{label_width}}"] + cells))
    return "\n".join(lines) + "\n"


def format_json(report: EvalReport, per_part: Optional[Mapping[PartKind, EvalReport]] = None) -> str:
    """Machine output; undefined metrics are written as -1"""
    if per_part is None:
        payload = report.as_machine()
    else:
        payload = {name: row.as_machine() for name, row in _rows(report, per_part).items()}
    return json.dumps(payload, indent=2) + "\n"


def format_csv(report: EvalReport, per_part: Optional[Mapping[PartKind, EvalReport]] = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["part", *METRIC_NAMES])
    for name, row in _rows(report, per_part).items():
        machine = row.as_machine()
        writer.writerow([name, *(repr(machine[metric]) for metric in METRIC_NAMES)])
    return buffer.getvalue()


def format_report(report: EvalReport, fmt: str = "table",
                  per_part: Optional[Mapping[PartKind, EvalReport]] = None) -> str:
    """
    Format a report (and optional per-part reports).

    Args:
        fmt: one of "table", "json", "csv"

    Raises:
        ValueError: unknown format
    """
    formatters = {"table": format_table, "json": format_json, "csv": format_csv}
    if fmt not in formatters:
        raise ValueError(f"Unknown report format '{fmt}', expected one of {FORMATS}")
    return formatters[fmt](report, per_part)
