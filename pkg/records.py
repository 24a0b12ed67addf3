"""
Bit-stable record output for figure data and sweep results.

Numbers are written with a fixed number of significant digits, columns in a
fixed order, LF line endings and UTF-8, so reruns produce identical files.
"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

import config

logger = logging.getLogger(__name__)

CSV = 'csv'
JSON_LINES = 'json-lines'
FORMATS = (CSV, JSON_LINES)


class RecordError(ValueError):
    """Records that do not share one schema"""


def format_value(value: Any, digits: int = config.SIGNIFICANT_DIGITS) -> str:
    """Text form of one cell"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if value == 0:
            return '0'
        return f"{value:.{digits}g}"
    if isinstance(value, (complex, np.complexfloating)):
        return f"{format_value(value.real, digits)}{'+' if value.imag >= 0 else '-'}" \
               f"{format_value(abs(value.imag), digits)}j"
    return str(value)


def _json_value(value: Any, digits: int):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(f"{value:.{digits}g}") if math.isfinite(value) else format_value(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_json_value(value.real, digits), _json_value(value.imag, digits)]
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_value(v, digits) for v in value]
    return value


def record_columns(records: Sequence[Dict[str, Any]]) -> List[str]:
    """Column order of the first record; every other record must match it"""
    if not records:
        return []
    columns = list(records[0].keys())
    for k, record in enumerate(records[1:], start=1):
        if set(record.keys()) != set(columns):
            raise RecordError(f"Record {k} has columns {sorted(record)} instead of {sorted(columns)}")
    return columns


def emit_records(records: Iterable[Dict[str, Any]], path: str, fmt: str = CSV,
                 columns: Optional[Sequence[str]] = None, header_lines: Sequence[str] = (),
                 digits: int = config.SIGNIFICANT_DIGITS) -> str:
    """
    Write homogeneous records to path as CSV or JSON lines.

    header_lines are written first, each prefixed with '# ' (CSV only).
    Returns the path written.
    """
    records = list(records)
    if fmt not in FORMATS:
        raise RecordError(f"Unknown record format {fmt}, expected one of {FORMATS}")
    columns = list(columns) if columns is not None else record_columns(records)
    for record in records:
        missing = [c for c in columns if c not in record]
        if missing:
            raise RecordError(f"Record is missing columns {missing}")

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, 'w', newline='', encoding='utf-8') as f:
        if fmt == CSV:
            for line in header_lines:
                f.write(f"# {line}\n")
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for record in records:
                writer.writerow([format_value(record[c], digits) for c in columns])
        else:
            for record in records:
                row = {c: _json_value(record[c], digits) for c in columns}
                f.write(json.dumps(row, ensure_ascii=False) + '\n')

    logger.info(f"Wrote {len(records)} records to {path}")
    return path


def read_csv_records(path: str) -> List[Dict[str, str]]:
    """Rows of a CSV written by emit_records, skipping '#' header lines"""
    with open(path, newline='', encoding='utf-8') as f:
        lines = [line for line in f if not line.startswith('#')]
    return list(csv.DictReader(lines))
