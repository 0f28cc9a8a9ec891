"""
Writers for the CSV tables and the JSON run summary
"""
import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _plain(value):
    """Convert numpy scalars/arrays and non-finite floats into JSON-ready values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def write_csv(path, header, rows, deterministic=False):
    """Write dict rows as CSV, led by a '# generated <timestamp>' line unless deterministic."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if not deterministic:
            handle.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[key]) for key in header])
    return path


def write_report(path, summary, deterministic=False):
    """Write the machine-readable run summary with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(summary)
    if not deterministic:
        payload["generated"] = datetime.now(timezone.utc).isoformat()
    path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_csv(path):
    """Read a table written by write_csv, skipping comment lines"""
    with open(path, encoding="utf-8") as handle:
        return list(csv.DictReader(line for line in handle if not line.startswith("#")))
