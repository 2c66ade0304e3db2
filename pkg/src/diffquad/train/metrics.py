"""Run metrics: JSON-lines stream plus a CSV summary.

Rows are serialized with sorted keys and no timestamps, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json

import numpy as np


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


class MetricsWriter:
    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w")

    def write(self, row: dict) -> None:
        clean = {k: _jsonable(v) for k, v in row.items()}
        self._fh.write(json.dumps(clean, sort_keys=True, separators=(",", ":")))
        self._fh.write("\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_csv(path, rows: list, fields=None) -> None:
    if not rows:
        fields = fields or []
    else:
        fields = fields or sorted({k for r in rows for k in r})
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _jsonable(row.get(k, "")) for k in fields})
