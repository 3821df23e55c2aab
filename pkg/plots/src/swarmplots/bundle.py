"""Read a run bundle (trajectory.csv + metrics.json + manifest.json)."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_SCHEMA = 1


class SchemaMismatch(Exception):
    """The bundle's CSV schema version is not one this reader supports."""


@dataclass
class Bundle:
    path: str
    schema_version: int
    columns: list
    rows: np.ndarray          # (records, columns) floats; "-" and ints coerced
    metrics: dict
    manifest: dict
    _index: dict = field(default_factory=dict)

    @property
    def agent_count(self) -> int:
        return int(self.column("agent").max()) + 1 if self.rows.size else 0

    @property
    def round_count(self) -> int:
        return int(self.column("k").max()) if self.rows.size else 0

    def column(self, name) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def per_agent(self, name) -> np.ndarray:
        """Column reshaped to (rounds+1, agents); relies on row order."""
        n = self.agent_count
        return self.column(name).reshape(-1, n)

    def positions(self) -> np.ndarray:
        """(rounds+1, agents, dim) positions."""
        dims = [c for c in self.columns
                if c.startswith("x") and c[1:].isdigit()]
        return np.stack([self.per_agent(c) for c in dims], axis=2)

    def minimizer_path(self) -> np.ndarray:
        """(rounds+1, dim) oracle minimizer positions."""
        dims = [c for c in self.columns if c.startswith("oracle_min")]
        return np.stack([self.per_agent(c)[:, 0] for c in dims], axis=1)


def _parse_cell(text):
    if text == "-":           # audit case marker on non-numeric rows
        return np.nan
    if text in ("a", "b"):
        return {"a": 0.0, "b": 1.0}[text]
    return float(text)


def load_bundle(path) -> Bundle:
    """Load the bundle directory at `path`; raises SchemaMismatch when the
    trajectory schema version differs from the supported one."""
    csv_path = os.path.join(path, "trajectory.csv")
    with open(csv_path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema_version="):
            raise SchemaMismatch(f"{csv_path}: missing schema version header")
        version = int(first.split("=", 1)[1])
        if version != SUPPORTED_SCHEMA:
            raise SchemaMismatch(
                f"{csv_path}: schema version {version}, "
                f"this reader supports {SUPPORTED_SCHEMA}")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    with open(os.path.join(path, "metrics.json")) as fh:
        metrics = json.load(fh)
    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return Bundle(path=path, schema_version=version, columns=columns,
                  rows=data, metrics=metrics, manifest=manifest)
