"""Report assembly and deterministic CSV/JSON serialization.

Every row is stamped with the tool version, the spec hash of the Orlicz
function in play, the seed and the method tag, so any number in any output
file can be traced back to a reproducible configuration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

STAMP_COLUMNS = ("version", "psi_hash", "seed", "method")


def _jsonable(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    if hasattr(v, "tolist"):
        return v.tolist()
    if hasattr(v, "item"):
        return v.item()
    return v


@dataclass
class Report:
    command: str
    columns: tuple  # payload column order, fixed per command
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    psi_hash: str = "-"
    seed: object = None
    method: str = "exact"

    def add_row(self, **payload):
        unknown = set(payload) - set(self.columns)
        if unknown:
            raise ValueError(f"columns not declared for {self.command}: {sorted(unknown)}")
        self.rows.append({c: _jsonable(payload.get(c)) for c in self.columns})

    def _stamp(self):
        return {
            "version": __version__,
            "psi_hash": self.psi_hash,
            "seed": "-" if self.seed is None else self.seed,
            "method": self.method,
        }

    def write_csv(self, path):
        path = Path(path)
        stamp = self._stamp()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(STAMP_COLUMNS) + list(self.columns))
            for row in self.rows:
                w.writerow([stamp[c] for c in STAMP_COLUMNS] + [row[c] for c in self.columns])
        return path

    def write_json(self, path):
        path = Path(path)
        doc = {
            "command": self.command,
            **self._stamp(),
            "meta": {k: _jsonable(v) for k, v in sorted(self.meta.items())},
            "columns": list(self.columns),
            "rows": self.rows,
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        return path

    def write(self, out_dir, fmt):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{self.command}.{fmt}"
        return self.write_csv(target) if fmt == "csv" else self.write_json(target)
