"""Serialization of results: JSON summaries and tab-separated tables.

Every file is written to a temporary sibling first and renamed into place, so
readers never observe a partial file.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def jsonable(value):
    """Plain Python types; non-finite floats become strings so the JSON stays valid."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else repr(x)
    return value


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    text = dumps(obj)
    _atomic_write(Path(path), lambda fh: fh.write(text))


def write_tsv(path, columns: dict) -> None:
    """One column per key; all columns must have equal length."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])

    def write(fh):
        fh.write("\t".join(names) + "\n")
        np.savetxt(fh, data, delimiter="\t", fmt="%.17g")

    _atomic_write(Path(path), write)


class Summary:
    """Scalar results, each stored with the grid and tolerance provenance it came from."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.results = {}
        self.tables = []

    def add(self, name: str, value, provenance: dict) -> None:
        self.results[name] = {"value": value, "provenance": dict(provenance)}

    def add_all(self, values: dict, provenance: dict) -> None:
        for k, v in values.items():
            self.add(k, v, provenance)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "tables": sorted(self.tables),
        }

    def write(self, outdir) -> Path:
        path = Path(outdir) / "summary.json"
        write_json(path, self.as_dict())
        return path
