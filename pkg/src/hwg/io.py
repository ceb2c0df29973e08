"""Deterministic CSV/JSON export and config parsing for the command line."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument


class ConfigError(InvalidArgument):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line, self.column = line, column


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise InvalidArgument(f"row has {len(row)} cells, table has {len(self.columns)} columns")
        self.rows.append(list(row))


def cell(v):
    """Plain Python value with floats kept at full precision."""
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _fmt(v):
    v = cell(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(t: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.columns)
    for row in t.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def to_json(obj) -> str:
    def conv(o):
        if isinstance(o, dict):
            return {str(k): conv(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        if isinstance(o, np.ndarray):
            return [conv(v) for v in o.tolist()]
        if isinstance(o, Table):
            return {"columns": list(o.columns), "rows": [[conv(v) for v in r] for r in o.rows]}
        return cell(o)
    return json.dumps(conv(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def render(name: str, tables: dict, verdicts: list, fmt: str) -> dict:
    """Map file name -> content for one scenario run."""
    if fmt == "csv":
        files = {f"{name}.{key}.csv": table_csv(t) for key, t in tables.items()}
        files[f"{name}.verdicts.json"] = to_json(verdicts)
        return files
    if fmt == "json":
        return {f"{name}.json": to_json({"tables": tables, "verdicts": verdicts})}
    raise InvalidArgument(f"unknown format {fmt!r}")


def write_all(out_dir: str, files: dict):
    """Write every file or none: stage in a temp dir, then move into place."""
    os.makedirs(out_dir, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".hwg-", dir=out_dir)
    try:
        for fname, text in files.items():
            with open(os.path.join(stage, fname), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for fname in files:
            os.replace(os.path.join(stage, fname), os.path.join(out_dir, fname))
    finally:
        for left in os.listdir(stage):
            os.remove(os.path.join(stage, left))
        os.rmdir(stage)
    return [os.path.join(out_dir, f) for f in files]


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object", 1, 1)
    return obj
