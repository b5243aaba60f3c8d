"""Atomic writers for CSV curves, JSON records and run manifests."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_curve_csv(path, columns: dict, header: dict | None = None) -> Path:
    """Columns as ``name -> array``; ``header`` entries become ``# key: value`` lines."""
    buf = io.StringIO()
    for key, value in (header or {}).items():
        buf.write(f"# {key}: {value}\n")
    names = list(columns)
    buf.write(",".join(names) + "\n")
    data = np.column_stack([np.asarray(columns[n]) for n in names]) if names else np.empty((0, 0))
    for row in data:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return atomic_write_text(path, buf.getvalue())


def _fmt(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def read_curve_csv(path) -> tuple[dict, dict]:
    """Inverse of :func:`write_curve_csv`: returns (header, columns)."""
    header = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    names = body[0].split(",")
    rows = np.array([[float(x) for x in row.split(",")] for row in body[1:]]).reshape(-1, len(names))
    return header, {n: rows[:, i] for i, n in enumerate(names)}


def write_json(path, record: dict) -> Path:
    return atomic_write_text(path, json.dumps(record, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def manifest_path(output) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output, *, command: str, config: dict | None, seed, outputs, version: str, duration: float, arguments=None) -> Path:
    """One manifest per output file, named ``<output>.manifest.json``."""
    record = {
        "command": command,
        "arguments": arguments or {},
        "config": config,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "version": version,
        "duration_s": duration,
    }
    return write_json(manifest_path(output), record)
