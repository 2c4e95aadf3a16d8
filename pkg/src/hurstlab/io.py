"""CSV and JSON emission with byte-stable formatting."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Header line, comma separated, ``.`` decimals (shortest round-trip repr), ``\\n`` endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def grid_rows(t_grid, h_grid, values) -> Iterable[tuple]:
    """``(t, H, component, value)`` rows of a ``values[time, hurst, component]`` array."""
    values = np.asarray(values)
    for i, t in enumerate(t_grid):
        for j, h in enumerate(h_grid):
            for c in range(values.shape[2]):
                yield float(t), float(h), c, float(values[i, j, c])


def read_series(path: Path) -> np.ndarray:
    """Observation file: a ``value`` column (optionally with ``component``) or a bare column."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return np.zeros((0, 1))
    header = rows[0]
    try:
        float(header[0])
        data = rows
        header = None
    except ValueError:
        data = rows[1:]
    if header is None:
        return np.array([[float(r[0])] for r in data])
    vi = header.index("value")
    if "component" in header:
        ci = header.index("component")
        comps = sorted({int(r[ci]) for r in data})
        cols = [[float(r[vi]) for r in data if int(r[ci]) == c] for c in comps]
        return np.array(cols).T
    return np.array([[float(r[vi])] for r in data])
