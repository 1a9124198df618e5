"""Pattern and schedule files.

Pattern JSON::

    {"kind": "atomic", "times": [...], "depth": [...], "resilience": [...],
     "horizon": 2.0, "eta0": 0.0, "target": 1.0}

Pattern CSV: optional ``# key: value`` metadata lines (kind, horizon, eta0,
target), then a header ``time,depth,resilience`` (plus an optional ``growth``
column) and one row per grid time.

Schedule JSON holds ``trades`` as ``[t, size]`` pairs, or ``atoms`` as
``[t, size]`` and ``rates`` as ``[start, end, rate]`` (each rate is booked at the
end of its stretch).  Schedule CSV needs a ``t`` column and either ``X``
(cumulative) or ``size``.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import PatternError
from .pattern import LiquidityPattern, validate

__all__ = [
    "FileFormatError",
    "read_pattern",
    "write_pattern",
    "pattern_from_csv",
    "pattern_to_csv",
    "read_schedule",
    "write_json",
    "write_csv",
]

_META_KEYS = ("kind", "horizon", "eta0", "target")


class FileFormatError(OSError):
    """File exists but cannot be parsed."""


def _number(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FileFormatError(f"{where}: not a number: {text!r}") from None


def pattern_from_csv(text: str, source: str = "<csv>") -> LiquidityPattern:
    meta: dict[str, Any] = {}
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition(":")
            key = key.strip().lower()
            if sep and key in _META_KEYS:
                value = value.strip()
                meta[key] = value if key == "kind" else _number(value, source)
            continue
        body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise FileFormatError(f"{source}: no header row")
    header = [h.strip().lower() for h in rows[0]]
    required = ["time", "depth", "resilience"]
    if any(h not in header for h in required):
        raise FileFormatError(f"{source}: header must contain {','.join(required)}")
    cols = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FileFormatError(f"{source}: row {lineno} has {len(row)} fields, expected {len(header)}")
        for h, v in zip(header, row):
            cols[h].append(_number(v.strip(), f"{source}: row {lineno}"))
    data = dict(meta, times=cols["time"], depth=cols["depth"], resilience=cols["resilience"])
    if "growth" in cols:
        data["growth"] = cols["growth"]
    return validate(data)


def pattern_to_csv(pattern: LiquidityPattern) -> str:
    buf = io.StringIO()
    buf.write(f"# kind: {pattern.kind.value}\n")
    for key in ("horizon", "eta0", "target"):
        buf.write(f"# {key}: {getattr(pattern, key)!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    has_growth = bool(np.any(pattern.growth != 0))
    writer.writerow(["time", "depth", "resilience"] + (["growth"] if has_growth else []))
    for i in range(pattern.n):
        row = [repr(float(pattern.times[i])), repr(float(pattern.depth[i])), repr(float(pattern.resilience[i]))]
        if has_growth:
            row.append(repr(float(pattern.growth[i])))
        writer.writerow(row)
    return buf.getvalue()


def _read_text(path) -> str:
    # OSError (missing file, permissions) propagates unchanged
    return Path(path).read_text(encoding="utf-8")


def read_pattern(path: str | os.PathLike) -> LiquidityPattern:
    """Load a pattern from ``.json`` or ``.csv`` (decided by suffix, then by content)."""
    text = _read_text(path)
    source = str(path)
    if Path(path).suffix.lower() == ".csv" or not text.lstrip().startswith("{"):
        return pattern_from_csv(text, source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise PatternError(f"{source}: pattern JSON must be an object")
    return validate(raw)


def write_pattern(pattern: LiquidityPattern, path: str | os.PathLike) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(pattern_to_csv(pattern), encoding="utf-8")
    else:
        write_json(pattern.to_dict(), path)


def _pairs(obj, width: int, name: str, source: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.size == 0:
        return np.zeros((0, width))
    if arr.ndim != 2 or arr.shape[1] != width:
        raise FileFormatError(f"{source}: '{name}' must be a list of {width}-element lists")
    return arr


def read_schedule(path: str | os.PathLike) -> np.ndarray:
    """Trades ``(t, size)`` as an ``(n, 2)`` array from a schedule JSON or CSV file."""
    text = _read_text(path)
    source = str(path)
    if Path(path).suffix.lower() != ".csv" and text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{source}: invalid JSON ({exc})") from None
        try:
            if "trades" in raw:
                return _pairs(raw["trades"], 2, "trades", source)
            atoms = _pairs(raw.get("atoms", []), 2, "atoms", source)
            rates = _pairs(raw.get("rates", []), 3, "rates", source)
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{source}: {exc}") from None
        lumped = np.column_stack([rates[:, 1], rates[:, 2] * (rates[:, 1] - rates[:, 0])])
        return np.vstack([atoms, lumped])
    rows = [r for r in csv.reader(line for line in text.splitlines() if line.strip() and not line.startswith("#"))]
    if not rows:
        raise FileFormatError(f"{source}: empty schedule file")
    header = [h.strip() for h in rows[0]]
    if "t" not in header or not ({"X", "size"} & set(header)):
        raise FileFormatError(f"{source}: schedule CSV needs columns t and X (or size)")
    data = np.array([[_number(v, source) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    t = data[:, header.index("t")]
    if "size" in header:
        size = data[:, header.index("size")]
    else:
        size = np.diff(data[:, header.index("X")], prepend=0.0)
    return np.column_stack([t, size])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(obj, path: str | os.PathLike | None = None) -> str:
    """Serialise to JSON (non-finite floats become ``null``); write to ``path`` if given."""
    text = json.dumps(_jsonable(obj), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_csv(columns: dict[str, np.ndarray], path: str | os.PathLike | None = None) -> str:
    """Write equal-length columns with a header row; floats use ``repr`` for exact round trips."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*arrays):
        writer.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
