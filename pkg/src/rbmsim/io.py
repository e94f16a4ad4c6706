"""Artifact writers: CSV with LF endings and shortest round-trip floats, JSON.

Every writer is deterministic given identical numeric inputs, which is what
makes byte-identical re-runs checkable at the file level.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError

PathLike = Union[str, Path]


def fmt(x) -> str:
    """Shortest decimal string that round-trips the value."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_columns(path: PathLike, header: Sequence[str], *columns) -> None:
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header):
        raise ValueError(f"{len(header)} names for {len(cols)} columns")
    write_csv(path, header, zip(*cols))


def write_json(path: PathLike, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def read_json(path: PathLike):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_matrix_csv(path: PathLike, q: np.ndarray) -> None:
    """Row-major square matrix under an n=<N> size header."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {q.shape}")
    lines = [f"n={q.shape[0]}"]
    lines.extend(",".join(fmt(v) for v in row) for row in q)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_matrix_csv(path: PathLike) -> np.ndarray:
    raw = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not raw or not raw[0].startswith("n="):
        raise ConfigError(f"{path}: first line must be n=<N>")
    try:
        n = int(raw[0][2:])
    except ValueError:
        raise ConfigError(f"{path}: bad size header {raw[0]!r}") from None
    body = [line for line in raw[1:] if line.strip()]
    if len(body) != n:
        raise ConfigError(f"{path}: expected {n} rows, found {len(body)}")
    try:
        q = np.array([[float(v) for v in line.split(",")] for line in body])
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    if q.shape != (n, n):
        raise ConfigError(f"{path}: expected {n}x{n} entries, got {q.shape}")
    return q


def read_csv_columns(path: PathLike) -> dict:
    """Header-keyed float columns; the inverse of write_columns."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty file")
    names = lines[0].split(",")
    data = [[] for _ in names]
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(names):
            raise ConfigError(f"{path}: ragged row {line!r}")
        for acc, v in zip(data, parts):
            acc.append(float(v))
    return {name: np.asarray(col) for name, col in zip(names, data)}
