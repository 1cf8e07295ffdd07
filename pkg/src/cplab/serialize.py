"""JSON/CSV encoding shared by the trajectory writers and the CLI.

Complex numbers are written as ``[re, im]``; CSV floats use ``.17g``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput


def cpair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def from_cpair(v, name: str = "value") -> complex:
    """Accept a real number or a two-element ``[re, im]`` list."""
    if isinstance(v, bool):
        raise InvalidInput(f"{name}: expected a number or [re, im], got {v!r}")
    if isinstance(v, (int, float)):
        z = complex(v)
    elif isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
    ):
        z = complex(v[0], v[1])
    else:
        raise InvalidInput(f"{name}: expected a number or [re, im], got {v!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidInput(f"{name}: non-finite value")
    return z


def matrix_to_json(m: np.ndarray) -> list[list[float]]:
    """Row-major flat list of ``[re, im]`` pairs."""
    return [cpair(z) for z in np.asarray(m).ravel()]


def matrix_from_json(data, n: int, name: str = "matrix") -> np.ndarray:
    if not isinstance(data, list):
        raise InvalidInput(f"{name}: expected a list")
    # accept both flat row-major and nested rows
    flat = data
    if len(data) == n and all(isinstance(r, list) and len(r) == n and isinstance(r[0], list) for r in data):
        flat = [z for row in data for z in row]
    if len(flat) != n * n:
        raise InvalidInput(f"{name}: expected {n * n} entries, got {len(flat)}")
    return np.array([from_cpair(z, name) for z in flat], dtype=complex).reshape(n, n)


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def complex_columns(prefix: str) -> list[str]:
    return [f"{prefix}_re", f"{prefix}_im"]
