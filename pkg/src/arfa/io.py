"""CSV interchange for trajectories and matrices.

Format: one row per time sample, m comma-separated columns, optional
single header row ``ch1,...,chm``. Values are written with ``repr`` so
they round-trip exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


def write_trajectory(path, y: np.ndarray, header: bool = True) -> None:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"ch{k + 1}" for k in range(y.shape[1])])
        for row in y:
            writer.writerow([repr(float(v)) for v in row])


def read_trajectory(path) -> np.ndarray:
    """Read an (N, m) CSV trajectory, tolerating a single header row."""
    path = Path(path)
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, raw in enumerate(reader):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            try:
                rows.append([float(v) for v in raw])
            except ValueError:
                if i == 0:
                    continue  # header row
                raise InvalidInputError(f"{path}: non-numeric value on line {i + 1}")
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInputError(f"{path}: inconsistent column counts {sorted(widths)}")
    return np.asarray(rows)


def read_matrix(path) -> np.ndarray:
    """Read a square matrix stored in the same CSV layout."""
    mat = read_trajectory(path)
    if mat.shape[0] != mat.shape[1]:
        raise InvalidInputError(f"{path}: expected a square matrix, got shape {mat.shape}")
    return mat
