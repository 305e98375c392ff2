"""CSV import/export for grid-based objects.

All files are plain CSV with floats written in Python's shortest
round-trip representation, so write-then-read reproduces every value bit
for bit.  Formats:

* grid function — header ``x,weight,value``, one row per grid point;
* kernel — a header row of the G abscissae, then G rows of G values;
* patterns — a header row of the G abscissae, then one 0/1 row per
  pattern (1 = observed);
* samples — header ``n,m,rep,x,value``, one row per grid point per
  sample (long format);
* partial element — header ``x,value,observed``, the assembled values
  with the parallel 0/1 mask column (observed values are the source's,
  missing ones are the conditional draws).

Writers are atomic (write to a sibling ``.tmp``, then rename), matching
the experiment runner's discipline so partially written files never
appear under the final name.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .arrays import Sample
from .imputation import PartialElement
from .l2 import Grid, GridFunction, Kernel
from .missingness import MissingnessPattern

__all__ = [
    "grid_function_to_csv",
    "grid_function_from_csv",
    "kernel_to_csv",
    "kernel_from_csv",
    "patterns_to_csv",
    "patterns_from_csv",
    "samples_to_csv",
    "partial_element_to_csv",
]


def _write_rows_atomic(path: Path, rows: Iterable[Sequence]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fp:
        csv.writer(fp).writerows(rows)
    os.replace(tmp, path)


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fp:
        return [row for row in csv.reader(fp) if row]


def grid_function_to_csv(fn: GridFunction, path: str | Path) -> None:
    """Write ``fn`` as ``x,weight,value`` rows, one per grid point."""
    rows = [("x", "weight", "value")]
    rows.extend(zip(fn.grid.points, fn.grid.weights, fn.values))
    _write_rows_atomic(Path(path), rows)


def grid_function_from_csv(path: str | Path) -> GridFunction:
    """Read a grid function written by :func:`grid_function_to_csv`."""
    rows = _read_rows(Path(path))
    if not rows or rows[0] != ["x", "weight", "value"]:
        raise ValueError(f"{path}: expected header x,weight,value")
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    if data.ndim != 2 or data.shape[1] != 3 or data.shape[0] == 0:
        raise ValueError(f"{path}: expected nonempty 3-column body")
    grid = Grid(points=data[:, 0], weights=data[:, 1])
    return GridFunction(grid, data[:, 2])


def kernel_to_csv(kernel: Kernel, path: str | Path) -> None:
    """Write ``kernel`` as a G x G block under a header row of abscissae."""
    rows: list[Sequence] = [tuple(kernel.grid.points)]
    rows.extend(tuple(row) for row in kernel.values)
    _write_rows_atomic(Path(path), rows)


def kernel_from_csv(path: str | Path, grid: Grid) -> Kernel:
    """Read a kernel written by :func:`kernel_to_csv` onto ``grid``.

    The header abscissae must equal ``grid.points`` exactly; the weights
    are not stored in the file, which is why the grid is an argument.
    """
    rows = _read_rows(Path(path))
    if not rows:
        raise ValueError(f"{path}: empty kernel file")
    header = np.array([float(c) for c in rows[0]])
    if not np.array_equal(header, grid.points):
        raise ValueError(f"{path}: header abscissae do not match the grid")
    values = np.array([[float(c) for c in row] for row in rows[1:]])
    if values.shape != (grid.size, grid.size):
        raise ValueError(
            f"{path}: expected a {grid.size} x {grid.size} block, got {values.shape}"
        )
    return Kernel(grid, values)


def patterns_to_csv(
    patterns: Sequence[MissingnessPattern], path: str | Path
) -> None:
    """Write patterns as 0/1 rows (1 = observed) under the abscissae."""
    if not patterns:
        raise ValueError("need at least one pattern")
    grid = patterns[0].grid
    for p in patterns[1:]:
        if not p.grid.matches(grid):
            raise ValueError("patterns live on different grids")
    rows: list[Sequence] = [tuple(grid.points)]
    rows.extend(tuple(int(v) for v in p.mask) for p in patterns)
    _write_rows_atomic(Path(path), rows)


def patterns_from_csv(
    path: str | Path, grid: Grid
) -> tuple[MissingnessPattern, ...]:
    """Read patterns written by :func:`patterns_to_csv` onto ``grid``."""
    rows = _read_rows(Path(path))
    if not rows:
        raise ValueError(f"{path}: empty pattern file")
    header = np.array([float(c) for c in rows[0]])
    if not np.array_equal(header, grid.points):
        raise ValueError(f"{path}: header abscissae do not match the grid")
    out = []
    for row in rows[1:]:
        cells = [int(c) for c in row]
        if any(c not in (0, 1) for c in cells):
            raise ValueError(f"{path}: pattern rows must contain only 0/1")
        out.append(MissingnessPattern(grid, np.array(cells, dtype=bool)))
    return tuple(out)


def samples_to_csv(samples: Sequence[Sample], path: str | Path) -> None:
    """Write samples in long format: one ``n,m,rep,x,value`` row per point."""
    rows: list[Sequence] = [("n", "m", "rep", "x", "value")]
    for s in samples:
        rows.extend(
            (s.n, s.m, s.rep, x, v)
            for x, v in zip(s.element.grid.points, s.element.values)
        )
    _write_rows_atomic(Path(path), rows)


def partial_element_to_csv(part: PartialElement, path: str | Path) -> None:
    """Write the assembled values with the parallel 0/1 observation mask."""
    rows: list[Sequence] = [("x", "value", "observed")]
    rows.extend(
        (x, v, int(obs))
        for x, v, obs in zip(
            part.assembled.grid.points, part.assembled.values, part.pattern.mask
        )
    )
    _write_rows_atomic(Path(path), rows)
