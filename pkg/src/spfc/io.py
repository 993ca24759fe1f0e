"""On-disk formats: binary field snapshots and the CSV diagnostics trace.

Snapshot layout::

    SPFC1 <dim> <n> <length> <time>\\n
    <n**dim little-endian float64 values, C order (last axis fastest)>

Header floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .grid import Grid
from .stepper import StepDiagnostics

MAGIC = "SPFC1"

TRACE_COLUMNS = (
    "step",
    "time",
    "mass",
    "e_total",
    "e_e1",
    "e_modified",
    "e_sav",
    "r",
    "r_drift",
    "h2_norm",
    "grad_lap_norm",
    "lhs_coefficient",
)


class SnapshotFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    grid: Grid
    time: float
    values: np.ndarray


def write_snapshot(path: str | os.PathLike, grid: Grid, values: np.ndarray, time: float) -> Path:
    path = Path(path)
    values = grid.check(values)
    header = f"{MAGIC} {grid.dim} {grid.n} {float(grid.length)!r} {float(time)!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes(order="C"))
    return path


def read_snapshot(path: str | os.PathLike) -> Snapshot:
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    try:
        magic, dim, n, length, time = header.decode("ascii").split()
        if magic != MAGIC:
            raise ValueError(magic)
        grid = Grid(int(dim), int(n), float(length))
        time = float(time)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: bad snapshot header {header[:64]!r}") from exc
    if len(payload) != 8 * grid.size:
        raise SnapshotFormatError(
            f"{path}: expected {8 * grid.size} data bytes, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(float).reshape(grid.shape)
    return Snapshot(grid, time, values)


def _fmt(x: float) -> str:
    return "%.17g" % x


class TraceWriter:
    """Append-only CSV writer for :data:`TRACE_COLUMNS`."""

    def __init__(self, path: str | os.PathLike) -> None:
        self.path = Path(path)
        self._fh: TextIO = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(TRACE_COLUMNS)
        self._last_step: int | None = None

    def write(self, diag: StepDiagnostics) -> None:
        if self._last_step is not None and diag.step <= self._last_step:
            raise ValueError(f"trace rows must be appended in step order ({diag.step} after {self._last_step})")
        self._last_step = diag.step
        row = [str(int(diag.step))] + [_fmt(getattr(diag, c)) for c in TRACE_COLUMNS[1:]]
        self._writer.writerow(row)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Load a trace CSV into column arrays (``step`` as int, others float)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(TRACE_COLUMNS)
    out = {"step": np.array([int(v) for v in cols[0]], dtype=np.int64)}
    for name, col in zip(TRACE_COLUMNS[1:], cols[1:]):
        out[name] = np.array([float(v) for v in col], dtype=float)
    return out
