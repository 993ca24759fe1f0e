"""Uniform periodic grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, PreconditionError


@dataclass(frozen=True)
class Grid:
    """Periodic uniform mesh on ``(0, length)**dim`` with ``n`` points per axis.

    Fields are stored as ``numpy`` arrays of shape ``(n,) * dim`` in C
    order: ``f[i, j]`` is the value at ``(x_i, y_j) = (i*h, j*h)``. The first
    axis is x, so the last axis (y in 2D, z in 3D) varies fastest in memory
    and in the flattened snapshot files.
    """

    dim: int
    n: int
    length: float = 1.0

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise PreconditionError(f"dim must be 2 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 4:
            raise PreconditionError(f"n must be an integer >= 4, got {self.n}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise PreconditionError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        """Measure of the domain, ``length**dim``."""
        return self.length**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis(self) -> np.ndarray:
        """Collocation points ``i*h`` along one axis."""
        return np.arange(self.n) * self.h

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape :attr:`shape`, one per axis."""
        x = self.axis()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def check(self, f: np.ndarray) -> np.ndarray:
        """Return ``f`` as a float array, verifying it lives on this grid."""
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise GridMismatchError(f"field shape {f.shape} does not match grid shape {self.shape}")
        return f
