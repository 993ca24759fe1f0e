"""Square phase field crystal energies and chemical potentials.

The discrete energy is split as ``E_N = E_1N - 2|Omega| + 1/2 <phi, L_N phi>``
with the nonlinear part

    E_1N(phi) = 1/4 ||grad phi||_4^4 - ||grad phi||_2^2 + 2|Omega|

where ``|grad phi|`` is the point-wise Euclidean norm of the collocation
gradient. Nonlinear products are formed point-wise in physical space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SolverError
from .grid import Grid
from .spectral import SpectralOps, ops_for


@dataclass(frozen=True)
class ModelParams:
    """Model coefficient ``a = 1 - epsilon`` and optional stabilization ``A``."""

    grid: Grid
    a: float
    stabilization: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.a <= 1.0):
            raise PreconditionError(f"a must lie in (0, 1], got {self.a}")
        if not self.stabilization >= 0.0:
            raise PreconditionError(f"stabilization must be >= 0, got {self.stabilization}")

    @property
    def ops(self) -> SpectralOps:
        return ops_for(self.grid)


def e1_from_grad_sq(ops: SpectralOps, grad_sq: np.ndarray) -> float:
    """``E_1N`` from the point-wise squared gradient magnitude.

    Uses ``s**2/4 - s + 2 = (s - 2)**2/4 + 1`` so the lower bound ``|Omega|``
    survives rounding. Non-finite input yields a non-finite result.
    """
    grid = ops.grid
    val = grid.cell_volume * float(np.sum(0.25 * (grad_sq - 2.0) ** 2)) + grid.volume
    if np.isfinite(val) and not val >= grid.volume:
        raise SolverError(f"E_1N = {val!r} fell below |Omega| = {grid.volume!r}")
    return val


def nonlinear_mu(ops: SpectralOps, phi: np.ndarray) -> np.ndarray:
    """``N_N(phi) = -div(|grad phi|^2 grad phi) + 2 Delta phi``."""
    g = ops.grad(phi)
    s = np.sum(g**2, axis=0)
    return -ops.div(s * g) + 2.0 * ops.laplacian(phi)


def energy_e1(ops: SpectralOps, phi: np.ndarray) -> float:
    g = ops.grad(phi)
    return e1_from_grad_sq(ops, np.sum(g**2, axis=0))


def energy_total(ops: SpectralOps, phi: np.ndarray, a: float) -> float:
    """Discrete SPFC energy ``E_N(phi)``."""
    w = ops.grid.cell_volume
    g = ops.grad(phi)
    s = np.sum(g**2, axis=0)
    lap = ops.laplacian(phi)
    return (
        0.25 * w * float(np.sum(s**2))
        + 0.5 * a * ops.inner(phi, phi)
        - w * float(np.sum(s))
        + 0.5 * ops.inner(lap, lap)
    )


def energy_modified(
    ops: SpectralOps,
    phi_new: np.ndarray,
    phi_old: np.ndarray,
    r_new: float,
    r_old: float,
    a: float,
) -> float:
    """BDF2-SAV modified energy of two consecutive levels."""
    s1 = ops.apply_LN_sqrt(phi_new, a)
    s2 = ops.apply_LN_sqrt(2.0 * phi_new - phi_old, a)
    return 0.25 * (ops.inner(s1, s1) + ops.inner(s2, s2)) + 0.5 * (
        r_new**2 + (2.0 * r_new - r_old) ** 2
    )


def energy_sav(ops: SpectralOps, phi: np.ndarray, r: float, a: float) -> float:
    """``a/2 ||phi||^2 + 1/2 ||Delta phi||^2 + r^2``."""
    lap = ops.laplacian(phi)
    return 0.5 * a * ops.inner(phi, phi) + 0.5 * ops.inner(lap, lap) + r**2


def full_mu(ops: SpectralOps, phi: np.ndarray, a: float) -> np.ndarray:
    """Full chemical potential ``N_N(phi) + L_N phi``."""
    return nonlinear_mu(ops, phi) + ops.apply_LN(phi, a)
