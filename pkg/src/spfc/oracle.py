"""Dense-matrix reference implementations for tiny grids.

Every operator here is assembled by literal summation over Fourier modes,
``M = E^H diag(symbol) E / n**dim`` with ``E[q, p] = exp(-i k_q . x_p)``, and
the per-step scheme is solved as one dense linear system in the
``n**dim + 1`` unknowns ``(phi', r')``. Nothing in this module goes through
an FFT, so it is an independent check on :mod:`spfc.spectral` and
:mod:`spfc.stepper`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionError, SolverError
from .grid import Grid
from .stepper import SavState

MAX_N = 12
MAX_SIZE = MAX_N**2

KINDS = ("grad_x", "grad_y", "grad_z", "laplacian", "biharmonic", "LN", "AN")


@dataclass(frozen=True)
class DenseOperator:
    kind: str
    grid: Grid
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.grid.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(f, dtype=float).ravel()).reshape(self.grid.shape)


def _guard(grid: Grid) -> None:
    if grid.n > MAX_N or grid.size > MAX_SIZE:
        raise PreconditionError(
            f"dense oracle limited to n <= {MAX_N} and n**dim <= {MAX_SIZE}; got n={grid.n}, dim={grid.dim}"
        )


def mode_list(n: int) -> list[int]:
    """Signed modes ``-K..K`` (odd n) or ``-n/2..n/2-1`` (even n), ascending."""
    return list(range(-(n // 2), n - n // 2))


@lru_cache(maxsize=16)
def _basis(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """(modes, E) with ``modes`` of shape (M, dim) and E[q, p] = exp(-i k_q . x_p)."""
    _guard(grid)
    modes_1d = mode_list(grid.n)
    modes = np.array(np.meshgrid(*([modes_1d] * grid.dim), indexing="ij")).reshape(grid.dim, -1).T
    pts = np.array(grid.coords()).reshape(grid.dim, -1).T
    k = modes * (2.0 * np.pi / grid.length)
    E = np.exp(-1j * (k @ pts.T))
    return modes, E


def _symbol(kind: str, grid: Grid, modes: np.ndarray, a: float | None, dt: float | None, stabilization: float) -> np.ndarray:
    n = grid.n
    k = modes * (2.0 * np.pi / grid.length)
    lam = np.sum(k**2, axis=1)
    if kind.startswith("grad_"):
        axis = "xyz".index(kind[-1])
        if axis >= grid.dim:
            raise PreconditionError(f"{kind} needs a grid of dimension > {axis}")
        kd = k[:, axis].copy()
        if n % 2 == 0:
            kd[modes[:, axis] == -(n // 2)] = 0.0
        return 1j * kd
    if kind == "laplacian":
        return -lam
    if kind == "biharmonic":
        return lam**2
    if a is None:
        raise PreconditionError(f"{kind} needs the model coefficient a")
    if kind == "LN":
        return a + lam**2
    if kind == "AN":
        if dt is None:
            raise PreconditionError("AN needs dt")
        return 1.5 + dt * lam * (a + lam**2) + stabilization * dt**2 * lam**2
    raise PreconditionError(f"unknown operator kind {kind!r}; expected one of {KINDS}")


def dense_operator(
    kind: str,
    grid: Grid,
    a: float | None = None,
    dt: float | None = None,
    stabilization: float = 0.0,
) -> DenseOperator:
    """Dense matrix of a collocation operator, built by explicit DFT sums."""
    modes, E = _basis(grid)
    sym = _symbol(kind, grid, modes, a, dt, stabilization)
    M = (E.conj().T * sym) @ E / grid.size
    imag = np.abs(M.imag).max()
    if imag > 1e-12 * max(1.0, np.abs(M.real).max()):
        raise SolverError(f"{kind} matrix is not real (|imag| = {imag:.2e})")
    return DenseOperator(kind, grid, np.ascontiguousarray(M.real))


def dense_inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    return grid.cell_volume * float(np.dot(np.ravel(f), np.ravel(g)))


def dense_nonlinear_mu(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """``-div(|grad phi|^2 grad phi) + 2 Delta phi`` from dense matrices."""
    D = [dense_operator(f"grad_{c}", grid).matrix for c in "xyz"[: grid.dim]]
    lap = dense_operator("laplacian", grid).matrix
    v = np.ravel(phi)
    g = [Dj @ v for Dj in D]
    s = sum(gj**2 for gj in g)
    div = sum(Dj @ (s * gj) for Dj, gj in zip(D, g))
    return (-div + 2.0 * lap @ v).reshape(grid.shape)


def dense_energy_e1(grid: Grid, phi: np.ndarray) -> float:
    """``1/4 ||grad phi||_4^4 - ||grad phi||_2^2 + 2|Omega|`` from dense matrices."""
    D = [dense_operator(f"grad_{c}", grid).matrix for c in "xyz"[: grid.dim]]
    v = np.ravel(phi)
    s = sum((Dj @ v) ** 2 for Dj in D)
    w = grid.cell_volume
    return 0.25 * w * float(np.sum(s**2)) - w * float(np.sum(s)) + 2.0 * grid.volume


def dense_step_system(state: SavState, forcing: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Coupled (phi', r') system ``M z = b`` of one scheme step."""
    params = state.params
    grid = params.grid
    _guard(grid)
    a, A, dt = params.a, params.stabilization, state.dt
    N = grid.size
    w = grid.cell_volume

    lap = dense_operator("laplacian", grid).matrix
    bih = dense_operator("biharmonic", grid).matrix
    LN = a * np.eye(N) + bih

    phi_n = np.ravel(state.phi_curr)
    phi_m = np.ravel(state.phi_prev)
    p = 2.0 * phi_n - phi_m
    Np = np.ravel(dense_nonlinear_mu(grid, p.reshape(grid.shape)))
    s = 1.0 / np.sqrt(dense_energy_e1(grid, p.reshape(grid.shape)))

    M = np.zeros((N + 1, N + 1))
    b = np.zeros(N + 1)
    # 3/2 phi' - dt Lap (LN phi' + r' s N) [+ A dt^2 Lap^2 phi'] = 2 phi - phi_/2 [+ dt f + A dt^2 Lap^2 phi]
    M[:N, :N] = 1.5 * np.eye(N) - dt * lap @ LN + A * dt**2 * lap @ lap
    M[:N, N] = -dt * s * (lap @ Np)
    b[:N] = 2.0 * phi_n - 0.5 * phi_m + A * dt**2 * (lap @ (lap @ phi_n))
    if forcing is not None:
        b[:N] += dt * np.ravel(forcing)
    # 3/2 r' - s/2 <N, 3/2 phi'> = 2 r - r_/2 + s/2 <N, -2 phi + phi_/2>
    M[N, :N] = -0.75 * s * w * Np
    M[N, N] = 1.5
    b[N] = 2.0 * state.r_curr - 0.5 * state.r_prev + 0.5 * s * w * float(Np @ (-2.0 * phi_n + 0.5 * phi_m))
    return M, b


def dense_step(state: SavState, forcing: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Reference ``(phi', r')`` from a direct dense solve."""
    M, b = dense_step_system(state, forcing)
    try:
        z = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - c >= 1 rules this out
        raise SolverError("dense step system is singular") from exc
    return z[:-1].reshape(state.params.grid.shape), float(z[-1])
