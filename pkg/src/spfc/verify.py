"""Self-check: FFT operators and steps against the dense oracle, plus invariants."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .energy import ModelParams, energy_e1, nonlinear_mu
from .grid import Grid
from .oracle import dense_nonlinear_mu, dense_operator, dense_step, dense_step_system
from .spectral import SpectralOps
from .stepper import SavState, diagnose, step

OPERATOR_TOL = 1e-12
STEP_TOL = 1e-10
CONSTANT_TOL = 1e-13
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<40s} residual={self.residual:.3e}  tol={self.tol:.1e}"


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def _fft_apply(ops: SpectralOps, kind: str, f: np.ndarray, a: float, dt: float) -> np.ndarray:
    if kind.startswith("grad_"):
        return ops.grad(f)["xyz".index(kind[-1])]
    if kind == "laplacian":
        return ops.laplacian(f)
    if kind == "biharmonic":
        return ops.biharmonic(f)
    if kind == "LN":
        return ops.apply_LN(f, a)
    return ops.apply_AN(f, a, dt)


def random_state(params: ModelParams, dt: float, rng: np.random.Generator, amplitude: float = 0.3) -> SavState:
    """Random two-level state with equal means and ``r`` near ``sqrt(E_1N)``."""
    grid = params.grid
    ops = params.ops
    phi = amplitude * rng.standard_normal(grid.shape) + rng.uniform(-0.5, 0.5)
    dphi = 0.1 * amplitude * rng.standard_normal(grid.shape)
    phi_prev = phi + dphi - dphi.mean()
    r = math.sqrt(energy_e1(ops, phi)) * (1.0 + 0.01 * rng.standard_normal())
    r_prev = math.sqrt(energy_e1(ops, phi_prev))
    return SavState(phi, phi_prev, r, r_prev, 0.0, 0, dt, params)


def _operator_checks(
    grid: Grid, ops: SpectralOps, rng: np.random.Generator, a: float, dt: float, samples: int
) -> Iterable[Check]:
    kinds = ["grad_x", "grad_y", "laplacian", "biharmonic", "LN", "AN"]
    for kind in kinds:
        D = dense_operator(kind, grid, a=a, dt=dt)
        worst = 0.0
        for _ in range(samples):
            f = rng.standard_normal(grid.shape)
            worst = max(worst, _rel(_fft_apply(ops, kind, f, a, dt), D.apply(f)))
        yield Check(f"n={grid.n} {kind}: fft vs dense", worst, OPERATOR_TOL)
    lap = dense_operator("laplacian", grid).matrix
    gx = dense_operator("grad_x", grid).matrix
    yield Check(f"n={grid.n} laplacian: constant -> 0", float(np.abs(lap @ np.ones(grid.size)).max()), CONSTANT_TOL)
    yield Check(f"n={grid.n} laplacian: symmetric", float(np.abs(lap - lap.T).max()) / np.abs(lap).max(), OPERATOR_TOL)
    yield Check(f"n={grid.n} grad_x: antisymmetric", float(np.abs(gx + gx.T).max()) / np.abs(gx).max(), OPERATOR_TOL)


def _step_checks(params: ModelParams, rng: np.random.Generator, dt: float, states: int) -> Iterable[Check]:
    grid = params.grid
    ops = params.ops
    n = grid.n
    phi_err = r_err = resid = mu_err = mass = 0.0
    coeff_gap = e1_gap = energy_rise = 0.0
    for _ in range(states):
        st = random_state(params, dt, rng)
        new, diag = step(st)
        phi_ref, r_ref = dense_step(st)
        phi_err = max(phi_err, _rel(new.phi_curr, phi_ref))
        r_err = max(r_err, abs(new.r_curr - r_ref) / abs(r_ref))

        M, b = dense_step_system(st)
        z = np.append(np.ravel(new.phi_curr), new.r_curr)
        resid = max(resid, float(np.abs(M @ z - b).max()) / (np.abs(M).max() * np.abs(z).max() + np.abs(b).max()))

        mu_err = max(mu_err, _rel(nonlinear_mu(ops, st.phi_curr), dense_nonlinear_mu(grid, st.phi_curr)))
        mass = max(mass, abs(diag.mass - ops.mean(st.phi_curr)))
        coeff_gap = max(coeff_gap, 1.0 - diag.lhs_coefficient)
        e1_gap = max(e1_gap, grid.volume - diag.e_e1)
        e0 = diagnose(st).e_modified
        energy_rise = max(energy_rise, (diag.e_modified - e0) / abs(e0))
    yield Check(f"n={n} step phi: fft vs dense", phi_err, STEP_TOL)
    yield Check(f"n={n} step r: fft vs dense", r_err, STEP_TOL)
    yield Check(f"n={n} step: dense residual", resid, RESIDUAL_TOL)
    yield Check(f"n={n} nonlinear mu: fft vs dense", mu_err, OPERATOR_TOL)
    yield Check(f"n={n} mass drift", mass, 1e-11)
    yield Check(f"n={n} scalar coefficient >= 1", max(coeff_gap, 0.0), 0.0)
    yield Check(f"n={n} E_1N >= |Omega|", max(e1_gap, 0.0), 0.0)
    yield Check(f"n={n} modified energy non-increasing", max(energy_rise, 0.0), 1e-10)


def run_verify(
    sizes: Iterable[int] = (4, 5, 8),
    seed: int = 0,
    states: int = 50,
    length: float = 2 * math.pi,
    a: float = 0.5,
    dt: float = 0.1,
    ops_factory: Callable[[Grid], SpectralOps] = SpectralOps,
) -> VerifyReport:
    """Run all checks on 2D grids of the given sizes.

    ``ops_factory`` supplies the FFT operators used in the operator checks,
    which lets a test substitute a deliberately broken implementation.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    for n in sizes:
        grid = Grid(2, int(n), length)
        report.checks.extend(_operator_checks(grid, ops_factory(grid), rng, a, dt, samples=5))
        report.checks.extend(_step_checks(ModelParams(grid, a), rng, dt, states))
    report.seconds = time.perf_counter() - t0
    return report
