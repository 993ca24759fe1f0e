"""Experiment drivers: convergence study, pattern simulation and their config."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .energy import ModelParams, full_mu
from .errors import ConfigError, PreconditionError
from .grid import Grid
from .io import TraceWriter, write_snapshot
from .stepper import (
    SavState,
    StepDiagnostics,
    cold_start,
    diagnose,
    init_state,
    restart_with_dt,
    run,
)

log = logging.getLogger(__name__)

MODES = ("converge", "simulate", "verify")

# Snapshot times of the long pattern run.
PATTERN_SNAPSHOT_TIMES = (10, 20, 40, 80, 100, 200, 500, 1000, 3000, 9000, 15000, 21000)

ENERGY_RTOL = 1e-10
MASS_ATOL = 1e-11


@dataclass
class RunConfig:
    """Flat run configuration; JSON keys and CLI flags use the same names.

    ``dt_schedule`` is a list of ``(t_end, dt)`` segments. For ``converge``
    the temporal resolutions are ``nt_values`` with ``dt = final_time / N_T``.
    """

    mode: str = "simulate"
    dim: int = 2
    n: int = 256
    length: float = 100.0
    a: float = 0.5
    stabilization: float = 0.0
    dt_schedule: list[tuple[float, float]] = field(
        default_factory=lambda: [(1000.0, 0.01), (21000.0, 0.02)]
    )
    seed: int = 0
    snapshot_times: list[float] = field(default_factory=lambda: [float(t) for t in PATTERN_SNAPSHOT_TIMES])
    output_dir: str = "spfc-out"
    trace_cadence: int = 100
    # simulate
    init_amplitude: float = 0.05
    init_mean: float = 0.0
    nucleation: float = 0.0
    start: str = "restart"
    # converge
    nt_values: list[int] = field(default_factory=lambda: list(range(100, 1001, 100)))
    final_time: float = 1.0
    ghost_forcing: bool = True
    # verify
    verify_sizes: list[int] = field(default_factory=lambda: [4, 5, 8])
    verify_states: int = 50

    @classmethod
    def defaults(cls, mode: str) -> "RunConfig":
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "converge":
            return cls(mode=mode, n=128, length=1.0, a=0.975, dt_schedule=[], snapshot_times=[])
        if mode == "verify":
            return cls(mode=mode, n=8, length=2 * math.pi, a=0.5, dt_schedule=[(1.0, 0.1)], snapshot_times=[])
        return cls(mode=mode)

    def updated(self, values: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(self)}
        unknown = set(values) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = dataclasses.replace(self, **values)
        cfg.normalise()
        return cfg

    def normalise(self) -> None:
        try:
            self.dim = int(self.dim)
            self.n = int(self.n)
            self.length = float(self.length)
            self.a = float(self.a)
            self.stabilization = float(self.stabilization)
            self.dt_schedule = [(float(t), float(dt)) for t, dt in self.dt_schedule]
            self.seed = int(self.seed)
            self.snapshot_times = [float(t) for t in self.snapshot_times]
            self.trace_cadence = int(self.trace_cadence)
            self.nt_values = [int(v) for v in self.nt_values]
            self.verify_sizes = [int(v) for v in self.verify_sizes]
            self.verify_states = int(self.verify_states)
            self.final_time = float(self.final_time)
            self.output_dir = str(self.output_dir)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trace_cadence < 1:
            raise ConfigError("trace_cadence must be >= 1")
        if self.start not in ("restart", "ghost"):
            raise ConfigError("start must be 'restart' or 'ghost'")
        prev = 0.0
        for t_end, dt in self.dt_schedule:
            if not t_end > prev:
                raise ConfigError("dt_schedule end times must be strictly increasing and positive")
            if not dt > 0:
                raise ConfigError("dt_schedule step sizes must be positive")
            prev = t_end
        if self.mode == "simulate":
            if not self.dt_schedule:
                raise ConfigError("simulate needs a non-empty dt_schedule")
            span = self.dt_schedule[-1][0]
            for t in self.snapshot_times:
                if not 0.0 <= t <= span:
                    raise ConfigError(f"snapshot time {t} outside [0, {span}]")
        if self.mode == "converge" and (not self.nt_values or min(self.nt_values) < 1):
            raise ConfigError("converge needs positive nt_values")
        try:
            self.grid()
            self.params()
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> Grid:
        return Grid(self.dim, self.n, self.length)

    def params(self) -> ModelParams:
        return ModelParams(self.grid(), self.a, self.stabilization)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def load_config(path: str | os.PathLike | None, mode: str, overrides: Mapping[str, Any] = ()) -> RunConfig:
    """Defaults for ``mode``, then the JSON file, then ``overrides``."""
    cfg = RunConfig.defaults(mode)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
        if data.get("mode", mode) != mode:
            raise ConfigError(f"config mode {data['mode']!r} does not match command {mode!r}")
        cfg = cfg.updated({k: v for k, v in data.items() if k != "mode"})
    cfg = cfg.updated(dict(overrides))
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------
# manufactured solution  phi_e = sin(2 pi x) cos(2 pi y) cos(t) / (2 pi)


def _check_unit_square(grid: Grid) -> None:
    if grid.dim != 2 or grid.length != 1.0:
        raise PreconditionError("the manufactured solution is defined on the unit square (dim=2, length=1)")


def _manufactured_profile(grid: Grid) -> np.ndarray:
    x, y = grid.coords()
    return np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) / (2 * np.pi)


def manufactured_solution(t: float, grid: Grid) -> np.ndarray:
    _check_unit_square(grid)
    return _manufactured_profile(grid) * math.cos(t)


def manufactured_forcing(t: float, grid: Grid, params: ModelParams) -> np.ndarray:
    """``d/dt phi_e - Delta_N mu_N(phi_e)`` with discrete spatial operators."""
    _check_unit_square(grid)
    ops = params.ops
    phi = manufactured_solution(t, grid)
    f = -_manufactured_profile(grid) * math.sin(t) - ops.laplacian(full_mu(ops, phi, params.a))
    if abs(ops.mean(f)) > 1e-13 * max(1.0, ops.norm_linf(f)):
        raise PreconditionError("manufactured forcing lost its zero mean")
    return f


@dataclass(frozen=True)
class ConvergenceRow:
    n_t: int
    dt: float
    err_l2: float
    err_linf: float
    max_lhs_coefficient: float
    min_lhs_coefficient: float
    min_e_e1: float


@dataclass(frozen=True)
class ConvergenceResult:
    rows: list[ConvergenceRow]
    slope_l2: float
    slope_linf: float
    seconds: float = 0.0

    def ratios(self, norm: str = "l2") -> list[float]:
        """``err(N_T) / err(next N_T)`` for consecutive rows."""
        errs = [getattr(r, f"err_{norm}") for r in self.rows]
        return [a / b for a, b in zip(errs, errs[1:])]


def fitted_slope(n_t: list[int], errs: list[float]) -> float:
    """Least-squares slope of ``log err`` against ``log N_T``."""
    if len(n_t) < 2:
        return float("nan")
    return float(np.polyfit(np.log(n_t), np.log(errs), 1)[0])


def convergence_run(config: RunConfig, n_t: int) -> ConvergenceRow:
    """Integrate the forced problem to ``final_time`` with ``n_t`` steps."""
    grid = config.grid()
    params = config.params()
    ops = params.ops
    T = config.final_time
    dt = T / n_t
    phi0 = manufactured_solution(0.0, grid)
    f0 = manufactured_forcing(0.0, grid, params) if config.ghost_forcing else None
    state = init_state(phi0, dt, params, forcing0=f0)
    coeffs = []
    e1s = []

    def watch(_step: int, _t: float, d: StepDiagnostics) -> None:
        coeffs.append(d.lhs_coefficient)
        e1s.append(d.e_e1)

    state, _ = run(
        state,
        [(T, dt)],
        observers=[watch],
        forcing=lambda t: manufactured_forcing(t, grid, params),
        collect=False,
    )
    err = state.phi_curr - manufactured_solution(T, grid)
    return ConvergenceRow(
        n_t=n_t,
        dt=dt,
        err_l2=ops.norm_l2(err),
        err_linf=ops.norm_linf(err),
        max_lhs_coefficient=max(coeffs),
        min_lhs_coefficient=min(coeffs),
        min_e_e1=min(e1s),
    )


def run_convergence(config: RunConfig, write: bool = True) -> ConvergenceResult:
    t0 = time.perf_counter()
    rows = []
    for n_t in sorted(config.nt_values):
        row = convergence_run(config, n_t)
        log.info("N_T=%d err_l2=%.3e err_linf=%.3e", n_t, row.err_l2, row.err_linf)
        rows.append(row)
    nts = [r.n_t for r in rows]
    result = ConvergenceResult(
        rows=rows,
        slope_l2=fitted_slope(nts, [r.err_l2 for r in rows]),
        slope_linf=fitted_slope(nts, [r.err_linf for r in rows]),
        seconds=time.perf_counter() - t0,
    )
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", encoding="utf-8") as fh:
            fh.write("n_t,dt,err_l2,err_linf\n")
            for r in rows:
                fh.write(f"{r.n_t},{r.dt:.17g},{r.err_l2:.17g},{r.err_linf:.17g}\n")
    return result


# ----------------------------------------------------------------------
# pattern simulation


def initial_field(config: RunConfig) -> np.ndarray:
    """``mean + amplitude * (2u - 1)`` with ``u`` uniform on [0, 1) from PCG64(seed).

    A nonzero ``nucleation`` is added at the grid point nearest the centre.
    """
    grid = config.grid()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    u = rng.random(grid.shape)
    phi = config.init_mean + config.init_amplitude * (2.0 * u - 1.0)
    if config.nucleation:
        phi[(grid.n // 2,) * grid.dim] += config.nucleation
    return phi


@dataclass
class SimulationResult:
    state: SavState
    initial: np.ndarray
    snapshots: list[Path]
    trace_path: Path
    steps: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


class InvariantMonitor:
    """Per-step checks of the scheme's guaranteed properties."""

    def __init__(self, volume: float, mass0: float, max_failures: int = 20) -> None:
        self.volume = volume
        self.mass0 = mass0
        self.e_ref: float | None = None
        self.failures: list[str] = []
        self.max_failures = max_failures

    def reset(self, e_modified: float) -> None:
        self.e_ref = e_modified

    def _fail(self, msg: str) -> None:
        if len(self.failures) < self.max_failures:
            self.failures.append(msg)

    def __call__(self, step: int, t: float, d: StepDiagnostics) -> None:
        if self.e_ref is not None and d.e_modified > self.e_ref + ENERGY_RTOL * abs(self.e_ref):
            self._fail(f"step {step}: modified energy rose {self.e_ref!r} -> {d.e_modified!r}")
        self.e_ref = d.e_modified
        if not d.lhs_coefficient >= 1.0:
            self._fail(f"step {step}: scalar coefficient {d.lhs_coefficient!r} < 1")
        if not d.e_e1 >= self.volume:
            self._fail(f"step {step}: E_1N {d.e_e1!r} below |Omega|")
        if abs(d.mass - self.mass0) > MASS_ATOL:
            self._fail(f"step {step}: mass drift {d.mass - self.mass0:.3e}")


def run_simulation(config: RunConfig, phi0: np.ndarray | None = None) -> SimulationResult:
    """Pattern-formation run writing snapshots and ``trace.csv`` to ``output_dir``.

    Each schedule segment starts from ``phi_prev = phi_curr`` (or from the
    ghost level for the first segment when ``start == "ghost"``). A snapshot
    requested at time ``t`` is taken at the first step whose time is ``>= t``.
    """
    config.validate()
    grid = config.grid()
    params = config.params()
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc

    if phi0 is None:
        phi0 = initial_field(config)
    phi0 = grid.check(phi0)
    dt0 = config.dt_schedule[0][1]
    state = init_state(phi0, dt0, params) if config.start == "ghost" else cold_start(phi0, dt0, params)

    pending = sorted(config.snapshot_times)
    snapshots: list[Path] = []

    def take_snapshots(s: SavState) -> None:
        while pending and s.time >= pending[0] - 1e-9 * s.dt:
            pending.pop(0)
            path = out / f"snapshot_{len(snapshots):03d}_step{s.step_index:08d}.spfc"
            try:
                snapshots.append(write_snapshot(path, grid, s.phi_curr, s.time))
            except OSError as exc:
                raise ConfigError(f"cannot write snapshot {path}: {exc}") from exc

    trace_path = out / "trace.csv"
    d0 = diagnose(state)
    monitor = InvariantMonitor(grid.volume, d0.mass)
    try:
        writer = TraceWriter(trace_path)
    except OSError as exc:
        raise ConfigError(f"cannot write trace {trace_path}: {exc}") from exc

    with writer:
        writer.write(d0)
        take_snapshots(state)
        cadence = config.trace_cadence

        def record(step: int, _t: float, d: StepDiagnostics) -> None:
            if step % cadence == 0:
                writer.write(d)

        for i, (t_end, dt) in enumerate(config.dt_schedule):
            if i > 0:
                state = restart_with_dt(state, dt)
            monitor.reset(diagnose(state).e_modified)
            state, _ = run(
                state,
                [(t_end, dt)],
                observers=[monitor, record],
                cadence=1,
                on_state=take_snapshots,
                collect=False,
            )
    return SimulationResult(
        state=state,
        initial=phi0,
        snapshots=snapshots,
        trace_path=trace_path,
        steps=state.step_index,
        failures=monitor.failures,
    )
