"""SAV-BDF2 Fourier pseudo-spectral solver for the square phase field crystal equation."""

from .energy import (
    ModelParams,
    energy_e1,
    energy_modified,
    energy_sav,
    energy_total,
    full_mu,
    nonlinear_mu,
)
from .errors import (
    BlowUpError,
    ConfigError,
    GridMismatchError,
    PreconditionError,
    SolverError,
    SPFCError,
)
from .grid import Grid
from .spectral import SpectralOps, ops_for
from .stepper import (
    SavState,
    StepDiagnostics,
    cold_start,
    diagnose,
    init_state,
    restart_with_dt,
    run,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "ConfigError",
    "Grid",
    "GridMismatchError",
    "ModelParams",
    "PreconditionError",
    "SPFCError",
    "SavState",
    "SolverError",
    "SpectralOps",
    "StepDiagnostics",
    "cold_start",
    "diagnose",
    "energy_e1",
    "energy_modified",
    "energy_sav",
    "energy_total",
    "full_mu",
    "init_state",
    "nonlinear_mu",
    "ops_for",
    "restart_with_dt",
    "run",
    "step",
]
