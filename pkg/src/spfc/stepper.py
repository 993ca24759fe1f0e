"""BDF2 scalar-auxiliary-variable time integrator.

One step solves the linear system

    (3/2 phi' - 2 phi + 1/2 phi_) / dt = Delta_N (r'/sqrt(E1(p)) N_N(p) + L_N phi') + f
    (3/2 r'   - 2 r   + 1/2 r_  ) / dt = <N_N(p), (3/2 phi' - 2 phi + 1/2 phi_)/dt> / (2 sqrt(E1(p)))

for ``(phi', r')`` with the extrapolation ``p = 2 phi - phi_``. The coupling
is rank one, so it reduces to two diagonal Fourier solves and one scalar
equation whose coefficient is always ``>= 1``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .energy import ModelParams, e1_from_grad_sq, energy_e1, full_mu
from .errors import BlowUpError, PreconditionError, SolverError

MASS_ATOL = 1e-11

Forcing = Callable[[float], np.ndarray]
Observer = Callable[[int, float, "StepDiagnostics"], None]


@dataclass(frozen=True)
class SavState:
    phi_curr: np.ndarray
    phi_prev: np.ndarray
    r_curr: float
    r_prev: float
    time: float
    step_index: int
    dt: float
    params: ModelParams


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step record.

    ``lhs_coefficient`` is the scalar multiplying ``<N, phi'>`` in the
    reduced equation; ``dissipation`` is ``dt ||grad_N mu'||^2``. The residual
    fields are relative back-substitution residuals of the two scheme
    equations. For a freshly initialised state the step-only fields are NaN.
    """

    step: int
    time: float
    mass: float
    e_total: float
    e_e1: float
    e_modified: float
    e_sav: float
    r: float
    r_drift: float
    h1_norm: float
    h2_norm: float
    grad_lap_norm: float
    lhs_coefficient: float = float("nan")
    lhs: float = float("nan")
    dissipation: float = float("nan")
    residual_phi: float = float("nan")
    residual_r: float = float("nan")


def init_state(
    phi0: np.ndarray,
    dt: float,
    params: ModelParams,
    forcing0: np.ndarray | None = None,
    time: float = 0.0,
) -> SavState:
    """Start the two-step scheme from one field via the ghost level.

    ``phi_prev = phi0 - dt (Delta_N mu0 + forcing0)``; pass ``forcing0`` (the
    forcing at ``time``) for forced problems so the ghost stays second-order
    accurate.
    """
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    ops = params.ops
    phi0 = np.array(ops.grid.check(phi0))
    rate = ops.laplacian(full_mu(ops, phi0, params.a))
    if forcing0 is not None:
        rate = rate + _check_forcing(ops, forcing0)
    ghost = phi0 - dt * rate
    return SavState(
        phi_curr=phi0,
        phi_prev=ghost,
        r_curr=float(np.sqrt(energy_e1(ops, phi0))),
        r_prev=float(np.sqrt(energy_e1(ops, ghost))),
        time=float(time),
        step_index=0,
        dt=float(dt),
        params=params,
    )


def cold_start(phi0: np.ndarray, dt: float, params: ModelParams, time: float = 0.0) -> SavState:
    """Start with ``phi_prev = phi0`` and ``r_prev = r_curr = sqrt(E_1N(phi0))``.

    Unlike the ghost level of :func:`init_state` this does not extrapolate
    the stiff modes of rough (e.g. random) initial data.
    """
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    ops = params.ops
    phi0 = np.array(ops.grid.check(phi0))
    r = float(np.sqrt(energy_e1(ops, phi0)))
    return SavState(phi0, phi0, r, r, float(time), 0, float(dt), params)


def restart_with_dt(state: SavState, new_dt: float) -> SavState:
    """Restart the two-step history at ``phi_prev = phi_curr`` with a new step size."""
    if not new_dt > 0:
        raise PreconditionError(f"new_dt must be positive, got {new_dt}")
    r = float(np.sqrt(energy_e1(state.params.ops, state.phi_curr)))
    return dataclasses.replace(
        state, phi_prev=state.phi_curr, r_prev=r, r_curr=r, dt=float(new_dt)
    )


def _check_forcing(ops, forcing: np.ndarray) -> np.ndarray:
    forcing = ops.grid.check(forcing)
    if abs(ops.mean(forcing)) > 1e-10 * max(ops.norm_l2(forcing), 1.0):
        raise PreconditionError("forcing must have zero mean to conserve mass")
    return forcing


def step(
    state: SavState, forcing: np.ndarray | None = None
) -> tuple[SavState, StepDiagnostics]:
    """Advance one step; ``forcing`` is sampled at the new time level."""
    params = state.params
    ops = params.ops
    a, A, dt = params.a, params.stabilization, state.dt
    n_next = state.step_index + 1
    t_next = state.time + dt

    phi_n, phi_m = state.phi_curr, state.phi_prev
    r_n, r_m = state.r_curr, state.r_prev
    if abs(ops.mean(phi_n) - ops.mean(phi_m)) > MASS_ATOL:
        raise PreconditionError("phi_curr and phi_prev must have equal mean")

    lam = ops.lam
    Pn = ops.fft(phi_n)
    Pm = ops.fft(phi_m)

    # explicit nonlinear term at the extrapolated level
    P_hat = 2.0 * Pn - Pm
    grads = [ops.ifft(m * P_hat) for m in ops.deriv_mask]
    sq = sum(g * g for g in grads)
    E1 = e1_from_grad_sq(ops, sq)
    if not np.isfinite(E1):
        raise BlowUpError(n_next, t_next, "E_1N of the extrapolation")
    flux = sum(m * ops.fft(sq * g) for m, g in zip(ops.deriv_mask, grads))
    NF = -flux - 2.0 * lam * P_hat
    s = 1.0 / np.sqrt(E1)

    D = ops.an_symbol(a, dt, A)
    rhs = 2.0 * Pn - 0.5 * Pm
    FF = None
    if forcing is not None:
        FF = ops.fft(_check_forcing(ops, forcing))
        rhs = rhs + dt * FF
    if A > 0:
        rhs = rhs + A * dt**2 * ops.lam2 * Pn

    W = -lam * NF / D  # A_N^{-1} Delta_N N
    inner = ops.spectral_inner
    beta = 4.0 / 3.0 * r_n - 1.0 / 3.0 * r_m + (s / 3.0) * inner(NF, -2.0 * Pn + 0.5 * Pm)
    H = rhs / D

    # every term of inner(NF, W) is <= 0, so coeff >= 1 holds exactly
    coeff = 1.0 - dt / (2.0 * E1) * inner(NF, W)
    if not coeff >= 1.0:
        raise SolverError(f"scalar coefficient {coeff!r} < 1 at step {n_next}")
    # Solve the scalar equation for r' rather than for <N, phi'>: the two are
    # equivalent, but forming phi' from <N, phi'> cancels terms of size coeff.
    r_new = (beta + 0.5 * s * inner(NF, H)) / coeff
    Phi = H + (dt * s * r_new) * W
    bdf = 1.5 * Phi - 2.0 * Pn + 0.5 * Pm
    lhs = inner(NF, Phi)

    phi_new = ops.ifft(Phi)
    if not (np.isfinite(r_new) and np.all(np.isfinite(phi_new))):
        raise BlowUpError(n_next, t_next)

    # back-substitution residuals, evaluated in Fourier space
    norm = lambda X: np.sqrt(ops.spectral_norm_sq(X))  # noqa: E731
    LN = a + ops.lam2
    mu_F = LN * Phi + (r_new * s) * NF
    terms = [bdf / dt, lam * LN * Phi, (r_new * s) * lam * NF]
    if A > 0:
        stab = A * dt * lam * (Phi - Pn)
        mu_F = mu_F + stab
        terms.append(lam * stab)
    res_F = bdf / dt + lam * mu_F
    if FF is not None:
        res_F = res_F - FF
        terms.append(FF)
    scale = sum(norm(X) for X in terms)
    residual_phi = norm(res_F) / scale if scale > 0 else 0.0
    lhs_r = (1.5 * r_new - 2.0 * r_n + 0.5 * r_m) / dt
    rhs_r = 0.5 * s * inner(NF, bdf / dt)
    r_scale = (
        abs(1.5 * r_new)
        + abs(2.0 * r_n)
        + abs(0.5 * r_m)
        + 0.5 * s * (abs(inner(NF, 1.5 * Phi)) + abs(inner(NF, 2.0 * Pn)) + abs(inner(NF, 0.5 * Pm)))
    ) / dt
    residual_r = abs(lhs_r - rhs_r) / r_scale

    new_state = SavState(
        phi_curr=phi_new,
        phi_prev=phi_n,
        r_curr=float(r_new),
        r_prev=float(r_n),
        time=t_next,
        step_index=n_next,
        dt=dt,
        params=params,
    )
    diag = _diagnose(new_state, Phi, Pn)
    diag = dataclasses.replace(
        diag,
        lhs_coefficient=float(coeff),
        lhs=float(lhs),
        dissipation=dt * inner(mu_F, lam * mu_F),
        residual_phi=float(residual_phi),
        residual_r=float(residual_r),
    )
    return new_state, diag


def _diagnose(state: SavState, Phi: np.ndarray, Pprev: np.ndarray) -> StepDiagnostics:
    """Diagnostics of ``state`` given the rfft arrays of its two levels."""
    ops = state.params.ops
    a = state.params.a
    lam = ops.lam
    w = ops.grid.cell_volume
    phi = state.phi_curr
    r, r_old = state.r_curr, state.r_prev

    grads = [ops.ifft(m * Phi) for m in ops.deriv_mask]
    sq = sum(g * g for g in grads)
    e1 = e1_from_grad_sq(ops, sq)
    l2_sq = ops.inner(phi, phi)
    grad_sq = w * float(np.sum(sq))
    lap_sq = ops.spectral_norm_sq(lam * Phi)
    e_total = 0.25 * w * float(np.sum(sq * sq)) + 0.5 * a * l2_sq - grad_sq + 0.5 * lap_sq
    LN = a + ops.lam2
    e_mod = 0.25 * (
        ops.spectral_inner(Phi, LN * Phi)
        + ops.spectral_inner(2.0 * Phi - Pprev, LN * (2.0 * Phi - Pprev))
    ) + 0.5 * (r**2 + (2.0 * r - r_old) ** 2)
    h1_sq = l2_sq + grad_sq
    return StepDiagnostics(
        step=state.step_index,
        time=state.time,
        mass=ops.mean(phi),
        e_total=e_total,
        e_e1=e1,
        e_modified=float(e_mod),
        e_sav=0.5 * a * l2_sq + 0.5 * lap_sq + r**2,
        r=r,
        r_drift=abs(r - float(np.sqrt(e1))),
        h1_norm=float(np.sqrt(h1_sq)),
        h2_norm=float(np.sqrt(h1_sq + lap_sq)),
        grad_lap_norm=float(np.sqrt(ops.spectral_norm_sq(lam**1.5 * Phi))),
    )


def diagnose(state: SavState) -> StepDiagnostics:
    """Diagnostics of a state without stepping (step-only fields are NaN)."""
    ops = state.params.ops
    return _diagnose(state, ops.fft(state.phi_curr), ops.fft(state.phi_prev))


def _segment_steps(t0: float, t_end: float, dt: float) -> int:
    span = t_end - t0
    k = int(round(span / dt))
    if k < 1 or abs(k * dt - span) > 1e-9 * max(1.0, abs(t_end)):
        raise PreconditionError(
            f"segment [{t0}, {t_end}] is not a positive multiple of dt={dt}"
        )
    return k


def run(
    state: SavState,
    schedule: Sequence[tuple[float, float]],
    observers: Iterable[Observer] = (),
    cadence: int = 1,
    forcing: Forcing | None = None,
    on_state: Callable[[SavState], None] | None = None,
    collect: bool = True,
) -> tuple[SavState, list[StepDiagnostics]]:
    """Integrate through ``schedule``, a list of ``(t_end, dt)`` segments.

    The two-step history is restarted at every segment boundary, and before
    the first segment if its ``dt`` differs from ``state.dt``. Diagnostics of
    every ``cadence``-th step (by global step index) are passed to the
    observers and, unless ``collect`` is false, returned as a list.
    ``on_state`` sees every new state.
    """
    if cadence < 1:
        raise PreconditionError("cadence must be >= 1")
    observers = list(observers)
    t_prev = state.time
    for t_end, _ in schedule:
        if not t_end > t_prev:
            raise PreconditionError("schedule end times must be strictly increasing")
        t_prev = t_end

    out: list[StepDiagnostics] = []
    for i, (t_end, dt) in enumerate(schedule):
        if i > 0 or dt != state.dt:
            state = restart_with_dt(state, dt)
        t0 = state.time
        for k in range(1, _segment_steps(t0, t_end, dt) + 1):
            t_next = t0 + k * dt
            f = forcing(t_next) if forcing is not None else None
            state, diag = step(state, f)
            # exact segment clock instead of accumulated sums
            state = dataclasses.replace(state, time=t_next)
            if state.step_index % cadence == 0:
                diag = dataclasses.replace(diag, time=t_next)
                if collect:
                    out.append(diag)
                for obs in observers:
                    obs(state.step_index, t_next, diag)
            if on_state is not None:
                on_state(state)
    return state, out
