"""Explicit drift-diffusion scheme: the limit of the kinetic solver as the
Knudsen number vanishes, the parareal coarse propagator, and the fluid-cell
update of the hybrid stepper.

Update:  rho_i^{n+1} = rho_i^n + m2 * (dt/dx) * (J_{i+1/2} - J_{i-1/2})
with the interface flux J_{i+1/2} = (rho_{i+1} - rho_i)/dx
- E_{i+1/2} * (rho_i + rho_{i+1})/2.  The field is explicit in time: it is
recomputed from the density before each flux evaluation, and again after the
update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StabilityViolation
from .mesh import MacroState, PhaseMesh
from .poisson import solve_field

#: default safety factor against the explicit parabolic bound dx^2 / (2 m2)
CFL_SAFETY = 0.9

_BOUND_SLACK = 1.0 + 1e-12  # tolerate round-off from substep clipping


@dataclass(frozen=True)
class FluidStepParams:
    """Time step and the discrete second moment it must respect."""

    dt: float
    m2: float

    @classmethod
    def default(cls, mesh: PhaseMesh, cfl_safety: float = CFL_SAFETY) -> "FluidStepParams":
        m2 = mesh.vgrid.m2
        return cls(dt=cfl_safety * mesh.dx**2 / (2.0 * m2), m2=m2)

    def check(self, dt: float, mesh: PhaseMesh) -> None:
        bound = mesh.dx**2 / (2.0 * self.m2)
        if dt > bound * _BOUND_SLACK:
            raise StabilityViolation(
                f"dt={dt:.6e} exceeds parabolic bound dx^2/(2 m2)={bound:.6e}"
            )


def fluid_flux(rho: np.ndarray, E: np.ndarray, mesh: PhaseMesh) -> np.ndarray:
    """Interface flux J_{i+1/2} = (rho_{i+1} - rho_i)/dx - E_{i+1/2} rho_{i+1/2},
    with the interface density by arithmetic mean."""
    rho_next = mesh.roll_next(rho)
    return (rho_next - rho) / mesh.dx - E * 0.5 * (rho + rho_next)


def _rho_update(rho: np.ndarray, J: np.ndarray, m2: float, dt: float, mesh: PhaseMesh) -> np.ndarray:
    """Conservative density update shared verbatim with the hybrid stepper."""
    return rho + m2 * (dt / mesh.dx) * (J - mesh.roll_prev(J))


def fluid_step(
    state: MacroState,
    p: FluidStepParams,
    mesh: PhaseMesh,
    rho_bar: float,
    dt: float | None = None,
    refresh_field: bool = True,
    field_rtol: float | None = None,
) -> MacroState:
    """One explicit step.  The caller guarantees state.E is consistent with
    state.rho; the returned field is recomputed from the new density unless
    ``refresh_field`` is disabled (frozen-field variant used by tests)."""
    dt = p.dt if dt is None else dt
    p.check(dt, mesh)
    J = fluid_flux(state.rho, state.E, mesh)
    rho_new = _rho_update(state.rho, J, p.m2, dt, mesh)
    E_new = solve_field(rho_new, rho_bar, mesh, rtol=field_rtol) if refresh_field else state.E
    return MacroState(rho=rho_new, E=E_new, t=state.t + dt)


def substep_sizes(t0: float, t_end: float, dt: float):
    """Deterministic substep schedule: full steps of ``dt`` with the last one
    clipped to land exactly on ``t_end``.  Returns (n_full, remainder)."""
    span = t_end - t0
    if span < 0.0:
        raise ValueError(f"t_end={t_end} earlier than state time {t0}")
    if span == 0.0:
        return 0, 0.0
    n_full = int(np.floor(span / dt + 1e-12))
    rem = span - n_full * dt
    if rem <= 1e-12 * max(span, dt):
        rem = 0.0
    return n_full, rem


def fluid_propagate(
    state: MacroState,
    t_end: float,
    p: FluidStepParams,
    mesh: PhaseMesh,
    rho_bar: float,
    field_rtol: float | None = None,
) -> MacroState:
    """Advance to exactly ``t_end`` by repeated steps (last substep clipped).

    The field is refreshed from the density on entry so corrected densities
    can be handed in without a matching field.
    """
    n_full, rem = substep_sizes(state.t, t_end, p.dt)
    if n_full == 0 and rem == 0.0:
        return MacroState(rho=state.rho, E=state.E, t=t_end)
    cur = MacroState(rho=state.rho,
                     E=solve_field(state.rho, rho_bar, mesh, rtol=field_rtol),
                     t=state.t)
    for _ in range(n_full):
        cur = fluid_step(cur, p, mesh, rho_bar, field_rtol=field_rtol)
    if rem > 0.0:
        cur = fluid_step(cur, p, mesh, rho_bar, dt=rem, field_rtol=field_rtol)
    return MacroState(rho=cur.rho, E=cur.E, t=t_end)
