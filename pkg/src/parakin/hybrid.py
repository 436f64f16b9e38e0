"""Spatially hybrid stepper: the kinetic micro-macro update in kinetic cells,
the drift-diffusion update in fluid cells, with labels refreshed every step.

Label bookkeeping per step (adaptation enabled): indicators are evaluated on
the state at t^n before the update; a fluid-to-kinetic interface transition
reinitializes its perturbation by the lifting operator (or zero, for
ablation), a kinetic-to-fluid transition zeroes it.  The perturbation array
is physically zeroed on fluid interfaces, so flux computations and the
perturbation-norm indicator never see stale kinetic data.

Degenerate partitions dispatch to the plain kinetic and fluid kernels, so an
all-kinetic run bit-matches the kinetic solver and an all-fluid run's density
path bit-matches the fluid solver.  The mixed-partition path gathers only the
kinetic interfaces and their neighbors, so the kinetic work scales with the
size of the kinetic region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adaptation import (
    DomainLabels,
    Thresholds,
    perturbation_indicator,
    remainder_indicator,
    update_labels,
)
from .fluid import _rho_update, fluid_flux, substep_sizes
from .kinetic import (
    KineticStepParams,
    Workspace,
    kinetic_rho_update,
    macro_step,
    micro_step,
    relaxation_coefficients,
)
from .mesh import MacroState, MicroState, PhaseMesh, bracket_staggered
from .poisson import solve_field


@dataclass(frozen=True)
class HybridOptions:
    """Adaptation toggle and its knobs, plus the lifting used on
    fluid-to-kinetic reinitialization and window restarts."""

    adaptation: bool = True
    combine: str = "or"              # label criteria combination
    scale_remainder: bool = False    # compare |eps^2 R| instead of |R|
    reinit: str = "lift"             # "lift" | "zero" on fluid->kinetic flips
    lift_order: int = 2
    time_elim: str = "leading"       # lifting time-derivative elimination


@dataclass(frozen=True)
class HybridState:
    """Macro state, interface perturbation, current labels and the previous
    field (for the dE/dt backward difference)."""

    macro: MacroState
    micro: MicroState
    labels: DomainLabels
    E_prev: np.ndarray

    @classmethod
    def initial(cls, macro: MacroState, micro: MicroState, mesh: PhaseMesh) -> "HybridState":
        """Fresh state: everything kinetic, dE/dt = 0 on the first step."""
        return cls(macro=macro, micro=micro,
                   labels=DomainLabels.all_kinetic(mesh.nx), E_prev=macro.E)


def _mixed_update(rho, g, E, labels, p, dt, mesh):
    """Micro/macro update on a genuine kinetic/fluid partition.

    Kinetic interfaces (and their neighbors, whose perturbation is exactly
    zero when fluid) are gathered into subset arrays; fluid interfaces keep
    g = 0 and fluid cells take the drift-diffusion update.
    """
    grid = mesh.vgrid
    nx = mesh.nx
    kin_if = np.flatnonzero(labels.kinetic_ifaces)
    prev_i = (kin_if - 1) % nx
    next_i = (kin_if + 1) % nx
    g_k = g[kin_if]
    g_p = g[prev_i]
    g_n = g[next_i]

    rate = (mesh.xi_plus * (g_k - g_p) + mesh.xi_minus * (g_n - g_k)) / mesh.dx

    E4 = E[kin_if][:, None, None, None]
    dm = np.empty_like(g_k)
    dm[:, 0] = g_k[:, 0]
    np.subtract(g_k[:, 1:], g_k[:, :-1], out=dm[:, 1:])
    dp = np.empty_like(g_k)
    np.subtract(g_k[:, 1:], g_k[:, :-1], out=dp[:, :-1])
    np.negative(g_k[:, -1], out=dp[:, -1])
    rate += (np.maximum(E4, 0.0) / grid.dvx) * dm
    rate += (np.minimum(E4, 0.0) / grid.dvx) * dp

    b = np.zeros(nx)
    b[kin_if] = bracket_staggered(grid.xi * g_k, grid)
    dc = (b[next_i] - b[prev_i]) / (2.0 * mesh.dx)
    rate -= grid.M * dc[:, None, None, None]

    kappa1, kappa2 = relaxation_coefficients(dt, p.eps)
    J = fluid_flux(rho, E, mesh)
    g_rows = kappa1 * g_k - kappa2 * (rate + mesh.xi_M * J[kin_if][:, None, None, None])

    g_out = np.zeros_like(g)
    g_out[kin_if] = g_rows

    flux = np.zeros(nx)
    flux[kin_if] = bracket_staggered(grid.xi * g_rows, grid)
    rho_kin = kinetic_rho_update(rho, flux, p.eps, dt, mesh)
    rho_fluid = _rho_update(rho, J, grid.m2, dt, mesh)
    rho_new = np.where(labels.kinetic_cells, rho_kin, rho_fluid)
    return rho_new, g_out


def hybrid_step(
    state: HybridState,
    p: KineticStepParams,
    th: Thresholds,
    opts: HybridOptions,
    mesh: PhaseMesh,
    rho_bar: float,
    dt: float | None = None,
    ws: Workspace | None = None,
    field_rtol: float | None = None,
) -> HybridState:
    """One hybrid step: refresh field, refresh labels (adaptation on),
    reinitialize flipped interfaces, update g and rho per partition, refresh
    field again."""
    from .lifting import lift  # deferred: lifting imports the kinetic kernels

    dt = p.dt if dt is None else dt
    p.check(dt, mesh)
    rho = state.macro.rho
    g = state.micro.g
    t = state.macro.t
    E = solve_field(rho, rho_bar, mesh, rtol=field_rtol)

    if opts.adaptation:
        R = remainder_indicator(rho, E, state.E_prev, dt, rho_bar, mesh)
        if opts.scale_remainder:
            R = p.eps**2 * R
        gnorm = perturbation_indicator(g, mesh)
        labels = update_labels(R, gnorm, th, combine=opts.combine)
        flipped_on = labels.kinetic_ifaces & ~state.labels.kinetic_ifaces
        if flipped_on.any():
            g = g.copy()
            if opts.reinit == "lift":
                lifted = lift(
                    rho, E, p.eps, mesh, order=opts.lift_order,
                    dE_dt=(E - state.E_prev) / dt, time_elim=opts.time_elim,
                    rho_bar=rho_bar, ws=ws,
                )
                g[flipped_on] = lifted.g[flipped_on]
            elif opts.reinit == "zero":
                g[flipped_on] = 0.0
            else:
                raise ValueError(f"reinit must be 'lift' or 'zero', got {opts.reinit!r}")
        # kinetic->fluid interfaces are zeroed by the update below
    else:
        labels = DomainLabels.all_kinetic(mesh.nx)

    macro_fresh = MacroState(rho=rho, E=E, t=t)
    if labels.kinetic_cells.all():
        g_new = micro_step(MicroState(g=g), macro_fresh, p, mesh, dt=dt, ws=ws)
        rho_new = macro_step(rho, g_new, p, mesh, dt=dt)
        g_out = g_new.g
    elif not labels.kinetic_ifaces.any():
        J = fluid_flux(rho, E, mesh)
        rho_new = _rho_update(rho, J, mesh.vgrid.m2, dt, mesh)
        g_out = np.zeros_like(g)
    else:
        rho_new, g_out = _mixed_update(rho, g, E, labels, p, dt, mesh)

    E_new = solve_field(rho_new, rho_bar, mesh, rtol=field_rtol)
    return HybridState(
        macro=MacroState(rho=rho_new, E=E_new, t=t + dt),
        micro=MicroState(g=g_out),
        labels=labels,
        E_prev=E,
    )


def hybrid_propagate(
    state: HybridState,
    t_end: float,
    p: KineticStepParams,
    th: Thresholds,
    opts: HybridOptions,
    mesh: PhaseMesh,
    rho_bar: float,
    trace: Callable[[HybridState], None] | None = None,
    field_rtol: float | None = None,
) -> HybridState:
    """Advance to exactly ``t_end`` by hybrid substeps (last one clipped).

    Owns its scratch buffers; distinct propagations may run concurrently.
    ``trace`` receives the state after every substep when diagnostics are on.
    """
    n_full, rem = substep_sizes(state.macro.t, t_end, p.dt)
    if n_full == 0 and rem == 0.0:
        return HybridState(
            macro=MacroState(rho=state.macro.rho, E=state.macro.E, t=t_end),
            micro=state.micro, labels=state.labels, E_prev=state.E_prev,
        )
    ws = Workspace()
    cur = state
    for _ in range(n_full):
        cur = hybrid_step(cur, p, th, opts, mesh, rho_bar, ws=ws, field_rtol=field_rtol)
        if trace is not None:
            trace(cur)
    if rem > 0.0:
        cur = hybrid_step(cur, p, th, opts, mesh, rho_bar, dt=rem, ws=ws, field_rtol=field_rtol)
        if trace is not None:
            trace(cur)
    return HybridState(
        macro=MacroState(rho=cur.macro.rho, E=cur.macro.E, t=t_end),
        micro=cur.micro, labels=cur.labels, E_prev=cur.E_prev,
    )
