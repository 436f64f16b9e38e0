"""Built-in invariant suite behind ``parakin check``: quick structural
sanity checks printed as one PASS/FAIL line each."""

from __future__ import annotations

import numpy as np

from .adaptation import Stencil7, apply_stencil
from .config import RunConfig
from .experiment import init_state
from .fluid import FluidStepParams, fluid_step
from .kinetic import KineticStepParams, kinetic_step
from .lifting import lift, mass_defect
from .mesh import MacroState, MeshSpec, MicroState, build_mesh
from .poisson import gauss_residual, solve_field


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    return ok


def run_checks(fast: bool = False) -> bool:
    ok = True
    mesh = build_mesh(MeshSpec(nx=32, nvx=16, nvy=8, nvz=8))
    grid = mesh.vgrid

    ok &= _check("maxwellian normalized", abs(grid.m0 - 1.0) <= 1e-14,
                 f"|m0-1|={abs(grid.m0 - 1.0):.2e}")
    ok &= _check("odd moment exactly zero", mesh.bracket(grid.xi * grid.M) == 0.0)

    # stencils annihilate constants and differentiate monomials
    h, x0 = 0.1, 0.37
    lattice = x0 + h * np.arange(-5, 6)
    worst = 0.0
    for order, (q, expect) in ((1, (3, 3 * x0**2)), (2, (4, 12 * x0**2)),
                               (3, (3, 6.0)), (4, (4, 24.0))):
        s = Stencil7.for_spacing(order, h)
        got = apply_stencil(lattice**q, s, 5)
        worst = max(worst, abs(got - expect) / max(1.0, abs(expect)))
    ok &= _check("stencil monomial exactness", worst <= 1e-9, f"worst rel err {worst:.2e}")

    rng = np.random.default_rng(7)
    pert = rng.standard_normal(mesh.nx)
    rho = 1.0 + 0.2 * (pert - pert.mean())
    E = solve_field(rho, 1.0, mesh)
    res = gauss_residual(E, rho, 1.0, mesh)
    ok &= _check("field difference relation", res <= 1e-13, f"residual {res:.2e}")
    ok &= _check("field zero-mean gauge", abs(E.sum()) <= 1e-13, f"|sum E|={abs(E.sum()):.2e}")

    cfg = RunConfig(nx=32, nvx=16, nvy=8, nvz=8)
    init = init_state(cfg, mesh)
    g_lift = lift(init.macro.rho, init.macro.E, 0.5, mesh)
    defect = np.max(np.abs(mass_defect(g_lift.g, mesh)))
    ok &= _check("lifting zero mass", defect <= 1e-14, f"max |<g>|={defect:.2e}")

    if not fast:
        fp = FluidStepParams.default(mesh)
        new = fluid_step(init.macro, fp, mesh, init.rho_bar)
        dm = abs(new.rho.sum() - init.macro.rho.sum()) * mesh.dx
        ok &= _check("fluid step conserves mass", dm <= 1e-12, f"|dm|={dm:.2e}")

        kp = KineticStepParams.default(mesh, eps=0.5, e_max=float(np.abs(init.macro.E).max()))
        const = MacroState(rho=np.full(mesh.nx, 2.0), E=np.zeros(mesh.nx), t=0.0)
        zero_g = MicroState(g=np.zeros((mesh.nx,) + grid.shape))
        macro1, micro1 = kinetic_step((const, zero_g), kp, mesh, rho_bar=2.0)
        fixed = np.array_equal(macro1.rho, const.rho) and not micro1.g.any()
        ok &= _check("kinetic equilibrium fixed point", fixed)

    print("all checks passed" if ok else "CHECK FAILURES PRESENT")
    return bool(ok)
