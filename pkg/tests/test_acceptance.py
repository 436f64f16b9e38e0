"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Everything runs at desk scale on the reference grid (nx=32, nvx=32,
nvy=nvz=16) or smaller where a criterion says so.  Tolerances are fixed
here, not calibrated.  Criterion 11 (wall-clock speedup) is environment
dependent and skips, with a report line, on machines with fewer than eight
cores.  Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import os

import numpy as np
import pytest

from parakin.adaptation import Stencil7, Thresholds, apply_stencil
from parakin.config import RunConfig
from parakin.experiment import init_state, run_experiment
from parakin.fluid import FluidStepParams, fluid_propagate, fluid_step
from parakin.hybrid import HybridOptions, HybridState, hybrid_step
from parakin.kinetic import KineticStepParams, kinetic_propagate, kinetic_step
from parakin.lifting import lift, mass_defect
from parakin.mesh import MeshSpec, MicroState, build_mesh
from parakin.parareal import (
    PararealConfig,
    PerfModel,
    lift_restart_reference,
    predict_cost,
    run,
)
from parakin.poisson import gauss_residual, solve_field


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(MeshSpec(nx=32, nvx=32, nvy=16, nvz=16))


@pytest.fixture(scope="module")
def init(mesh):
    return init_state(RunConfig(), mesh)


def report(num, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def kin_params(mesh, init, eps):
    return KineticStepParams.default(mesh, eps, e_max=float(np.abs(init.macro.E).max()))


def engine_cfg(eps, ng, adaptation, parareal=True, workers=1, k_max=55, tol=1e-10):
    return PararealConfig(
        eps=eps, t_final=1.0, ng=ng, k_max=k_max, tol=tol, workers=workers,
        parareal_enabled=parareal, thresholds=Thresholds(1e-5, 1e-5),
        options=HybridOptions(adaptation=adaptation),
    )


# ---------------------------------------------------------------------------


def test_criterion_01_stencil_exactness():
    # each order-p row reproduces d^p x^q / dx^p on monomials through its
    # verified degree (orders 1-3: q <= 6; order 4: q <= 7)
    h, x0 = 0.1, 0.37
    lattice = x0 + h * (np.arange(11) - 5)
    verified_degree = {1: 6, 2: 6, 3: 6, 4: 7}
    worst = 0.0
    for order, qmax in verified_degree.items():
        s = Stencil7.for_spacing(order, h)
        for q in range(qmax + 1):
            if q >= order:
                exact = math.factorial(q) / math.factorial(q - order) * x0 ** (q - order)
            else:
                exact = 0.0
            got = apply_stencil(lattice**q, s, 5)
            worst = max(worst, abs(got - exact) / max(1.0, abs(exact)))
    report(1, worst <= 1e-9, f"monomial exactness worst rel err {worst:.2e} (tol 1e-9)")


def test_criterion_02_poisson_residual(mesh):
    rng = np.random.default_rng(2024)
    worst_res, worst_gauge = 0.0, 0.0
    for _ in range(100):
        d = rng.standard_normal(mesh.nx)
        rho = 2.0 + 0.5 * (d - d.mean())
        E = solve_field(rho, 2.0, mesh)
        worst_res = max(worst_res, gauss_residual(E, rho, 2.0, mesh))
        worst_gauge = max(worst_gauge, abs(E.mean()))
    ok = worst_res <= 1e-14 and worst_gauge <= 1e-14
    report(2, ok, f"Gauss residual {worst_res:.2e}, gauge {worst_gauge:.2e} (tol 1e-14)")


def test_criterion_03_ap_property(mesh, init):
    # one window, matched time steps, well-prepared start
    window = 1.0 / 16
    emax = float(np.abs(init.macro.E).max())
    gaps = []
    for eps in (1e-2, 1e-4, 1e-6):
        p = KineticStepParams.default(mesh, eps, e_max=emax)
        fp = FluidStepParams(dt=p.dt, m2=mesh.vgrid.m2)
        ref = fluid_propagate(init.macro, window, fp, mesh, init.rho_bar)
        zero = MicroState(g=np.zeros((mesh.nx,) + mesh.vgrid.shape))
        out, _ = kinetic_propagate((init.macro, zero), window, p, mesh, init.rho_bar)
        gaps.append(float(np.max(np.abs(out.rho - ref.rho))))
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] <= 1e-5
    report(3, ok, f"gaps at eps 1e-2/1e-4/1e-6: "
                  f"{gaps[0]:.2e} > {gaps[1]:.2e} > {gaps[2]:.2e}, last <= 1e-5")


@pytest.mark.parametrize("eps", [0.5, 1e-4])
def test_criterion_04_prefix_exactness(mesh, init, eps):
    cfg = engine_cfg(eps, ng=16, adaptation=False, k_max=18)
    res = run(cfg, init.macro.rho, init.micro.g, mesh, init.rho_bar)
    ref = lift_restart_reference(cfg, init.macro.rho, init.micro.g, mesh, init.rho_bar)
    scale = float(np.max(np.abs(ref)))
    worst = 0.0
    for k, row in enumerate(res.ledger.rho):
        n = min(k, cfg.ng)
        worst = max(worst, float(np.max(np.abs(row[: n + 1] - ref[: n + 1]))) / scale)
    report(4, worst <= 1e-12,
           f"eps={eps:g}: prefix rel err {worst:.2e} over {res.iterations} iterations (tol 1e-12)")


def test_criterion_05_convergence_ordering(mesh, init):
    iters = {}
    for eps in (1e-4, 1.0):
        res = run(engine_cfg(eps, ng=50, adaptation=False),
                  init.macro.rho, init.micro.g, mesh, init.rho_bar)
        # a run that exhausts its budget counts as beyond it
        iters[eps] = res.iterations if res.status == "converged" else res.config.k_max + 1
    ok = iters[1e-4] < iters[1.0] and iters[1e-4] <= 8
    report(5, ok, f"iterations to 1e-10: eps=1e-4 -> {iters[1e-4]}, eps=1.0 -> {iters[1.0]} "
                  f"(require strict ordering and <= 8 for eps=1e-4)")


def test_criterion_06a_mass_conservation_adaptation_off(mesh, init):
    worst = 0.0
    for eps in (1e-1, 1e-4):
        res = run(engine_cfg(eps, ng=16, adaptation=False, k_max=30),
                  init.macro.rho, init.micro.g, mesh, init.rho_bar)
        m = res.ledger.masses(mesh.dx)
        worst = max(worst, float(np.max(np.abs(m - m[0, 0])) / m[0, 0]))
    report("6a", worst <= 1e-12,
           f"adaptation off: max |dm^(n,k)| = {worst:.2e} relative (tol 1e-12)")


def test_criterion_06b_mass_conservation_adaptation_on(mesh, init):
    # Documented honest failure.  With the indicator defaults mandated by the
    # module contracts (fluid iff |R| < delta0 OR ||g|| < eta0, with the
    # unscaled remainder), the reference scenario at eps=1e-4 develops
    # persistent kinetic/fluid boundaries whose unmatched interface fluxes
    # carry a mass defect of order 1e-6 relative -- three orders above this
    # criterion's 1e-8 bound -- while at eps=1e-1 no cell ever satisfies the
    # indicators, leaving only round-off.  The bound and the eps-ordering are
    # therefore unattainable together under those defaults; see the decisions
    # ledger for the full analysis and the config switches
    # (adaptation.scale_remainder, adaptation.combine) that trade this
    # criterion off against the accuracy criterion.
    drift = {}
    for eps in (1e-1, 1e-4):
        res = run(engine_cfg(eps, ng=16, adaptation=True, k_max=30),
                  init.macro.rho, init.micro.g, mesh, init.rho_bar)
        m = res.ledger.masses(mesh.dx)
        drift[eps] = float(np.max(np.abs(m - m[0, 0])) / m[0, 0])
    ok = drift[1e-4] <= 1e-8 and drift[1e-4] <= drift[1e-1]
    report("6b", ok,
           f"adaptation on: |dm| eps=1e-4 -> {drift[1e-4]:.2e} (bound 1e-8), "
           f"eps=1e-1 -> {drift[1e-1]:.2e}; ordering requires the former <= the latter")


def test_criterion_07_lifting_invariants(mesh, init):
    checks = []
    for eps in (0.5, 1e-4):
        for order in (1, 2):
            g = lift(init.macro.rho, init.macro.E, eps, mesh, order=order)
            checks.append(float(np.max(np.abs(mass_defect(g.g, mesh)))))
    defect = max(checks)

    rho_bar = 2.0
    rho = rho_bar + 0.9 * rho_bar * np.cos(mesh.x_centers)
    E0 = np.zeros(mesh.nx)
    g1 = lift(rho, E0, 0.5, mesh, order=1)
    drho = (np.roll(rho, -1) - rho) / mesh.dx
    oracle = -0.5 * mesh.vgrid.xi[None] * mesh.vgrid.M[None] * drho[:, None, None, None]
    oracle_err = float(np.max(np.abs(g1.g - oracle)))

    lo = lift(init.macro.rho, init.macro.E, 0.05, mesh, order=1)
    hi = lift(init.macro.rho, init.macro.E, 0.5, mesh, order=1)
    lin_err = float(np.max(np.abs(hi.g - 10.0 * lo.g)))
    lin_ok = np.allclose(hi.g, 10.0 * lo.g, rtol=1e-13, atol=1e-300)

    ok = defect <= 1e-15 and oracle_err <= 1e-13 and lin_ok
    report(7, ok, f"post-projection <g> {defect:.2e} (tol 1e-15); order-1 oracle "
                  f"gap {oracle_err:.2e} (tol 1e-13); eps-linearity gap {lin_err:.2e}")


def test_criterion_08_hybrid_degeneracies(mesh, init):
    eps = 0.5
    p = kin_params(mesh, init, eps)
    th = Thresholds(1e-5, 1e-5)

    hyb = HybridState.initial(init.macro, init.micro, mesh)
    kin = (init.macro, init.micro)
    all_k_ok = True
    for _ in range(100):
        hyb = hybrid_step(hyb, p, th, HybridOptions(adaptation=False), mesh, init.rho_bar)
        kin = kinetic_step(kin, p, mesh, init.rho_bar)
        all_k_ok &= np.array_equal(hyb.macro.rho, kin[0].rho)
        all_k_ok &= np.array_equal(hyb.micro.g, kin[1].g)

    fp = FluidStepParams(dt=p.dt, m2=mesh.vgrid.m2)
    loose = Thresholds(1e9, 1e9)
    hyb = HybridState.initial(init.macro, init.micro, mesh)
    flu = init.macro
    all_f_ok = True
    for _ in range(100):
        hyb = hybrid_step(hyb, p, loose, HybridOptions(adaptation=True), mesh, init.rho_bar)
        flu = fluid_step(flu, fp, mesh, init.rho_bar)
        all_f_ok &= np.array_equal(hyb.macro.rho, flu.rho)

    ok = all_k_ok and all_f_ok
    report(8, ok, f"100 steps: all-kinetic bit-match {all_k_ok}, "
                  f"all-fluid density bit-match {all_f_ok}")


def test_criterion_09_accuracy_vs_baseline(mesh, init):
    errs, converged = {}, {}
    for eps in (1e-4, 0.5):
        base = run(engine_cfg(eps, ng=50, adaptation=False, parareal=False),
                   init.macro.rho, init.micro.g, mesh, init.rho_bar)
        full = run(engine_cfg(eps, ng=50, adaptation=True),
                   init.macro.rho, init.micro.g, mesh, init.rho_bar)
        errs[eps] = float(np.max(np.abs(full.boundary_rho - base.boundary_rho)))
        converged[eps] = full.status == "converged"
    ok = (errs[1e-4] <= 1e-3 and np.isfinite(errs[0.5]) and errs[0.5] <= 1.0
          and converged[1e-4] and converged[0.5] and errs[1e-4] < errs[0.5])
    report(9, ok, f"max-over-time Linf density error: eps=1e-4 -> {errs[1e-4]:.2e} "
                  f"(tol 1e-3), eps=0.5 -> {errs[0.5]:.2e} (bounded, converged, larger)")


def test_criterion_10_worker_determinism(tmp_path, mesh):
    digests = []
    for workers in (1, 2, 8):
        out = tmp_path / f"w{workers}"
        cfg = RunConfig(eps=1e-4, windows=50, k_max=55, workers=workers,
                        out_dir=str(out), snapshots=8)
        run_experiment(cfg)
        digests.append(tuple(
            (out / name).read_bytes() for name in ("snapshots.csv", "convergence.csv")
        ))
    ok = digests[0] == digests[1] == digests[2]
    report(10, ok, "worker counts {1,2,8}: snapshots.csv and convergence.csv byte-identical")


def test_criterion_11_speedup(tmp_path):
    cores = os.cpu_count() or 1
    if cores < 8:
        print(f"[SKIP] criterion 11: environment-dependent speedup check skipped "
              f"({cores} cores < 8)")
        pytest.skip(f"needs >= 8 physical cores, found {cores}")
    common = dict(windows=50, k_max=55, snapshots=4)
    results = {}
    for name, kw in (
        ("baseline", dict(parareal=False, adaptation=False, workers=1)),
        ("para", dict(parareal=True, adaptation=False, workers=8)),
        ("full", dict(parareal=True, adaptation=True, workers=8)),
        ("fluid", dict(parareal=False, adaptation=False, workers=1, mode="fluid")),
    ):
        cfg = RunConfig(eps=1e-4, out_dir=str(tmp_path / name), **common, **kw)
        results[name] = run_experiment(cfg).wall_s
    sp_para = results["baseline"] / results["para"]
    sp_full = results["baseline"] / results["full"]
    ok = sp_para > 1.5 and sp_full > sp_para and results["fluid"] < results["baseline"] / 50
    report(11, ok, f"speedups vs baseline: parareal {sp_para:.2f} (>1.5), "
                   f"full {sp_full:.2f} (> parareal), fluid {results['baseline']/results['fluid']:.0f}x (>50)")


def test_criterion_12_cost_model(mesh, init):
    t, k_opt, beats = predict_cost(
        PerfModel(t_hmm=10.0, t_fluid=1.0, t_lift=1.0, n_workers=4, ng=10, k=2)
    )
    exact_ok = (t == 81.0)

    res = run(engine_cfg(1e-4, ng=16, adaptation=False, k_max=30),
              init.macro.rho, init.micro.g, mesh, init.rho_bar)
    tm = res.ledger.timings
    pm = PerfModel(t_hmm=tm.fine_max, t_fluid=tm.fluid_window_max, t_lift=tm.lift_max,
                   n_workers=1, ng=16, k=res.iterations)
    t_pred, _, _ = predict_cost(pm)
    measured = tm.wall_total
    ratio = t_pred / measured
    factor_ok = 0.5 <= ratio <= 2.0
    report(12, exact_ok and factor_ok,
           f"worked example -> {t} (exact 81); predicted/measured wall ratio "
           f"{ratio:.2f} within [0.5, 2]")
