"""Experiment presets and CSV artifacts: the executable front door.

The reference scenario starts from the far-from-equilibrium data

    f(0, x, v) = M(v) v_x^4 (1 + 0.9 cos(2 pi x / x_star)),

decomposed into the cell density rho_0 = <f_0> and the interface
perturbation g_0 = f_0 - rho_0 M.  A run writes, into its output directory:

=================  ============================================================
config.ini         resolved configuration (round-trips through parse_config)
boundaries.csv     eps,n,t,x,rho,E          final iterate at window boundaries
snapshots.csv      t,x,rho,E                boundary states nearest the
                                            requested snapshot times
convergence.csv    eps,k,err                successive parareal errors
mass.csv           eps,n,t,dm               dm^n = sum_i (rho_i^n - rho_i^0) dx
labels.csv         t,kinetic_fraction       kinetic-cell fraction per boundary
timings.csv        key,value                wall times, cost-model predictions
trace.csv          t,kinetic_fraction,mass  per substep (serial runs, opt-in)
=================  ============================================================

Numeric fields are written with 17 significant digits, so identical
configurations produce byte-identical files; timings.csv is the only
wall-clock-dependent artifact.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import parareal
from .config import (
    RunConfig,
    engine_config,
    mesh_spec,
    resolve_snapshot_times,
    with_overrides,
    write_config,
)
from .fluid import FluidStepParams, fluid_propagate
from .mesh import MacroState, MicroState, PhaseMesh, build_mesh
from .parareal import PerfModel, RunResult, predict_cost
from .poisson import solve_field

FMT = "%.17g"


def _fmt(x) -> str:
    return FMT % float(x)


@dataclass(frozen=True)
class InitialState:
    macro: MacroState
    micro: MicroState
    rho_bar: float


def init_state(cfg: RunConfig, mesh: PhaseMesh) -> InitialState:
    """Evaluate the reference initial data on cells and interfaces and split
    it into (density, zero-mass perturbation, conserved mean density)."""
    grid = mesh.vgrid
    xi4M = grid.xi**4 * grid.M

    def decompose(x_points):
        psi = 1.0 + 0.9 * np.cos(2.0 * np.pi * x_points / mesh.x_star)
        f0 = xi4M * psi[:, None, None, None]
        rho = mesh.bracket_x(f0)
        return f0, rho

    _, rho_cells = decompose(mesh.x_centers)
    f0_if, rho_if = decompose(mesh.x_interfaces)
    g0 = f0_if - rho_if[:, None, None, None] * grid.M
    rho_bar = float(rho_cells.sum() * mesh.dx / mesh.x_star)
    E0 = solve_field(rho_cells, rho_bar, mesh)
    return InitialState(
        macro=MacroState(rho=rho_cells, E=E0, t=0.0),
        micro=MicroState(g=g0),
        rho_bar=rho_bar,
    )


@dataclass
class ExperimentResult:
    status: str
    iterations: int
    exit_code: int
    out_dir: Path
    run: RunResult | None
    boundary_rho: np.ndarray
    boundary_E: np.ndarray
    boundary_t: np.ndarray
    kinetic_fraction: np.ndarray
    wall_s: float


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MAX_ITERATIONS = 3

_EXIT_BY_STATUS = {
    "converged": EXIT_OK,
    "serial": EXIT_OK,
    "fluid_only": EXIT_OK,
    "max_iterations": EXIT_MAX_ITERATIONS,
}


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fluid_only_run(cfg: RunConfig, mesh: PhaseMesh, init: InitialState):
    """Serial drift-diffusion run recording every window boundary."""
    bounds = np.linspace(0.0, cfg.t_final, cfg.windows + 1)
    p = FluidStepParams.default(mesh)
    row = np.empty((cfg.windows + 1, mesh.nx))
    row[0] = init.macro.rho
    state = init.macro
    for n in range(1, cfg.windows + 1):
        state = fluid_propagate(state, bounds[n], p, mesh, init.rho_bar)
        row[n] = state.rho
    return bounds, row


def run_experiment(cfg: RunConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Execute one configured run and write the artifact files."""
    wall_tic = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh = build_mesh(mesh_spec(cfg))
    init = init_state(cfg, mesh)
    write_config(cfg, out / "config.ini")

    trace_rows: list[tuple] = []
    run_result: RunResult | None = None
    if cfg.mode == "fluid":
        bounds, boundary_rho = _fluid_only_run(cfg, mesh, init)
        fractions = np.zeros(cfg.windows + 1)
        status, iterations = "fluid_only", 0
    else:
        ecfg = engine_config(cfg)
        if cfg.trace and not cfg.parareal:
            run_result = _traced_serial_run(ecfg, init, mesh, trace_rows)
        else:
            run_result = parareal.run(ecfg, init.macro.rho, init.micro.g, mesh, init.rho_bar)
        bounds = run_result.ledger.boundaries
        boundary_rho = run_result.boundary_rho
        fractions = run_result.kinetic_fraction
        status, iterations = run_result.status, run_result.iterations

    field_rtol = parareal.ADAPTIVE_FIELD_RTOL if cfg.adaptation else None
    boundary_E = np.stack(
        [solve_field(r, init.rho_bar, mesh, rtol=field_rtol) for r in boundary_rho]
    )
    wall_s = time.perf_counter() - wall_tic

    _write_boundaries(out, cfg, mesh, bounds, boundary_rho, boundary_E)
    _write_snapshots(out, cfg, mesh, bounds, boundary_rho, boundary_E)
    _write_convergence(out, cfg, run_result)
    _write_mass(out, cfg, mesh, bounds, boundary_rho)
    _write_labels(out, bounds, fractions)
    _write_timings(out, cfg, run_result, status, iterations, wall_s)
    if trace_rows:
        _write_csv(out / "trace.csv", ["t", "kinetic_fraction", "mass"],
                   [(_fmt(t), _fmt(f), _fmt(m)) for t, f, m in trace_rows])

    return ExperimentResult(
        status=status,
        iterations=iterations,
        exit_code=_EXIT_BY_STATUS[status],
        out_dir=out,
        run=run_result,
        boundary_rho=boundary_rho,
        boundary_E=boundary_E,
        boundary_t=bounds,
        kinetic_fraction=fractions,
        wall_s=wall_s,
    )


def _traced_serial_run(ecfg, init, mesh, trace_rows):
    """Serial fine run with the per-substep diagnostic channel attached."""
    from .hybrid import HybridState, hybrid_propagate

    _, kin_p = parareal.default_params(ecfg, mesh, init.macro.E)
    bounds = ecfg.boundaries
    row = np.empty((ecfg.ng + 1, mesh.nx))
    row[0] = init.macro.rho
    fractions = np.zeros(ecfg.ng + 1)

    def trace(state):
        trace_rows.append(
            (state.macro.t, state.labels.kinetic_fraction, float(state.macro.rho.sum() * mesh.dx))
        )

    state = HybridState.initial(init.macro, init.micro, mesh)
    for n in range(1, ecfg.ng + 1):
        state = hybrid_propagate(
            state, bounds[n], kin_p, ecfg.thresholds, ecfg.options, mesh,
            init.rho_bar, trace=trace, field_rtol=parareal.field_guard(ecfg),
        )
        row[n] = state.macro.rho
        fractions[n] = state.labels.kinetic_fraction
    ledger = parareal.PararealLedger(boundaries=bounds, rho=[row])
    ledger.kinetic_fraction = fractions
    return parareal.RunResult(
        status="serial", iterations=0, ledger=ledger, boundary_rho=row,
        kinetic_fraction=fractions, config=ecfg,
    )


def _write_boundaries(out, cfg, mesh, bounds, boundary_rho, boundary_E):
    rows = []
    for n, t in enumerate(bounds):
        for i in range(mesh.nx):
            rows.append((
                _fmt(cfg.eps), str(n), _fmt(t), _fmt(mesh.x_centers[i]),
                _fmt(boundary_rho[n, i]), _fmt(boundary_E[n, i]),
            ))
    _write_csv(out / "boundaries.csv", ["eps", "n", "t", "x", "rho", "E"], rows)


def _write_snapshots(out, cfg, mesh, bounds, boundary_rho, boundary_E):
    wanted = resolve_snapshot_times(cfg)
    picked = sorted({int(np.argmin(np.abs(bounds - t))) for t in wanted})
    rows = []
    for n in picked:
        for i in range(mesh.nx):
            rows.append((
                _fmt(bounds[n]), _fmt(mesh.x_centers[i]),
                _fmt(boundary_rho[n, i]), _fmt(boundary_E[n, i]),
            ))
    _write_csv(out / "snapshots.csv", ["t", "x", "rho", "E"], rows)


def _write_convergence(out, cfg, run_result):
    rows = []
    if run_result is not None:
        for k, err in enumerate(run_result.ledger.err, start=1):
            rows.append((_fmt(cfg.eps), str(k), _fmt(err)))
    _write_csv(out / "convergence.csv", ["eps", "k", "err"], rows)


def _write_mass(out, cfg, mesh, bounds, boundary_rho):
    m0 = boundary_rho[0].sum() * mesh.dx
    rows = []
    for n, t in enumerate(bounds):
        dm = boundary_rho[n].sum() * mesh.dx - m0
        rows.append((_fmt(cfg.eps), str(n), _fmt(t), _fmt(dm)))
    _write_csv(out / "mass.csv", ["eps", "n", "t", "dm"], rows)


def _write_labels(out, bounds, fractions):
    rows = [(_fmt(t), _fmt(f)) for t, f in zip(bounds, fractions)]
    _write_csv(out / "labels.csv", ["t", "kinetic_fraction"], rows)


def _write_timings(out, cfg, run_result, status, iterations, wall_s):
    rows = [
        ("status", status),
        ("iterations", str(iterations)),
        ("windows", str(cfg.windows)),
        ("workers", str(cfg.workers)),
        ("eps", _fmt(cfg.eps)),
        ("wall_total_s", _fmt(wall_s)),
    ]
    if run_result is not None:
        tm = run_result.ledger.timings
        rows += [
            ("coarse_sweep_s", _fmt(tm.coarse_sweep)),
            ("fine_window_max_s", _fmt(tm.fine_max)),
            ("fine_total_s", _fmt(tm.fine_total)),
            ("lift_window_max_s", _fmt(tm.lift_max)),
            ("lift_total_s", _fmt(tm.lift_total)),
            ("fluid_window_max_s", _fmt(tm.fluid_window_max)),
            ("correction_total_s", _fmt(tm.correction_total)),
        ]
        if iterations > 0:
            pm = PerfModel(
                t_hmm=tm.fine_max, t_fluid=tm.fluid_window_max, t_lift=tm.lift_max,
                n_workers=cfg.workers, ng=cfg.windows, k=iterations,
            )
            t_pred, k_opt, beats = predict_cost(pm)
            rows += [
                ("predicted_t_parareal_s", _fmt(t_pred)),
                ("predicted_k_opt", str(k_opt)),
                ("predicted_break_even", "yes" if beats else "no"),
            ]
        for it in tm.iterations:
            rows.append((f"iteration_{it['k']}_wall_s", _fmt(it["wall_s"])))
    _write_csv(out / "timings.csv", ["key", "value"], rows)


# ----------------------------------------------------------------------------
# sweep: eps grid x toggle matrix


TOGGLE_MATRIX = (
    (False, False),
    (False, True),
    (True, False),
    (True, True),
)


def cell_name(eps: float, para: bool, adapt: bool) -> str:
    return f"eps{eps:g}_para{'on' if para else 'off'}_adapt{'on' if adapt else 'off'}"


def run_sweep(cfg: RunConfig, eps_values, out_root: str | Path) -> Path:
    """Run the toggle matrix for each eps plus one fluid-only cell; write the
    manifest, speedup table and concatenated convergence/mass files."""
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = []
    seconds = {}
    results = {}

    for eps in eps_values:
        for para, adapt in TOGGLE_MATRIX:
            name = cell_name(eps, para, adapt)
            sub = root / name
            cell_cfg = with_overrides(
                cfg, eps=float(eps), parareal=para, adaptation=adapt,
                out_dir=str(sub), trace=False,
            )
            res = run_experiment(cell_cfg, sub)
            manifest.append((
                _fmt(eps), "on" if para else "off", "on" if adapt else "off",
                "hybrid", name, res.status,
            ))
            seconds[(eps, para, adapt)] = res.wall_s
            results[(eps, para, adapt)] = res

    fluid_cfg = with_overrides(cfg, parareal=False, adaptation=False,
                               mode="fluid", out_dir=str(root / "fluid"), trace=False)
    fluid_res = run_experiment(fluid_cfg, root / "fluid")
    manifest.append(("", "off", "off", "fluid", "fluid", fluid_res.status))

    _write_csv(root / "cells.csv",
               ["eps", "parareal", "adaptation", "mode", "path", "status"], manifest)

    rows = []
    for eps in eps_values:
        base = seconds[(eps, False, False)]
        for para, adapt in TOGGLE_MATRIX:
            sec = seconds[(eps, para, adapt)]
            speedup = base / sec if sec > 0 else float("inf")
            rows.append((
                _fmt(eps), "on" if para else "off", "on" if adapt else "off",
                _fmt(sec), _fmt(speedup),
            ))
        rows.append((_fmt(eps), "off", "off-fluid", _fmt(fluid_res.wall_s),
                     _fmt(base / fluid_res.wall_s if fluid_res.wall_s > 0 else float("inf"))))
    _write_csv(root / "speedups.csv",
               ["eps", "parareal", "adaptation", "seconds", "speedup"], rows)

    # sweep-level concatenations carry toggle provenance after the eps column
    _concat_csv(root, "convergence.csv", ["eps", "k", "err"], manifest)
    _concat_csv(root, "mass.csv", ["eps", "n", "t", "dm"], manifest)
    return root


def _concat_csv(root: Path, filename: str, header, manifest) -> None:
    rows = []
    for entry in manifest:
        path = root / entry[4] / filename
        if not path.exists():
            continue
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            file_header = next(rd, None)
            if file_header != header:
                continue
            for row in rd:
                rows.append((row[0], entry[1], entry[2], *row[1:]))
    combined_header = [header[0], "parareal", "adaptation", *header[1:]]
    _write_csv(root / filename, combined_header, rows)
