import csv
import hashlib
from pathlib import Path

import numpy as np
import pytest

from parakin.config import RunConfig
from parakin.experiment import (
    EXIT_MAX_ITERATIONS,
    cell_name,
    run_experiment,
    run_sweep,
)

FAST = dict(nx=16, nvx=8, nvy=4, nvz=4, windows=6, t_final=0.1, k_max=10,
            workers=1, snapshots=3)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# initial data


def test_initial_perturbation_zero_mass(mesh, init):
    assert np.max(np.abs(mesh.bracket_x(init.micro.g))) <= 1e-14


def test_initial_density_factorized_oracle(mesh, init):
    # rho_0 is the cosine profile times the constant <xi^4 M>
    c4 = mesh.bracket(mesh.vgrid.xi**4 * mesh.vgrid.M)
    psi = 1.0 + 0.9 * np.cos(2.0 * np.pi * mesh.x_centers / mesh.x_star)
    assert np.max(np.abs(init.macro.rho - c4 * psi)) <= 1e-12
    assert c4 == pytest.approx(3.0, abs=1e-10)


def test_initial_density_positive(init):
    assert np.all(init.macro.rho > 0.0)


def test_initial_field_consistency(mesh, init):
    # solvability: the initial density matches its own mean exactly enough
    assert abs(((init.macro.rho - init.rho_bar)).sum() * mesh.dx) <= 1e-12


# ---------------------------------------------------------------------------
# artifacts


@pytest.fixture(scope="module")
def fast_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fastrun")
    cfg = RunConfig(eps=1e-4, out_dir=str(out), **FAST)
    res = run_experiment(cfg)
    return cfg, res


def test_run_writes_all_artifacts(fast_run):
    _, res = fast_run
    for name in ("config.ini", "boundaries.csv", "snapshots.csv",
                 "convergence.csv", "mass.csv", "labels.csv", "timings.csv"):
        assert (res.out_dir / name).exists(), name


def test_run_exit_status(fast_run):
    _, res = fast_run
    assert res.status == "converged"
    assert res.exit_code == 0


def test_snapshot_schema(fast_run):
    _, res = fast_run
    header, rows = read_csv(res.out_dir / "snapshots.csv")
    assert header == ["t", "x", "rho", "E"]
    nx = 16
    assert len(rows) % nx == 0
    ts = sorted({float(r[0]) for r in rows})
    assert len(ts) <= 3 and ts[-1] <= 0.1 + 1e-12


def test_convergence_schema(fast_run):
    cfg, res = fast_run
    header, rows = read_csv(res.out_dir / "convergence.csv")
    assert header == ["eps", "k", "err"]
    assert len(rows) == res.iterations
    errs = [float(r[2]) for r in rows]
    assert errs[-1] < cfg.tol


def test_mass_schema(fast_run):
    _, res = fast_run
    header, rows = read_csv(res.out_dir / "mass.csv")
    assert header == ["eps", "n", "t", "dm"]
    assert len(rows) == 7  # windows + 1
    assert float(rows[0][3]) == 0.0


def test_labels_schema(fast_run):
    _, res = fast_run
    header, rows = read_csv(res.out_dir / "labels.csv")
    assert header == ["t", "kinetic_fraction"]
    fracs = [float(r[1]) for r in rows]
    assert all(0.0 <= f <= 1.0 for f in fracs)


def test_timings_schema(fast_run):
    _, res = fast_run
    header, rows = read_csv(res.out_dir / "timings.csv")
    assert header == ["key", "value"]
    keys = {r[0] for r in rows}
    assert {"status", "iterations", "windows", "workers",
            "fine_window_max_s", "fluid_window_max_s",
            "lift_window_max_s", "predicted_t_parareal_s"} <= keys


def test_reruns_byte_identical_except_timings(tmp_path):
    out = tmp_path / "same"
    cfg = RunConfig(eps=1e-4, out_dir=str(out), **FAST)
    names = ("config.ini", "boundaries.csv", "snapshots.csv",
             "convergence.csv", "mass.csv", "labels.csv")
    digests = []
    for _ in range(2):
        run_experiment(cfg)
        digests.append({name: digest(out / name) for name in names})
    assert digests[0] == digests[1]


def test_fluid_mode(tmp_path):
    cfg = RunConfig(eps=1e-4, mode="fluid", out_dir=str(tmp_path / "f"), **FAST)
    res = run_experiment(cfg)
    assert res.status == "fluid_only"
    assert res.exit_code == 0
    _, rows = read_csv(res.out_dir / "convergence.csv")
    assert rows == []
    _, rows = read_csv(res.out_dir / "labels.csv")
    assert all(float(r[1]) == 0.0 for r in rows)


def test_max_iterations_exit_code(tmp_path):
    cfg = RunConfig(eps=0.5, out_dir=str(tmp_path / "m"), tol=1e-30,
                    **{**FAST, "k_max": 1})
    res = run_experiment(cfg)
    assert res.status == "max_iterations"
    assert res.exit_code == EXIT_MAX_ITERATIONS


def test_trace_serial_run(tmp_path):
    cfg = RunConfig(eps=1e-4, out_dir=str(tmp_path / "t"), parareal=False,
                    trace=True, **FAST)
    res = run_experiment(cfg)
    header, rows = read_csv(res.out_dir / "trace.csv")
    assert header == ["t", "kinetic_fraction", "mass"]
    assert len(rows) >= cfg.windows  # at least one substep per window
    masses = np.array([float(r[2]) for r in rows])
    assert np.max(np.abs(masses - masses[0])) <= 1e-6 * abs(masses[0])


def test_sweep_layout(tmp_path):
    cfg = RunConfig(eps=0.5, **FAST)
    root = run_sweep(cfg, [0.5, 1e-4], tmp_path / "sweep")
    assert (root / "cells.csv").exists()
    assert (root / "speedups.csv").exists()
    assert (root / "convergence.csv").exists()
    assert (root / "mass.csv").exists()
    assert (root / "fluid" / "snapshots.csv").exists()
    for eps in (0.5, 1e-4):
        for para in (True, False):
            for adapt in (True, False):
                sub = root / cell_name(eps, para, adapt)
                assert (sub / "boundaries.csv").exists()
    header, rows = read_csv(root / "speedups.csv")
    assert header == ["eps", "parareal", "adaptation", "seconds", "speedup"]
    # one row per toggle combination plus the fluid reference, per eps
    assert len(rows) == 2 * 5
    header, rows = read_csv(root / "convergence.csv")
    eps_seen = {float(r[0]) for r in rows}
    assert eps_seen == {0.5, 1e-4}
