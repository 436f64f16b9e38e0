import csv

import numpy as np
import pytest

FMT = "%.17g"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def synth_snapshots(path, nx=16, times=(0.1, 0.5, 1.0)):
    x = (np.arange(nx) + 0.5) * 2 * np.pi / nx
    rows = []
    for t in times:
        rho = 3.0 + 2.7 * np.exp(-4 * t) * np.cos(x)
        E = 2.7 * np.exp(-4 * t) * np.sin(x)
        rows += [(FMT % t, FMT % xi, FMT % r, FMT % e) for xi, r, e in zip(x, rho, E)]
    write_csv(path, ["t", "x", "rho", "E"], rows)


def synth_convergence(path, eps_values=(1.0, 0.1, 1e-2, 1e-3, 1e-4)):
    rows = []
    for eps in eps_values:
        rate = 0.1 + 0.8 * min(eps, 1.0)
        for k in range(1, 9):
            rows.append((FMT % eps, str(k), FMT % (10.0 * rate**k)))
    write_csv(path, ["eps", "k", "err"], rows)


def synth_mass(path, eps=1e-4, n=12, scale=1e-13):
    rng = np.random.default_rng(5)
    rows = [(FMT % eps, str(i), FMT % (i * 0.1), FMT % (scale * rng.standard_normal()))
            for i in range(n)]
    write_csv(path, ["eps", "n", "t", "dm"], rows)


def synth_speedups(path):
    rows = []
    for eps in ("0.5", "0.0001"):
        for para, adapt, sp in (("off", "off", 1.0), ("off", "on", 1.1),
                                ("on", "off", 2.3), ("on", "on", 3.4)):
            rows.append((eps, para, adapt, FMT % (10.0 / sp), FMT % sp))
    write_csv(path, ["eps", "parareal", "adaptation", "seconds", "speedup"], rows)


def synth_boundaries(path, eps, shift=0.0, ng=6, nx=12):
    x = (np.arange(nx) + 0.5) * 2 * np.pi / nx
    rows = []
    for n in range(ng + 1):
        t = n / ng
        rho = 3.0 + (2.7 + shift) * np.exp(-4 * t) * np.cos(x)
        E = np.sin(x) * np.exp(-4 * t)
        rows += [
            (FMT % eps, str(n), FMT % t, FMT % xi, FMT % r, FMT % e)
            for xi, r, e in zip(x, rho, E)
        ]
    write_csv(path, ["eps", "n", "t", "x", "rho", "E"], rows)


def synth_sweep(root, eps_values=(0.5, 1e-4)):
    """Directory with the sweep layout the solver CLI produces."""
    cells = []
    for eps in eps_values:
        for para in ("off", "on"):
            for adapt in ("off", "on"):
                name = f"eps{eps:g}_para{para}_adapt{adapt}"
                sub = root / name
                sub.mkdir(parents=True)
                shift = (0.01 if para == "on" else 0.0) + (0.005 if adapt == "on" else 0.0)
                synth_boundaries(sub / "boundaries.csv", eps, shift=shift)
                synth_snapshots(sub / "snapshots.csv")
                cells.append((FMT % eps, para, adapt, "hybrid", name, "converged"))
    write_csv(root / "cells.csv",
              ["eps", "parareal", "adaptation", "mode", "path", "status"], cells)
    synth_convergence(root / "convergence.csv")
    synth_mass(root / "mass.csv")
    synth_speedups(root / "speedups.csv")
    return root


@pytest.fixture
def sweep_dir(tmp_path):
    return synth_sweep(tmp_path / "sweep")
