"""Figure kinds rendered from the solver's CSV artifacts.

=============  =========================  ==================================
kind           reads                      shows
=============  =========================  ==================================
snapshots      snapshots.csv              density and field profiles per time
convergence    convergence.csv            successive parareal error vs k
linf_error     cells.csv + boundaries     error vs the (off,off) baseline
mass           mass.csv                   |mass variation| over time
speedup_bars   speedups.csv               runtime speedup per toggle combo
=============  =========================  ==================================

``--in`` is a run directory for snapshots/convergence/mass (a sweep
directory also works since it carries concatenated files) and a sweep
directory for linf_error/speedup_bars.  Pure file-to-file transforms:
re-rendering produces identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import schema
from .style import new_figure, save

KINDS = ("snapshots", "convergence", "linf_error", "mass", "speedup_bars")

#: floor applied before log-scale plotting of mass variations
MASS_FLOOR = 1e-16


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_dir: Path
    output: Path
    log_y: bool = field(default=None)  # per-kind default when None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "output", Path(self.output))
        if self.log_y is None:
            object.__setattr__(self, "log_y", self.kind in ("convergence", "mass", "linf_error"))


def render(spec: FigureSpec) -> Path:
    {
        "snapshots": _render_snapshots,
        "convergence": _render_convergence,
        "linf_error": _render_linf_error,
        "mass": _render_mass,
        "speedup_bars": _render_speedup_bars,
    }[spec.kind](spec)
    return spec.output


def _combo_label(parareal, adaptation):
    return f"para {parareal}, adapt {adaptation}"


def _render_snapshots(spec):
    data = schema.load_snapshots(spec.input_dir / "snapshots.csv")
    times = np.unique(data["t"])
    fig, (ax_rho, ax_e) = new_figure(1, 2, figsize=(9.6, 4.0))
    for t in times:
        sel = data["t"] == t
        order = np.argsort(data["x"][sel])
        x = data["x"][sel][order]
        ax_rho.plot(x, data["rho"][sel][order], label=f"t = {t:.3g}")
        ax_e.plot(x, data["E"][sel][order])
    ax_rho.set_xlabel("x")
    ax_rho.set_ylabel("density")
    ax_e.set_xlabel("x")
    ax_e.set_ylabel("electric field")
    ax_rho.legend(loc="best")
    fig.suptitle("density and field snapshots")
    save(fig, spec.output)


def _group_keys(data, n):
    eps = data["eps"]
    para = data.get("parareal", np.asarray(["on"] * n))
    adapt = data.get("adaptation", np.asarray(["?"] * n))
    return list(zip(eps, para, adapt))


def _render_convergence(spec):
    data = schema.load_convergence(spec.input_dir / "convergence.csv")
    n = len(data["k"])
    if n == 0:
        raise schema.SchemaError(
            f"{spec.input_dir / 'convergence.csv'}: no iteration rows to plot "
            "(serial runs have an empty convergence table)"
        )
    keys = _group_keys(data, n)
    fig, ax = new_figure()
    for key in sorted(set(keys)):
        sel = np.asarray([k == key for k in keys])
        k_vals = data["k"][sel]
        order = np.argsort(k_vals)
        eps, para, adapt = key
        label = f"eps = {eps:g}"
        if "adaptation" in data:
            label += f" ({_combo_label(para, adapt)})"
        ax.plot(k_vals[order], data["err"][sel][order], marker="o", label=label)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("parareal iteration k")
    ax.set_ylabel("successive error")
    ax.legend(loc="best")
    ax.set_title("parareal convergence")
    save(fig, spec.output)


def _render_mass(spec):
    data = schema.load_mass(spec.input_dir / "mass.csv")
    n = len(data["t"])
    keys = _group_keys(data, n)
    fig, ax = new_figure()
    for key in sorted(set(keys)):
        sel = np.asarray([k == key for k in keys])
        t = data["t"][sel]
        order = np.argsort(t)
        dm = np.maximum(np.abs(data["dm"][sel][order]), MASS_FLOOR)
        eps, para, adapt = key
        label = f"eps = {eps:g}"
        if "adaptation" in data:
            label += f" ({_combo_label(para, adapt)})"
        ax.plot(t[order], dm, label=label)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(f"|mass variation| (floored at {MASS_FLOOR:g})")
    ax.legend(loc="best")
    ax.set_title("mass variation")
    save(fig, spec.output)


def _baseline_cell(cells, eps):
    for i in range(len(cells["eps"])):
        if (cells["eps"][i] == eps and cells["parareal"][i] == "off"
                and cells["adaptation"][i] == "off" and cells["mode"][i] == "hybrid"):
            return cells["path"][i]
    raise schema.SchemaError(
        f"cells.csv: no (parareal off, adaptation off) baseline for eps={eps}"
    )


def _boundary_matrix(path):
    data = schema.load_boundaries(path / "boundaries.csv")
    n_idx = data["n"].astype(int)
    ng = n_idx.max()
    nx = np.count_nonzero(n_idx == 0)
    rho = np.empty((ng + 1, nx))
    t = np.empty(ng + 1)
    for nn in range(ng + 1):
        sel = n_idx == nn
        rho[nn] = data["rho"][sel]
        t[nn] = data["t"][sel][0]
    return t, rho


def _render_linf_error(spec):
    cells = schema.load_cells(spec.input_dir / "cells.csv")
    fig, ax = new_figure()
    plotted = 0
    for eps in sorted(set(cells["eps"]) - {""}):
        base_t, base_rho = _boundary_matrix(spec.input_dir / _baseline_cell(cells, eps))
        for i in range(len(cells["eps"])):
            if cells["eps"][i] != eps or cells["mode"][i] != "hybrid":
                continue
            if cells["parareal"][i] == "off" and cells["adaptation"][i] == "off":
                continue
            t, rho = _boundary_matrix(spec.input_dir / cells["path"][i])
            err = np.max(np.abs(rho - base_rho), axis=1)
            label = (f"eps = {float(eps):g} "
                     f"({_combo_label(cells['parareal'][i], cells['adaptation'][i])})")
            ax.plot(t[1:], np.maximum(err[1:], MASS_FLOOR), label=label)
            plotted += 1
    if plotted == 0:
        raise schema.SchemaError("cells.csv: no non-baseline hybrid cells to compare")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("Linf density error vs classical baseline")
    ax.legend(loc="best")
    ax.set_title("error relative to the serial kinetic run")
    save(fig, spec.output)


def _render_speedup_bars(spec):
    data = schema.load_speedups(spec.input_dir / "speedups.csv")
    labels = [
        f"eps {e}\npara {p} / adapt {a}"
        for e, p, a in zip(data["eps"], data["parareal"], data["adaptation"])
    ]
    fig, ax = new_figure(figsize=(max(7.2, 0.85 * len(labels)), 4.4))
    xs = np.arange(len(labels))
    ax.bar(xs, data["speedup"], color="#1f77b4")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, fontsize=6, rotation=45, ha="right")
    ax.set_ylabel("speedup vs (off, off) baseline")
    ax.set_title("runtime speedups")
    ax.axhline(1.0, color="#d62728", linewidth=0.8)
    fig.tight_layout()
    save(fig, spec.output)
