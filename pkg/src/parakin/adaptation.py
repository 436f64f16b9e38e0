"""Dynamic kinetic/fluid domain adaptation: coupling indicators and cell
labels, plus the 7-point central finite-difference stencils they use.

Two per-cell indicators drive the partition.  The remainder indicator R
measures how far the macroscopic moment dynamics deviates from the
drift-diffusion limit,

    R = -J''' + E J'' + (2 rho - 3 rho_bar) J' + 2 J rho' - rho' dE/dt,

with all derivatives in x; the perturbation indicator is the per-cell L2
velocity norm of the micro perturbation g.  A cell is labeled Fluid when
EITHER indicator falls below its threshold (an AND combination is available
for experimentation); otherwise it stays (or becomes) Kinetic.  An interface
is Kinetic iff either adjacent cell is Kinetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshTooSmall
from .mesh import PhaseMesh, bracket_staggered

#: 7-point central difference coefficients for offsets -3..3, by derivative
#: order.  Rows annihilate constants; odd orders are antisymmetric, even
#: orders symmetric.
STENCIL_COEFFS = {
    1: (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60),
    2: (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90),
    3: (1 / 8, -1.0, 13 / 8, 0.0, -13 / 8, 1.0, -1 / 8),
    4: (-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6),
}

OFFSETS = (-3, -2, -1, 0, 1, 2, 3)


@dataclass(frozen=True)
class Stencil7:
    """One 7-point central difference row with its grid scaling."""

    order: int
    coeffs: tuple
    scale: float  # dx**(-order)

    @classmethod
    def for_spacing(cls, order: int, dx: float) -> "Stencil7":
        if order not in STENCIL_COEFFS:
            raise ValueError(f"derivative order must be 1..4, got {order}")
        return cls(order=order, coeffs=STENCIL_COEFFS[order], scale=dx ** (-order))


def apply_stencil(values: np.ndarray, s: Stencil7, i: int) -> float:
    """Derivative of ``values`` at index ``i`` (periodic indexing)."""
    n = values.shape[0]
    if n < 7:
        raise MeshTooSmall(f"stencils need at least 7 points, got {n}")
    acc = 0.0
    for c, o in zip(s.coeffs, OFFSETS):
        acc += c * values[(i + o) % n]
    return acc * s.scale


def apply_stencil_all(values: np.ndarray, s: Stencil7) -> np.ndarray:
    """Vectorized :func:`apply_stencil` over every index."""
    if values.shape[0] < 7:
        raise MeshTooSmall(f"stencils need at least 7 points, got {values.shape[0]}")
    out = np.zeros_like(values, dtype=float)
    for c, o in zip(s.coeffs, OFFSETS):
        if c != 0.0:
            out += c * np.roll(values, -o)
    return out * s.scale


def derivative(values: np.ndarray, order: int, dx: float) -> np.ndarray:
    return apply_stencil_all(values, Stencil7.for_spacing(order, dx))


@dataclass(frozen=True)
class Thresholds:
    """Coupling thresholds: delta0 for the remainder, eta0 for the
    perturbation norm."""

    delta0: float
    eta0: float

    def __post_init__(self):
        if self.delta0 <= 0.0 or self.eta0 <= 0.0:
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class DomainLabels:
    """Per-cell and per-interface kinetic flags (True = Kinetic)."""

    kinetic_cells: np.ndarray
    kinetic_ifaces: np.ndarray

    @classmethod
    def from_cells(cls, kinetic_cells: np.ndarray) -> "DomainLabels":
        kc = np.asarray(kinetic_cells, dtype=bool)
        # interface i+1/2 is kinetic iff cell i or cell i+1 is kinetic
        ki = kc | np.roll(kc, -1)
        return cls(kinetic_cells=kc, kinetic_ifaces=ki)

    @classmethod
    def all_kinetic(cls, nx: int) -> "DomainLabels":
        return cls.from_cells(np.ones(nx, dtype=bool))

    @classmethod
    def all_fluid(cls, nx: int) -> "DomainLabels":
        return cls.from_cells(np.zeros(nx, dtype=bool))

    @property
    def kinetic_fraction(self) -> float:
        return float(np.count_nonzero(self.kinetic_cells)) / self.kinetic_cells.size


def remainder_from_fields(
    rho: np.ndarray,
    E: np.ndarray,
    dtE_centers: np.ndarray,
    rho_bar: float,
    mesh: PhaseMesh,
) -> np.ndarray:
    """Remainder indicator from cell density, interface field and a
    cell-centered dE/dt estimate."""
    from .fluid import fluid_flux  # local import to avoid a cycle

    dx = mesh.dx
    J_c = mesh.iface_to_center(fluid_flux(rho, E, mesh))
    E_c = mesh.iface_to_center(E)
    d1J = derivative(J_c, 1, dx)
    d2J = derivative(J_c, 2, dx)
    d3J = derivative(J_c, 3, dx)
    d1rho = derivative(rho, 1, dx)
    return -d3J + E_c * d2J + (2.0 * rho - 3.0 * rho_bar) * d1J + 2.0 * J_c * d1rho - d1rho * dtE_centers


def remainder_indicator(
    rho: np.ndarray,
    E: np.ndarray,
    E_prev: np.ndarray,
    dt: float,
    rho_bar: float,
    mesh: PhaseMesh,
) -> np.ndarray:
    """Per-cell remainder R.  dE/dt uses the first-order backward difference
    (E - E_prev)/dt averaged to centers; pass E_prev = E on the first step."""
    dtE = mesh.iface_to_center((E - E_prev) / dt)
    return remainder_from_fields(rho, E, dtE, rho_bar, mesh)


def perturbation_indicator(g: np.ndarray, mesh: PhaseMesh) -> np.ndarray:
    """Per-cell L2 velocity norm of the interface-staggered perturbation,
    averaging the squares of the two bounding interfaces."""
    sq = bracket_staggered(g * g, mesh.vgrid)
    return np.sqrt(0.5 * (mesh.roll_prev(sq) + sq))


def update_labels(
    R: np.ndarray,
    gnorm: np.ndarray,
    th: Thresholds,
    combine: str = "or",
) -> DomainLabels:
    """Fresh labels from the two indicators (no hysteresis).

    A cell is Fluid iff |R| < delta0 OR gnorm < eta0 (each criterion alone
    admits the fluid description); ``combine="and"`` requires both.
    """
    fluid_R = np.abs(R) < th.delta0
    fluid_g = gnorm < th.eta0
    if combine == "or":
        fluid = fluid_R | fluid_g
    elif combine == "and":
        fluid = fluid_R & fluid_g
    else:
        raise ValueError(f"combine must be 'or' or 'and', got {combine!r}")
    return DomainLabels.from_cells(~fluid)
