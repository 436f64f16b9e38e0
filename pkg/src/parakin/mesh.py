"""Discretized phase space: spatial torus, tensor velocity grid, discrete
Maxwellian and its moments.

The spatial domain is the torus [0, x_star) split into ``nx`` uniform cells.
Cell centers sit at x_i = (i + 1/2) dx; interface ``i`` carries the point
x_{i+1/2} = (i + 1) dx, so interface ``i`` separates cells ``i`` and
``i + 1 (mod nx)``.  Velocities live on a tensor grid of cell centers in the
box [-v_star, v_star]^3.  Each velocity axis is built by mirroring its
positive half so that for every center v there is a bit-exact center -v;
velocity sums fold these mirror pairs first, which makes integrals of
odd-in-xi integrands vanish exactly in floating point and fixes the summation
order once and for all (parallel runs stay reproducible).

The discrete Maxwellian is renormalized so that its discrete mass is 1; the
micro-macro decomposition f = rho*M + g then carries all mass in rho.  The
second xi-moment m2 is kept at its discrete value rather than replaced by the
continuum limit 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshTooSmall

TWO_PI = 2.0 * np.pi


def gaussian_weight(v_sq):
    """Unnormalized Maxwellian weight exp(-|v|^2/2) / (2 pi)^(3/2)."""
    return np.exp(-0.5 * v_sq) / TWO_PI**1.5


def _symmetric_centers(n: int, v_star: float) -> np.ndarray:
    """Cell centers of a uniform grid on [-v_star, v_star], bit-exactly
    symmetric about 0 (mirrored halves; odd counts get an exact 0 center)."""
    dv = 2.0 * v_star / n
    half = (np.arange(n // 2) + 0.5) * dv
    if n % 2 == 0:
        return np.concatenate([-half[::-1], half])
    inner = (np.arange(n // 2) + 1.0) * dv
    return np.concatenate([-inner[::-1], [0.0], inner])


@dataclass(frozen=True)
class MeshSpec:
    """Grid counts and domain sizes (dimensionless)."""

    nx: int
    nvx: int
    nvy: int
    nvz: int
    x_star: float = TWO_PI
    v_star: float = 8.0

    def validate(self) -> None:
        if self.nx < 7:
            raise MeshTooSmall(f"nx={self.nx}: spatial stencils need at least 7 cells")
        for name, n in (("nvx", self.nvx), ("nvy", self.nvy), ("nvz", self.nvz)):
            if n < 4:
                raise MeshTooSmall(f"{name}={n}: velocity grids need at least 4 cells")
        if self.x_star <= 0.0 or self.v_star <= 0.0:
            raise ValueError("x_star and v_star must be positive")


@dataclass(frozen=True)
class VelocityGrid:
    """Tensor velocity grid with discrete Maxwellian weights.

    ``M`` has shape (nvx, nvy, nvz); ``xi`` is the x-component of the cell
    centers shaped (nvx, 1, 1) for broadcasting against velocity-indexed
    arrays; ``centers`` lists the full 3D centers, shape (nvx, nvy, nvz, 3).
    ``m0`` and ``m2`` are the discrete mass and second xi-moment of M, fixed
    at construction and reused everywhere (no recomputation drift).
    """

    vx: np.ndarray
    vy: np.ndarray
    vz: np.ndarray
    dvx: float
    dv3: float
    M: np.ndarray
    xi: np.ndarray
    m0: float
    m2: float
    centers: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.M.shape


def _fold_xi(q: np.ndarray, axis: int):
    """Split q into mirror-pair sums along the xi axis plus (for odd counts)
    the middle slice.  Pair sums of odd-in-xi fields are exactly 0.0."""
    n = q.shape[axis]
    h = n // 2
    idx_lo = [slice(None)] * q.ndim
    idx_hi = [slice(None)] * q.ndim
    idx_lo[axis] = slice(0, h)
    idx_hi[axis] = slice(None, n - h - 1, -1)
    folded = q[tuple(idx_lo)] + q[tuple(idx_hi)]
    if n % 2 == 1:
        idx_mid = [slice(None)] * q.ndim
        idx_mid[axis] = h
        return folded, q[tuple(idx_mid)]
    return folded, None


def bracket(q: np.ndarray, grid: VelocityGrid) -> float:
    """Discrete velocity integral <q> = sum_j q_j dv^3 with the fixed
    symmetric-pairing summation order."""
    if q.shape != grid.shape:
        raise ValueError(f"expected shape {grid.shape}, got {q.shape}")
    folded, mid = _fold_xi(q, axis=0)
    total = folded.sum()
    if mid is not None:
        total = total + mid.sum()
    return float(total * grid.dv3)


def bracket_staggered(q: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    """Velocity integral of a spatially indexed field, shape (..., nvx, nvy,
    nvz) -> (...).  Same folding order as :func:`bracket` per spatial index."""
    if q.shape[-3:] != grid.shape:
        raise ValueError(f"expected trailing shape {grid.shape}, got {q.shape}")
    folded, mid = _fold_xi(q, axis=q.ndim - 3)
    total = folded.sum(axis=(-3, -2, -1))
    if mid is not None:
        total = total + mid.sum(axis=(-2, -1))
    return total * grid.dv3


@dataclass(frozen=True)
class MacroState:
    """Cell densities rho_i and interface field E_{i+1/2} at time t."""

    rho: np.ndarray
    E: np.ndarray
    t: float


@dataclass(frozen=True)
class MicroState:
    """Interface-staggered perturbation g_{i+1/2,j}; shape (nx, nvx, nvy, nvz)."""

    g: np.ndarray


class PhaseMesh:
    """Immutable discretization shared (read-only) by every solver component."""

    def __init__(self, spec: MeshSpec, vgrid: VelocityGrid):
        self.spec = spec
        self.vgrid = vgrid
        self.nx = spec.nx
        self.dx = spec.x_star / spec.nx
        self.x_star = spec.x_star
        self.v_star = spec.v_star
        self.x_centers = (np.arange(spec.nx) + 0.5) * self.dx
        self.x_interfaces = (np.arange(spec.nx) + 1.0) * self.dx
        # upwind splits of xi, cached once (shape (nvx, 1, 1))
        self.xi_plus = np.maximum(vgrid.xi, 0.0)
        self.xi_minus = np.minimum(vgrid.xi, 0.0)
        self.xi_M = vgrid.xi * vgrid.M

    def bracket(self, q: np.ndarray) -> float:
        return bracket(q, self.vgrid)

    def bracket_x(self, q: np.ndarray) -> np.ndarray:
        return bracket_staggered(q, self.vgrid)

    # -- periodic helpers (spatial axis 0) ----------------------------------

    @staticmethod
    def roll_prev(a: np.ndarray) -> np.ndarray:
        """Value at index i-1 (periodic)."""
        return np.roll(a, 1, axis=0)

    @staticmethod
    def roll_next(a: np.ndarray) -> np.ndarray:
        """Value at index i+1 (periodic)."""
        return np.roll(a, -1, axis=0)

    def iface_to_center(self, q: np.ndarray) -> np.ndarray:
        """Average interface values onto cell centers (cell i from interfaces
        i-1 and i)."""
        return 0.5 * (self.roll_prev(q) + q)

    def center_to_iface(self, q: np.ndarray) -> np.ndarray:
        """Arithmetic mean of adjacent cells onto interface i+1/2."""
        return 0.5 * (q + self.roll_next(q))


def build_mesh(spec: MeshSpec) -> PhaseMesh:
    """Construct the phase-space mesh with the normalized discrete Maxwellian.

    Deterministic: identical specs give bit-identical grids.
    """
    spec.validate()
    vx = _symmetric_centers(spec.nvx, spec.v_star)
    vy = _symmetric_centers(spec.nvy, spec.v_star)
    vz = _symmetric_centers(spec.nvz, spec.v_star)
    dvx = 2.0 * spec.v_star / spec.nvx
    dvy = 2.0 * spec.v_star / spec.nvy
    dvz = 2.0 * spec.v_star / spec.nvz
    dv3 = dvx * dvy * dvz

    v_sq = vx[:, None, None] ** 2 + vy[None, :, None] ** 2 + vz[None, None, :] ** 2
    M = gaussian_weight(v_sq)
    xi = vx[:, None, None]

    probe = VelocityGrid(
        vx=vx, vy=vy, vz=vz, dvx=dvx, dv3=dv3, M=M, xi=xi,
        m0=0.0, m2=0.0, centers=np.empty(0),
    )
    # two normalization passes pin the folded mass <M> to 1 up to the last ulp
    for _ in range(2):
        M = M / bracket(M, probe)
        probe = VelocityGrid(
            vx=vx, vy=vy, vz=vz, dvx=dvx, dv3=dv3, M=M, xi=xi,
            m0=0.0, m2=0.0, centers=np.empty(0),
        )

    centers = np.stack(
        np.broadcast_arrays(vx[:, None, None], vy[None, :, None], vz[None, None, :]),
        axis=-1,
    )
    grid = VelocityGrid(
        vx=vx, vy=vy, vz=vz, dvx=dvx, dv3=dv3, M=M, xi=xi,
        m0=bracket(M, probe), m2=bracket(xi**2 * M, probe),
        centers=centers,
    )
    return PhaseMesh(spec, grid)
