"""Truncated uniform phase-space grid, density fields, moments, norms, projection.

Cells are centered: x_i = -x_max + (i+1/2)dx, v_j = -v_max + (j+1/2)dv.
nv must be even so v = 0 falls on a cell edge and 1/|v| factors are never
evaluated at zero.  All quadrature is the midpoint rule (sum times cell
size), which makes norm(f, L1 with unit weight) equal mass(f) exactly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import ModelParams, jbracket, maxwellian, tumbling_rate

ABSORBING = "absorbing-outflow"
PERIODIC = "periodic"


@dataclass(frozen=True)
class PhaseGrid:
    x_max: float
    v_max: float
    nx: int
    nv: int
    bc: str = ABSORBING

    def __post_init__(self):
        assert self.x_max > 0 and self.v_max > 0
        assert self.nx > 0 and self.nv > 0
        assert self.nv % 2 == 0, "nv must be even (v=0 on a cell edge)"
        assert self.bc in (ABSORBING, PERIODIC)

    @property
    def dx(self):
        return 2.0 * self.x_max / self.nx

    @property
    def dv(self):
        return 2.0 * self.v_max / self.nv

    @property
    def cell(self):
        return self.dx * self.dv

    @cached_property
    def x(self):
        return -self.x_max + (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def v(self):
        return -self.v_max + (np.arange(self.nv) + 0.5) * self.dv

    def alignment(self):
        """z(x,v) = x*v/jbracket(x) as an nx-by-nv array."""
        return np.outer(self.x / jbracket(self.x), self.v)

    def discrete_maxwellian(self, p: ModelParams):
        """M sampled at cell centers, renormalized to unit discrete mass.

        The renormalization (truncation + quadrature correction, relative
        size ~1e-12 for default grids) keeps the discrete collision operator
        exactly neutral on averages: sum(M)*dv = 1 and, by the v-symmetry of
        the grid and oddness of psi, sum(Lambda*M)*dv = 1.
        """
        m = maxwellian(self.v, p)
        return m / (m.sum() * self.dv)

    def field(self, values):
        return Field(self, np.asarray(values, dtype=float))


class Field:
    """Nonnegative density sampled at cell centers (values may carry signed
    deviations for entropy work; constructors of physical states assert >= 0)."""

    def __init__(self, grid: PhaseGrid, values):
        values = np.asarray(values, dtype=float)
        assert values.shape == (grid.nx, grid.nv)
        assert np.all(np.isfinite(values)), "field values must be finite"
        self.grid = grid
        self.values = values

    def mass(self):
        return float(self.values.sum() * self.grid.cell)

    def copy(self):
        return Field(self.grid, self.values.copy())

    def __add__(self, other):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a):
        return Field(self.grid, self.values * a)

    __rmul__ = __mul__


@dataclass
class MomentSet:
    """x-indexed velocity moments of a field."""

    rho: np.ndarray      # int f dv
    flux: np.ndarray     # int v f dv
    p2: np.ndarray       # int v^2 f dv
    p4: np.ndarray       # int v^4 f dv
    theta: np.ndarray    # int Lambda f dv
    a_flux: np.ndarray   # int Lambda v f dv


def moments(f: Field, p: ModelParams) -> MomentSet:
    g = f.grid
    dv = g.dv
    vals = f.values
    v = g.v
    lam = tumbling_rate(g.alignment(), p)
    return MomentSet(
        rho=vals.sum(axis=1) * dv,
        flux=vals @ v * dv,
        p2=vals @ v**2 * dv,
        p4=vals @ v**4 * dv,
        theta=(lam * vals).sum(axis=1) * dv,
        a_flux=(lam * vals) @ v * dv,
    )


def project_pi(f: Field, G: Field) -> Field:
    """Macroscopic projection Pi f = (rho_f / rho_G) G."""
    g = f.grid
    rho_f = f.values.sum(axis=1) * g.dv
    rho_G = G.values.sum(axis=1) * g.dv
    if np.any(rho_G < 1e-300):
        raise ValueError("rho_G underflows on some column; projection undefined")
    return Field(g, (rho_f / rho_G)[:, None] * G.values)


@dataclass
class WeightedNorm:
    """kind in {'L1', 'L2/G', 'L2m/G', 'Linf/G'}; weight is an nx-by-nv array
    (or None for 1); G is the reference state for the /G kinds."""

    kind: str
    weight: np.ndarray | None = None
    G: Field | None = None


def norm(f: Field, n: WeightedNorm) -> float:
    g = f.grid
    w = 1.0 if n.weight is None else n.weight
    if n.kind == "L1":
        val = float((np.abs(f.values) * w).sum() * g.cell)
    elif n.kind in ("L2/G", "L2m/G"):
        assert n.G is not None
        q = f.values**2 / n.G.values
        if n.kind == "L2m/G":
            q = q * w
        val = float(np.sqrt(q.sum() * g.cell))
    elif n.kind == "Linf/G":
        assert n.G is not None
        val = float(np.max(np.abs(f.values) / n.G.values))
    else:
        raise ValueError(f"unknown norm kind {n.kind!r}")
    if not np.isfinite(val):
        bad = np.unravel_index(np.nanargmax(np.abs(f.values * (w if np.ndim(w) else 1.0))),
                               f.values.shape)
        raise OverflowError(f"norm overflow near cell {bad}")
    return val
