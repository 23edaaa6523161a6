"""Macroscopic mass profiles on [0,1] and the mass-transport partial order.

A profile is an atom of mass ``atom_mass`` sitting exactly at r=0 plus a
piecewise-constant density over M uniform cells.  Everything downstream
(order checks, cut positions, gap diagnostics) is phrased through the tail
mass function

    F(r) = atom_mass * 1{r=0} + integral of the density over [r,1]

which is piecewise linear in r, so all queries here are evaluated in closed
form from suffix sums -- no quadrature error enters the order tests.

The partial order ``u <= v  iff  F(r;u) <= F(r;v) for all r`` is "v is u
with some mass moved to the right"; it is *not* pointwise density
comparison.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MacroProfile",
    "MacroParams",
    "GridMismatchError",
    "tail_mass",
    "profile_edge",
    "leq",
    "tv_distance",
    "abs_difference",
    "macro_block_average",
    "sup_tail_distance",
]

#: tolerance used when comparing analytically-exact quantities
EXACT_TOL = 1e-12

DEFAULT_CELLS = 512


class GridMismatchError(ValueError):
    """Two profiles live on incompatible grids and resampling is disabled."""


@dataclass(frozen=True)
class MacroProfile:
    """Atom at the origin plus a piecewise-constant density on [0,1].

    Instances are immutable (the density array is frozen) and safe to share
    across workers.  ``validate=False`` admits signed densities; it exists
    only for the source/sink stepping scheme in :mod:`reswalk.barriers`,
    which carries a negative boundary correction at r=1.
    """

    atom_mass: float
    density: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float)
        if dens.ndim != 1 or dens.size == 0:
            raise ValueError("density must be a non-empty 1-d array")
        dens = dens.copy()
        dens.setflags(write=False)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "atom_mass", float(self.atom_mass))
        if self.validate:
            if self.atom_mass < 0:
                raise ValueError(f"negative atom mass {self.atom_mass}")
            if np.any(dens < 0):
                raise ValueError("negative density cell")
        if not np.all(np.isfinite(dens)) or not np.isfinite(self.atom_mass):
            raise ValueError("non-finite profile data")

    # -- grid geometry -------------------------------------------------

    @property
    def cells(self) -> int:
        return self.density.size

    @property
    def cell_width(self) -> float:
        return 1.0 / self.density.size

    def cell_edges(self) -> np.ndarray:
        """Cell boundaries r_0=0 < r_1 < ... < r_M=1."""
        return np.arange(self.cells + 1) / self.cells

    def cell_midpoints(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) / self.cells

    # -- mass ----------------------------------------------------------

    def cell_masses(self) -> np.ndarray:
        return self.density * self.cell_width

    def bulk_mass(self) -> float:
        """Mass of the density part alone, F(0+)."""
        return float(np.sum(self.cell_masses()))

    def total_mass(self) -> float:
        """F(0): atom plus density mass."""
        return self.atom_mass + self.bulk_mass()

    def boundary_tails(self) -> np.ndarray:
        """F at the cell boundaries, excluding the atom (length M+1).

        Entry i is the density mass in [i/M, 1]; entry M is 0.  Computed by
        a right-to-left cumulative sum so a zero entry certifies that every
        cell to its right is exactly zero.
        """
        masses = self.cell_masses()
        tails = np.zeros(self.cells + 1)
        tails[:-1] = np.cumsum(masses[::-1])[::-1]
        return tails

    # -- construction helpers -------------------------------------------

    @staticmethod
    def constant(value: float, cells: int = DEFAULT_CELLS, atom_mass: float = 0.0) -> "MacroProfile":
        return MacroProfile(atom_mass, np.full(cells, float(value)))

    @staticmethod
    def step(breaks: list[float], values: list[float], cells: int = DEFAULT_CELLS,
             atom_mass: float = 0.0) -> "MacroProfile":
        """Piecewise-constant profile: ``values[k]`` on [breaks[k], breaks[k+1]).

        ``breaks`` must start at 0 and end at 1.  Cells straddling a break
        receive the exact cell-average, so total mass is preserved.
        """
        if breaks[0] != 0.0 or breaks[-1] != 1.0 or len(values) != len(breaks) - 1:
            raise ValueError("breaks must run from 0 to 1 with one value per piece")
        edges = np.arange(cells + 1) / cells
        dens = np.zeros(cells)
        for k in range(len(values)):
            lo, hi = breaks[k], breaks[k + 1]
            overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
            dens += values[k] * overlap * cells
        return MacroProfile(atom_mass, dens)

    @staticmethod
    def from_site_values(values: np.ndarray, atom_mass: float = 0.0) -> "MacroProfile":
        return MacroProfile(atom_mass, np.asarray(values, dtype=float))

    def with_atom(self, atom_mass: float) -> "MacroProfile":
        return MacroProfile(atom_mass, self.density, validate=self.validate)

    # -- resampling -----------------------------------------------------

    def resample(self, cells: int) -> "MacroProfile":
        """Mass-preserving aggregation onto a coarser grid (divisor of M)."""
        if cells == self.cells:
            return self
        if self.cells % cells != 0:
            raise GridMismatchError(
                f"cannot aggregate {self.cells} cells onto {cells} without splitting")
        factor = self.cells // cells
        dens = self.density.reshape(cells, factor).mean(axis=1)
        return MacroProfile(self.atom_mass, dens, validate=self.validate)

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "atom_mass": self.atom_mass,
            "cell_width": self.cell_width,
            "densities": self.density.tolist(),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "MacroProfile":
        dens = np.asarray(data["densities"], dtype=float)
        width = float(data.get("cell_width", 1.0 / dens.size))
        if abs(width * dens.size - 1.0) > 1e-9:
            raise ValueError("cell_width * len(densities) must equal 1")
        return MacroProfile(float(data["atom_mass"]), dens)

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def load_json(text: str) -> "MacroProfile":
        return MacroProfile.from_json_dict(json.loads(text))

    def to_csv(self) -> str:
        """Plot-ready CSV with columns r_left, density."""
        buf = io.StringIO()
        buf.write("r_left,density\n")
        edges = self.cell_edges()
        for i in range(self.cells):
            buf.write(f"{edges[i]:.10g},{self.density[i]:.12g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class MacroParams:
    """Reservoir current j and the time step of the bracketing flows."""

    j: float
    delta: float

    def __post_init__(self):
        if not self.j > 0:
            raise ValueError(f"current j must be positive, got {self.j}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


# ---------------------------------------------------------------------------
# tail mass and derived queries
# ---------------------------------------------------------------------------

def tail_mass(u: MacroProfile, r: float) -> float:
    """F(r;u): the mass of u in [r,1]; includes the atom only when r=0."""
    if r < 0.0 or r > 1.0:
        raise ValueError(f"r={r} outside [0,1]")
    tails = u.boundary_tails()
    m = u.cells
    if r == 0.0:
        return u.atom_mass + float(tails[0])
    if r == 1.0:
        return 0.0
    pos = r * m
    i = min(int(pos), m - 1)
    # linear within cell i: mass of [r, (i+1)/m] is density_i * ((i+1)/m - r)
    return float(tails[i + 1] + u.density[i] * ((i + 1) / m - r))


def tail_at_boundaries(u: MacroProfile) -> np.ndarray:
    """F at the cell boundaries with the atom folded into entry 0."""
    tails = u.boundary_tails()
    out = tails.copy()
    out[0] += u.atom_mass
    return out


def profile_edge(u: MacroProfile):
    """Rightmost point of the support: inf{r : F(r;u)=0}, or None when >= 1.

    Returns 0.0 for a profile whose mass is entirely in the atom (and for
    the zero profile).  A suffix sum of non-negative cells is exactly zero
    iff every cell beyond is zero, so no tolerance is involved.
    """
    tails = u.boundary_tails()
    idx = int(np.argmax(tails == 0.0))  # first boundary with empty tail
    if idx == u.cells and u.density[-1] > 0.0:
        return None  # support reaches 1; edge excluded by the strict "< 1"
    return idx / u.cells


def _aligned(u: MacroProfile, v: MacroProfile, resample: bool):
    if u.cells == v.cells:
        return u, v
    if not resample:
        raise GridMismatchError(f"grids differ ({u.cells} vs {v.cells}) and resampling is off")
    m = min(u.cells, v.cells)
    return u.resample(m), v.resample(m)


def leq(u: MacroProfile, v: MacroProfile, tol: float = EXACT_TOL,
        resample: bool = False) -> bool:
    """Mass-transport order: F(r;u) <= F(r;v) + tol for every r.

    F is piecewise linear with kinks only at cell boundaries, so checking
    the boundaries plus r=0 (where the atoms enter) is exhaustive.
    """
    u, v = _aligned(u, v, resample)
    fu = tail_at_boundaries(u)
    fv = tail_at_boundaries(v)
    return bool(np.all(fu <= fv + tol))


def sup_tail_distance(u: MacroProfile, v: MacroProfile, resample: bool = False) -> float:
    """sup_r |F(r;u) - F(r;v)|, attained at a cell boundary or r=0."""
    u, v = _aligned(u, v, resample)
    return float(np.max(np.abs(tail_at_boundaries(u) - tail_at_boundaries(v))))


def abs_difference(u: MacroProfile, v: MacroProfile, resample: bool = False) -> MacroProfile:
    """The profile |u-v|: atom |c_u-c_v| plus density |rho_u-rho_v|."""
    u, v = _aligned(u, v, resample)
    return MacroProfile(abs(u.atom_mass - v.atom_mass), np.abs(u.density - v.density))


def tv_distance(u: MacroProfile, v: MacroProfile, resample: bool = False) -> float:
    """Total variation |u-v|_1 = |c_u-c_v| + int |rho_u-rho_v|, exact."""
    u, v = _aligned(u, v, resample)
    return abs(u.atom_mass - v.atom_mass) + float(
        np.sum(np.abs(u.density - v.density)) * u.cell_width)


def macro_block_average(u: MacroProfile, x: int, ell: int, eps: float) -> float:
    """Average density seen through the lattice window [x, x+ell):

        (F(eps*x) - F(eps*(x+ell))) / (eps*ell)

    The rightmost lattice window overhangs r=1 by one site; F continues by
    zero there, so the overhang is clamped rather than rejected.
    """
    lo, hi = eps * x, eps * (x + ell)
    if lo < 0.0 or hi > 1.0 + eps + 1e-12 or ell <= 0:
        raise ValueError(f"window [{lo},{hi}] outside [0,1]")
    return (tail_mass(u, lo) - tail_mass(u, min(hi, 1.0))) / (eps * ell)
