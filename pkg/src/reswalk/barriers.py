"""Bracketing flows for the free-boundary limit: cut-and-paste plus heat flow.

One time step of size delta moves mass j*delta from the right end of the
profile onto an atom at the origin (the "cut-and-paste") and diffuses by
the Neumann kernel.  Doing the diffusion first gives the lower flow, the
cut first gives the upper flow; iterated over a dyadic ladder of steps
delta_n = t 2^-n the two flows pinch the hydrodynamic profile between
them, with a certified total-variation gap of at most 4*j*delta_n.

Also here: the explicit source/sink solution valid while the density at
r=1 stays positive, the linear source/sink stepping scheme it is the limit
of, and the lattice discretization of the lower flow used when comparing
against particle runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from reswalk.kernel import DEFAULT_TAIL_TOL, cell_transfer, convolve
from reswalk.profiles import MacroProfile, leq, sup_tail_distance, tv_distance

__all__ = [
    "NotInDomainError",
    "GridResolutionError",
    "cut_and_paste",
    "barrier_step",
    "barrier_evolve",
    "BarrierLadder",
    "build_ladder",
    "SeparatingElement",
    "separating_element",
    "explicit_no_edge",
    "q_delta_step",
    "q_delta_evolve",
    "DiscreteScheme",
    "discrete_scheme_from_profile",
    "discrete_evolution",
]

LOWER, UPPER = "lower", "upper"


class NotInDomainError(ValueError):
    """Profile has too little bulk mass for the requested cut j*delta."""


class GridResolutionError(ValueError):
    """Kernel width sqrt(delta) under-resolves the grid; refine delta or coarsen."""


def cut_and_paste(u: MacroProfile, j: float, delta: float) -> MacroProfile:
    """Move mass j*delta from the right end of u onto the atom at 0.

    The cut point is the leftmost r where the tail mass of the density
    equals j*delta; the cell containing it keeps exactly the fractional
    mass, so F(0) is conserved to the last bit.  Requires the density
    (atom excluded) to carry more than j*delta of mass.
    """
    amount = j * delta
    tails = u.boundary_tails()
    bulk = float(tails[0])
    if not bulk > amount:
        raise NotInDomainError(
            f"density mass {bulk:.6g} <= cut amount j*delta = {amount:.6g}")
    # Kept mass of cell c is clip(tail(c) - amount, 0, mass_c): full left of
    # the cut, the fractional remainder in the cut cell, zero beyond.  The
    # cut sits strictly right of 0 (bulk > amount), so the atom is intact.
    masses = u.cell_masses()
    kept = np.clip(tails[:-1] - amount, 0.0, masses)
    return MacroProfile(u.atom_mass + amount, kept * u.cells)


def cut_position(u: MacroProfile, j: float, delta: float) -> float:
    """Leftmost r where the density tail mass equals j*delta."""
    amount = j * delta
    tails = u.boundary_tails()
    if not tails[0] > amount:
        raise NotInDomainError(
            f"density mass {tails[0]:.6g} <= cut amount j*delta = {amount:.6g}")
    idx = int(np.argmax(tails <= amount))  # leftmost boundary at/below the level
    if tails[idx] == amount:
        return idx / u.cells
    i = idx - 1  # crossing is interior to the previous cell
    return i / u.cells + (tails[i] - amount) / u.density[i]


def _check_resolution(u: MacroProfile, delta: float):
    # a kernel narrower than two cells invalidates the gap diagnostics
    if np.sqrt(delta) < 2.0 * u.cell_width:
        raise GridResolutionError(
            f"sqrt(delta)={np.sqrt(delta):.4g} is below 2 cell widths "
            f"({2 * u.cell_width:.4g}); use at least {int(np.ceil(2.0 / np.sqrt(delta)))} "
            f"cells or a larger delta")


def barrier_step(u: MacroProfile, side: str, j: float, delta: float,
                 tail_tol: float = DEFAULT_TAIL_TOL) -> MacroProfile:
    """One step of the lower (diffuse, then cut) or upper (cut, then diffuse) flow."""
    _check_resolution(u, delta)
    if side == LOWER:
        return cut_and_paste(convolve(delta, u, tail_tol), j, delta)
    if side == UPPER:
        return convolve(delta, cut_and_paste(u, j, delta), tail_tol)
    raise ValueError(f"side must be '{LOWER}' or '{UPPER}', got {side!r}")


def barrier_evolve(u: MacroProfile, side: str, j: float, delta: float,
                   n_steps: int, tail_tol: float = DEFAULT_TAIL_TOL) -> MacroProfile:
    """n_steps of barrier_step; n_steps = 0 returns u unchanged."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    out = u
    for _ in range(n_steps):
        out = barrier_step(out, side, j, delta, tail_tol)
    return out


# ---------------------------------------------------------------------------
# dyadic ladder and the separating element
# ---------------------------------------------------------------------------

@dataclass
class BarrierLadder:
    """Lower/upper flows at one common time over steps delta_n = t 2^-n."""

    initial: MacroProfile
    time: float
    j: float
    schedule: list[float]
    lowers: list[MacroProfile]
    uppers: list[MacroProfile]
    gaps: list[float] = field(default_factory=list)
    mass_errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.gaps:
            self.gaps = [tv_distance(up, lo) for up, lo in zip(self.uppers, self.lowers)]
        if not self.mass_errors:
            m0 = self.initial.total_mass()
            self.mass_errors = [
                max(abs(lo.total_mass() - m0), abs(up.total_mass() - m0))
                for lo, up in zip(self.lowers, self.uppers)
            ]

    @property
    def depth(self) -> int:
        return len(self.schedule)

    def rows(self) -> list[dict]:
        return [
            {"n": n + 1, "delta": self.schedule[n], "gap": self.gaps[n],
             "gap_bound": 4.0 * self.j * self.schedule[n],
             "mass_error": self.mass_errors[n]}
            for n in range(self.depth)
        ]


def build_ladder(u: MacroProfile, j: float, t: float, depth: int,
                 gap_tol: float = 0.0, tail_tol: float = DEFAULT_TAIL_TOL) -> BarrierLadder:
    """Run both flows for delta_n = t 2^-n, n = 1..depth (or until gap_tol).

    Rungs whose step is too coarse for the available bulk mass (the flow is
    only defined while j*delta stays below it) are skipped, so a ladder
    over a long horizon starts at the first feasible refinement.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    schedule, lowers, uppers = [], [], []
    for n in range(1, depth + 1):
        delta = t * 2.0 ** (-n)
        if j * delta >= u.bulk_mass():
            continue
        steps = 2 ** n
        schedule.append(delta)
        lowers.append(barrier_evolve(u, LOWER, j, delta, steps, tail_tol))
        uppers.append(barrier_evolve(u, UPPER, j, delta, steps, tail_tol))
        if gap_tol > 0.0 and tv_distance(uppers[-1], lowers[-1]) < gap_tol:
            break
    if not schedule:
        raise NotInDomainError(
            f"no feasible rung: j*t/2 = {j * t / 2:.4g} exceeds bulk mass at depth {depth}")
    return BarrierLadder(u, t, j, schedule, lowers, uppers)


@dataclass
class SeparatingElement:
    """Certified bracket for the limiting profile at one time.

    ``profile`` is the deepest upper flow: it decreases monotonically with
    refinement and stays above the limit, while every computed lower flow
    stays below, so the achieved TV gap bounds the distance to the limit.
    ``flagged`` marks runs that exhausted the depth without reaching the
    requested gap.
    """

    profile: MacroProfile
    time: float
    achieved_gap: float
    refinement_depth: int
    flagged: bool
    ladder: BarrierLadder

    def bracket_ok(self, tol: float = 1e-9) -> bool:
        return all(leq(lo, self.profile, tol) for lo in self.ladder.lowers) and \
            all(leq(self.profile, up, tol) for up in self.ladder.uppers)


def separating_element(u: MacroProfile, j: float, t: float, depth: int,
                       gap_tol: float = 0.0,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> SeparatingElement:
    """Bracket the limit profile at time t by a dyadic refinement ladder."""
    if not u.total_mass() > 0:
        raise NotInDomainError("initial profile carries no mass")
    ladder = build_ladder(u, j, t, depth, gap_tol, tail_tol)
    gap = ladder.gaps[-1]
    flagged = gap_tol > 0.0 and gap > gap_tol
    return SeparatingElement(ladder.uppers[-1], t, gap, ladder.depth, flagged, ladder)


# ---------------------------------------------------------------------------
# explicit solution while the density at r=1 stays positive
# ---------------------------------------------------------------------------

def _boundary_flux_cells(t: float, cells: int, n_nodes: int,
                         tail_tol: float = DEFAULT_TAIL_TOL):
    """Per-cell masses of int_0^t [G_s(., 0) - G_s(., 1)] ds.

    The substitution s = sigma^2 removes the 1/sqrt(s) short-time spike;
    after it a fixed Gauss-Legendre rule converges fast.  Each node uses
    the exact per-cell masses of the two boundary kernels, whose difference
    integrates to zero over [0,1], so the returned masses sum to zero no
    matter the node count.
    """
    from reswalk.kernel import _boundary_point_masses, image_count

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    sqrt_t = np.sqrt(t)
    sigma = 0.5 * sqrt_t * (nodes + 1.0)
    w = 0.5 * sqrt_t * weights * 2.0 * sigma  # ds = 2 sigma d sigma
    out = np.zeros(cells)
    for sg, wt in zip(sigma, w):
        s = sg * sg
        kmax = image_count(s, tail_tol)
        out += wt * (_boundary_point_masses(s, kmax, cells, at_one=False)
                     - _boundary_point_masses(s, kmax, cells, at_one=True))
    return out


def explicit_no_edge_value(u: MacroProfile, j: float, t: float, r: float,
                           n_nodes: int = 200,
                           tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Pointwise value of the closed-form no-edge solution at r.

    Same formula as :func:`explicit_no_edge` but evaluated at a point
    rather than cell-averaged, for symmetry identities that hold exactly
    at special points (e.g. the midpoint of a constant profile).
    """
    from reswalk.kernel import image_count, kernel_value
    from scipy.special import ndtr

    if not t > 0:
        raise ValueError("t must be positive")
    # heat part: sum of per-cell integrals of the kernel against the density
    s = np.sqrt(t)
    kmax = image_count(t, tail_tol)
    edges = u.cell_edges()
    ks = 2.0 * np.arange(-kmax, kmax + 1)
    direct = ndtr((r - edges[:, None] - ks) / s)
    reflect = ndtr((r + edges[:, None] - ks) / s)
    cell_int = (direct[:-1] - direct[1:]).sum(axis=1) + (reflect[1:] - reflect[:-1]).sum(axis=1)
    val = float(u.density @ cell_int) + u.atom_mass * kernel_value(t, r, 0.0, tail_tol)
    # boundary flux part via the sigma = sqrt(s) substitution
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    sigma = 0.5 * s * (nodes + 1.0)
    wq = 0.5 * s * weights * 2.0 * sigma
    flux = sum(w * (kernel_value(sg * sg, r, 0.0, tail_tol)
                    - kernel_value(sg * sg, r, 1.0, tail_tol))
               for sg, w in zip(sigma, wq))
    return val + j * float(flux)


def explicit_no_edge(u: MacroProfile, j: float, t: float, n_nodes: int = 200,
                     tail_tol: float = DEFAULT_TAIL_TOL):
    """Closed-form profile: heat flow of u plus j * time-integrated boundary flux.

    Valid while the result stays positive at r=1 (no edge has formed).
    Returns (profile, valid); ``valid`` is False when the rightmost cell
    went non-positive, in which case the formula has outlived its regime.
    The source at 0 and sink at 1 carry equal rates, so total mass equals
    that of u exactly.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    base = convolve(t, u, tail_tol)
    flux = _boundary_flux_cells(t, u.cells, n_nodes, tail_tol)
    dens = base.density + j * flux * u.cells
    valid = dens[-1] > 0.0 and np.all(dens > -1e-12)
    return MacroProfile(0.0, np.maximum(dens, 0.0), validate=True), valid


# ---------------------------------------------------------------------------
# linear source/sink stepping scheme (validation of the no-edge limit)
# ---------------------------------------------------------------------------

def q_delta_step(u: MacroProfile, j: float, delta: float,
                 tail_tol: float = DEFAULT_TAIL_TOL) -> MacroProfile:
    """One step of the linear scheme: diffuse (u + j*delta at 0 - j*delta at 1).

    Unlike the cut, the sink is a fixed point-removal at r=1, which can push
    the density near 1 negative once the true solution develops an edge;
    the result is therefore returned unvalidated (signed cells allowed).
    """
    transfer, atom0, atom1 = cell_transfer(delta, u.cells, tail_tol)
    masses = transfer @ u.cell_masses() \
        + (u.atom_mass + j * delta) * atom0 - j * delta * atom1
    return MacroProfile(0.0, masses * u.cells, validate=False)


def q_delta_evolve(u: MacroProfile, j: float, delta: float, n_steps: int,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> MacroProfile:
    out = MacroProfile(u.atom_mass, u.density, validate=False)
    for _ in range(n_steps):
        out = q_delta_step(out, j, delta, tail_tol)
    return out


# ---------------------------------------------------------------------------
# lattice discretization of the lower flow
# ---------------------------------------------------------------------------

@dataclass
class DiscreteScheme:
    """Site masses on {0..N} evolved by walk kernel + integer cut-and-paste.

    ``profile[x]`` is the expected particle count at site x; the cut keeps
    the fractional remainder at the cut site, so the site-mass total is
    conserved across steps.
    """

    eps: float
    delta: float
    j: float
    profile: np.ndarray
    cut_points: list[int] = field(default_factory=list)

    @property
    def n_sites(self) -> int:
        return self.profile.size

    def total(self) -> float:
        return float(self.profile.sum())

    def interface(self) -> np.ndarray:
        """eps * F_eps(x): scaled suffix sums of the site masses."""
        return self.eps * np.cumsum(self.profile[::-1])[::-1]


def discrete_scheme_from_profile(u: MacroProfile, n: int, j: float,
                                 delta: float) -> DiscreteScheme:
    """Sample a macro profile onto sites {0..n}: density at eps*x, atom onto site 0."""
    eps = 1.0 / n
    xs = np.arange(n + 1) * eps
    idx = np.minimum((xs * u.cells).astype(int), u.cells - 1)
    site_values = u.density[idx].astype(float)
    site_values[0] += u.atom_mass / eps
    return DiscreteScheme(eps, delta, j, site_values)


def discrete_evolution(scheme: DiscreteScheme, n_steps: int) -> DiscreteScheme:
    """Iterate: apply the reflected-walk kernel over one block, then cut and paste.

    The cut site R is the integer where the suffix mass first drops below
    the per-step quota (1/eps)*j*delta; site R keeps the remainder.
    """
    from reswalk.simulate import rw_kernel

    eps, delta, j = scheme.eps, scheme.delta, scheme.j
    quota = j * delta / eps
    if not scheme.total() > quota:
        raise NotInDomainError(
            f"site mass {scheme.total():.6g} <= per-step quota {quota:.6g}")
    n_sites = scheme.n_sites
    p = rw_kernel(n_sites - 1, delta / (eps * eps))
    prof = scheme.profile.copy()
    cuts = list(scheme.cut_points)
    for _ in range(n_steps):
        smoothed = p @ prof
        suffix = np.cumsum(smoothed[::-1])[::-1]
        if not suffix[0] > quota:
            raise NotInDomainError("mass exhausted mid-run")
        # largest R with suffix[R] >= quota (suffix[R+1] < quota)
        below = suffix < quota
        r_cut = int(np.argmax(below)) - 1 if below.any() else n_sites - 1
        new = smoothed.copy()
        new[r_cut] = suffix[r_cut] - quota
        new[r_cut + 1:] = 0.0
        new[0] += quota
        prof = new
        cuts.append(r_cut)
    return DiscreteScheme(eps, delta, j, prof, cuts)
