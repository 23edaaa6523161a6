"""Exact simulation of lattice walkers with current reservoirs.

State is an occupation vector on sites {0..N}.  Particles perform
independent rate-1 symmetric walks whose boundary-exiting jumps are
suppressed; independently, a reservoir injects a particle at site 0 at
rate j/N and removes the particle at the rightmost occupied site at the
same rate (a no-op on the empty configuration).

Randomness comes from a :class:`reswalk.clocks.ClockBundle`; walk clocks
are attached to particles (initially ranked right-to-left, newborns get
fresh labels), which leaves the unlabeled law untouched and keeps every
trajectory a deterministic function of (seed, params).

The module also carries the small exact tools used to cross-examine the
simulator: the reflected count walk, the spectral walk kernel, and the
falling-factorial duality bridge between occupation moments and finitely
many dual walkers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from reswalk.clocks import ClockBundle
from reswalk.profiles import MacroProfile, macro_block_average, profile_edge, tail_mass

__all__ = [
    "AssumptionViolatedError",
    "SizeLimitError",
    "Configuration",
    "SimParams",
    "sample_initial",
    "step_free",
    "step_true",
    "step_delta",
    "particle_count_path",
    "good_set_check",
    "empirical_interface",
    "block_average",
    "mean_free_profile",
    "rw_kernel",
    "rw_kernel_uniformized",
    "poisson_polynomial",
    "duality_functional",
    "duality_check",
]


class AssumptionViolatedError(ValueError):
    """Constructed initial configuration misses the closeness bounds; N too small."""


class SizeLimitError(ValueError):
    """System too large for exact generator exponentiation."""


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------

@dataclass
class Configuration:
    """Occupation numbers on {0..N} with cached particle count and edge."""

    occupations: np.ndarray
    count: int = field(default=-1)
    edge: int | None = field(default=-2)

    def __post_init__(self):
        occ = np.asarray(self.occupations, dtype=np.int64)
        if occ.ndim != 1 or occ.size < 2:
            raise ValueError("occupations must be 1-d over at least 2 sites")
        if np.any(occ < 0):
            raise ValueError("negative occupation")
        self.occupations = occ
        if self.count == -1:
            self.count = int(occ.sum())
        if self.edge == -2:
            nz = np.nonzero(occ)[0]
            self.edge = int(nz[-1]) if nz.size else None

    @property
    def n_sites(self) -> int:
        return self.occupations.size - 1

    @staticmethod
    def empty(n: int) -> "Configuration":
        return Configuration(np.zeros(n + 1, dtype=np.int64))

    @staticmethod
    def from_positions(positions, n: int) -> "Configuration":
        occ = np.bincount(np.asarray(positions, dtype=np.int64), minlength=n + 1)
        return Configuration(occ.astype(np.int64))

    def positions(self) -> np.ndarray:
        """Particle positions in non-increasing order."""
        return np.repeat(np.arange(self.n_sites, -1, -1),
                         self.occupations[::-1])

    def copy(self) -> "Configuration":
        return Configuration(self.occupations.copy(), self.count, self.edge)

    def check_cache(self) -> bool:
        nz = np.nonzero(self.occupations)[0]
        true_edge = int(nz[-1]) if nz.size else None
        return self.count == int(self.occupations.sum()) and self.edge == true_edge


def empirical_interface(xi: Configuration, eps: float) -> np.ndarray:
    """eps * F_eps(x) for x = 0..N: scaled suffix sums of the occupations."""
    return eps * np.cumsum(xi.occupations[::-1])[::-1].astype(float)


def block_average(xi: Configuration, x: int, ell: int) -> float:
    """Mean occupation over the window {x, .., x+ell-1}."""
    return float(xi.occupations[x:x + ell].sum()) / ell


@dataclass(frozen=True)
class SimParams:
    """Lattice size N (=1/eps), current j, seed and macroscopic horizon.

    The closeness exponents (a, b, a_star, gamma) govern how faithfully an
    initial configuration must track its macroscopic profile and how tight
    the per-block reservoir counts are required to be.
    """

    n: int
    j: float
    seed: int
    horizon: float
    a: float = 1.0 / 20.0
    b: float = 9.0 / 10.0
    a_star: float = 1.0 / 100.0
    gamma: float = 1.0 / 20.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.j > 0:
            raise ValueError("j must be positive")
        if self.block_len > self.n:
            raise ValueError("averaging block longer than the lattice")

    @property
    def eps(self) -> float:
        return 1.0 / self.n

    @property
    def block_len(self) -> int:
        """ell = floor(eps^-b)."""
        return int(self.n ** self.b)

    @property
    def micro_horizon(self) -> float:
        return self.horizon * self.n * self.n

    def clocks(self) -> ClockBundle:
        return ClockBundle(self.seed, self.n, self.j)


# ---------------------------------------------------------------------------
# initial configurations
# ---------------------------------------------------------------------------

def sample_initial(rho_init: MacroProfile, params: SimParams) -> Configuration:
    """Deterministic quantile placement of round(N * mass) particles.

    Particle m sits at floor(N * Q((m - 1/2)/n)) where Q inverts the
    left-cumulative mass of the profile; the atom maps to site 0.  The
    constructed configuration is then checked against the block-average
    bound eps^a (and the edge bound when the profile has an edge); failure
    raises, signalling that N is too small for this profile.
    """
    n = params.n
    total = rho_init.total_mass()
    n_particles = int(round(n * total))
    if n_particles == 0:
        return Configuration.empty(n)

    cell_masses = rho_init.cell_masses()
    cum = np.concatenate([[0.0], np.cumsum(cell_masses)])  # mass of density in [0, r_i]
    levels = (np.arange(1, n_particles + 1) - 0.5) * (total / n_particles)
    dens_levels = levels - rho_init.atom_mass
    rs = np.zeros(n_particles)
    inside = dens_levels > 0
    if np.any(inside):
        tgt = np.minimum(dens_levels[inside], cum[-1])
        cell = np.minimum(np.searchsorted(cum, tgt, side="left") - 1, rho_init.cells - 1)
        cell = np.maximum(cell, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(cell_masses[cell] > 0,
                            (tgt - cum[cell]) / np.where(cell_masses[cell] > 0,
                                                         cell_masses[cell], 1.0),
                            0.0)
        rs[inside] = (cell + np.clip(frac, 0.0, 1.0)) / rho_init.cells
    sites = np.clip(np.floor(n * rs).astype(np.int64), 0, n)
    xi = Configuration.from_positions(sites, n)

    ell = params.block_len
    eps = params.eps
    tol = eps ** params.a
    worst = 0.0
    for x in range(0, n - ell + 2):
        micro = block_average(xi, x, ell)
        macro = macro_block_average(rho_init, x, ell, eps)
        worst = max(worst, abs(micro - macro))
    if worst > tol:
        raise AssumptionViolatedError(
            f"block averages off by {worst:.4g} > eps^a = {tol:.4g}; increase N")
    edge_macro = profile_edge(rho_init)
    if edge_macro is not None:
        if xi.edge is None or abs(eps * xi.edge - edge_macro) > tol:
            raise AssumptionViolatedError(
                f"edge {None if xi.edge is None else eps * xi.edge} vs {edge_macro} "
                f"exceeds eps^a = {tol:.4g}")
    return xi


# ---------------------------------------------------------------------------
# event-driven evolution on a clock bundle
# ---------------------------------------------------------------------------

class _Tracker:
    """Particle bookkeeping: label -> site, per-site label sets, edge cache."""

    def __init__(self, xi: Configuration):
        self.occ = xi.occupations.copy()
        self.n_sites = xi.n_sites
        self.count = xi.count
        self.edge = xi.edge
        self.pos: dict[int, int] = {}
        self.at_site: dict[int, list[int]] = {}
        label = 0
        for site in range(self.n_sites, -1, -1):  # rank right-to-left
            for _ in range(int(self.occ[site])):
                label += 1
                self.pos[label] = site
                self.at_site.setdefault(site, []).append(label)
        self.next_label = label + 1

    def _add(self, label: int, site: int):
        self.pos[label] = site
        self.at_site.setdefault(site, []).append(label)
        self.occ[site] += 1
        self.count += 1
        if self.edge is None or site > self.edge:
            self.edge = site

    def _remove_from(self, site: int) -> int:
        label = self.at_site[site].pop()
        del self.pos[label]
        self.occ[site] -= 1
        self.count -= 1
        if site == self.edge and self.occ[site] == 0:
            e = site
            while e >= 0 and self.occ[e] == 0:
                e -= 1
            self.edge = e if e >= 0 else None
        return label

    def move(self, label: int, direction: int):
        site = self.pos.get(label)
        if site is None:
            return  # clock of a removed particle keeps ticking harmlessly
        target = site + direction
        if target < 0 or target > self.n_sites:
            return  # exiting jumps are suppressed
        self.at_site[site].remove(label)
        self.occ[site] -= 1
        if site == self.edge and self.occ[site] == 0 and target < site:
            # the mover itself is now the rightmost particle
            self.edge = target
        self.pos[label] = target
        self.at_site.setdefault(target, []).append(label)
        self.occ[target] += 1
        if target > (self.edge if self.edge is not None else -1):
            self.edge = target

    def birth(self):
        self._add(self.next_label, 0)
        self.next_label += 1

    def death(self):
        if self.count == 0:
            return  # removal from the empty configuration aborts
        self._remove_from(self.edge)

    def config(self) -> Configuration:
        return Configuration(self.occ.copy(), self.count, self.edge)


def _evolve(xi: Configuration, clocks: ClockBundle, t0: float, t1: float,
            with_reservoir: bool) -> Configuration:
    if t1 < t0:
        raise ValueError("until must be >= start time")
    tracker = _Tracker(xi)
    # walk labels needed: initial particles plus every possible birth
    budget = xi.count + (clocks.plus_count(t1) if with_reservoir else 0)
    times, labels, marks = clocks.merged(budget, t0, t1)
    for k in range(times.size):
        label = int(labels[k])
        if label == 0:
            if not with_reservoir:
                continue
            if marks[k] == 1:
                tracker.birth()
            else:
                tracker.death()
        else:
            tracker.move(label, int(marks[k]))
    return tracker.config()


def step_free(xi: Configuration, clocks: ClockBundle, until: float,
              start: float = 0.0) -> Configuration:
    """Independent-walk evolution over [start, until); conserves the count."""
    return _evolve(xi, clocks, start, until, with_reservoir=False)


def step_true(xi: Configuration, clocks: ClockBundle, until: float,
              start: float = 0.0) -> Configuration:
    """Full dynamics: walks plus reservoir births at 0 and deaths at the edge."""
    return _evolve(xi, clocks, start, until, with_reservoir=True)


def _batch_add_remove(xi: Configuration, n_plus: int, n_minus: int) -> Configuration:
    occ = xi.occupations.copy()
    count = xi.count
    edge = xi.edge
    if n_plus > 0:
        occ[0] += n_plus
        count += n_plus
        edge = 0 if edge is None else edge
    for _ in range(n_minus):
        if count == 0:
            break  # each removal aborts individually on the empty state
        occ[edge] -= 1
        count -= 1
        while edge >= 0 and occ[edge] == 0:
            edge -= 1
        if edge < 0:
            edge = None
    return Configuration(occ, count, edge)


def step_delta(xi: Configuration, side: str, clocks: ClockBundle, k: int,
               j: float, delta: float) -> Configuration:
    """One block of the batched process over [k, k+1) * N^2 * delta.

    ``minus``: free evolution first, reservoir marks of the block applied
    at the end (births before deaths); ``plus``: marks applied up front.
    """
    n = xi.n_sites
    block = n * n * delta
    t0, t1 = k * block, (k + 1) * block
    n_plus, n_minus = clocks.reservoir_window_counts(k, block)
    if side == "minus":
        out = step_free(xi, clocks, t1, t0)
        return _batch_add_remove(out, n_plus, n_minus)
    if side == "plus":
        out = _batch_add_remove(xi, n_plus, n_minus)
        return step_free(out, clocks, t1, t0)
    raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")


# ---------------------------------------------------------------------------
# the count process and reservoir statistics
# ---------------------------------------------------------------------------

def particle_count_path(n0: int, clocks: ClockBundle, horizon: float):
    """Reflected random walk driven by the reservoir marks.

    Returns (times, counts) including the initial point; a '-' mark at
    count 0 leaves the walk at 0.
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    times, marks = clocks.label_events(0, 0.0, horizon)
    counts = np.empty(times.size + 1, dtype=np.int64)
    counts[0] = n0
    c = n0
    for i, m in enumerate(marks):
        c = c + int(m)
        if c < 0:
            c = 0
        counts[i + 1] = c
    return np.concatenate([[0.0], times]), counts


def good_set_check(clocks: ClockBundle, j: float, delta: float, eps: float,
                   horizon: float, gamma: float) -> bool:
    """All reservoir windows up to the horizon have near-nominal counts.

    Window k of micro length delta/eps^2 must satisfy
    |count - j*delta/eps| <= eps^(-1/2-gamma) for both mark signs.
    """
    window = delta / (eps * eps)
    nominal = j * delta / eps
    slack = eps ** (-0.5 - gamma)
    n_windows = int(np.ceil(horizon / delta))
    for k in range(n_windows):
        plus, minus = clocks.reservoir_window_counts(k, window)
        if abs(plus - nominal) > slack or abs(minus - nominal) > slack:
            return False
    return True


def mean_free_profile(xi: Configuration, t: float) -> np.ndarray:
    """Expected occupations after free evolution for micro time t."""
    return rw_kernel(xi.n_sites, t) @ xi.occupations.astype(float)


# ---------------------------------------------------------------------------
# walk kernel
# ---------------------------------------------------------------------------

def rw_kernel(n: int, t: float) -> np.ndarray:
    """Transition matrix of the suppressed-jump walk on {0..n} after time t.

    Spectral form in the half-integer cosine basis, which diagonalizes the
    generator with the no-flux boundary convention f(-1)=f(0), f(n+1)=f(n).
    Rows sum to 1; the matrix is symmetric.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    m = n + 1
    modes = np.arange(m)
    theta = np.pi * modes / m
    decay = np.exp((np.cos(theta) - 1.0) * t)
    basis = np.cos(np.outer(theta, np.arange(m) + 0.5))  # (mode, site)
    norms = np.full(m, m / 2.0)
    norms[0] = m
    return (basis.T * (decay / norms)) @ basis


def rw_kernel_uniformized(n: int, t: float, tol: float = 1e-14) -> np.ndarray:
    """Poissonized power series in the jump matrix; cross-check for rw_kernel."""
    if t < 0:
        raise ValueError("t must be >= 0")
    m = n + 1
    jump = np.zeros((m, m))
    for x in range(m):
        for d in (-1, 1):
            y = x + d
            if 0 <= y < m:
                jump[x, y] += 0.5
            else:
                jump[x, x] += 0.5  # suppressed attempt
    out = np.zeros((m, m))
    term = np.eye(m)
    weight = np.exp(-t)
    k = 0
    cumulative = 0.0
    while cumulative < 1.0 - tol or k <= t:
        out += weight * term
        cumulative += weight
        k += 1
        term = term @ jump
        weight *= t / k
        if k > 1000 + 10 * t:
            break
    return out


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def poisson_polynomial(k: int, m: int) -> int:
    """Falling factorial m (m-1) ... (m-k+1); equals 0 when k > m."""
    if k < 0 or m < 0:
        raise ValueError("k and m must be >= 0")
    out = 1
    for i in range(k):
        out *= m - i
    return out


def duality_functional(xi: Configuration, sites) -> float:
    """Product over x of the falling factorial of xi(x), order = multiplicity of x."""
    counts = np.bincount(np.asarray(sites, dtype=np.int64),
                         minlength=xi.n_sites + 1)
    out = 1.0
    for x in np.nonzero(counts)[0]:
        out *= poisson_polynomial(int(counts[x]), int(xi.occupations[x]))
    return out


def _occupation_states(n_particles: int, n_sites: int):
    """All occupation vectors with the given total on {0..n_sites}."""
    states = []
    for cut in itertools.combinations(range(n_particles + n_sites), n_sites):
        occ = np.diff(np.concatenate([[-1], np.asarray(cut), [n_particles + n_sites]])) - 1
        states.append(tuple(int(c) for c in occ))
    return states


def _occupation_generator(states, n_sites):
    index = {s: i for i, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    for s, row in index.items():
        for x in range(n_sites):
            for src, dst in ((x, x + 1), (x + 1, x)):
                if s[src] > 0:
                    t = list(s)
                    t[src] -= 1
                    t[dst] += 1
                    col = index[tuple(t)]
                    rate = 0.5 * s[src]
                    q[row, col] += rate
                    q[row, row] -= rate
    return q, index


def duality_check(xi: Configuration, sites, t: float):
    """Both sides of the moment-duality identity, each by exact exponentiation.

    Left: evolve the occupation chain from xi and average the falling
    factorial at ``sites``.  Right: evolve |sites| labeled walkers and
    average the same functional against the frozen xi.  Sizes are capped
    so the state spaces stay exactly enumerable.
    """
    sites = [int(s) for s in sites]
    n = xi.n_sites
    if n > 4 or xi.count > 3 or len(sites) > 2:
        raise SizeLimitError("duality check limited to N<=4, |xi|<=3, |sites|<=2")
    if t < 0:
        raise ValueError("t must be >= 0")

    # occupation-chain side
    states = _occupation_states(xi.count, n)
    q, index = _occupation_generator(states, n)
    dist = expm(q * t)[index[tuple(int(c) for c in xi.occupations)]]
    lhs = float(sum(
        p * duality_functional(Configuration(np.asarray(s, dtype=np.int64)), sites)
        for p, s in zip(dist, states)))

    # labeled-walkers side
    k = len(sites)
    if k == 0:
        return lhs, 1.0
    single = np.zeros((n + 1, n + 1))
    for x in range(n + 1):
        for d in (-1, 1):
            y = x + d
            if 0 <= y <= n:
                single[x, y] += 0.5
                single[x, x] -= 0.5
    pt = expm(single * t)
    rhs = 0.0
    for joint in itertools.product(range(n + 1), repeat=k):
        prob = 1.0
        for i in range(k):
            prob *= pt[sites[i], joint[i]]
        rhs += prob * duality_functional(xi, joint)
    return lhs, float(rhs)
