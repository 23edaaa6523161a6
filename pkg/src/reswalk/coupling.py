"""Pathwise coupling of the true, free and block-batched processes.

Particles are kept as a non-increasing sequence of positions on the
enlarged lattice {-1} + {0..L} + {L+1}: rank 1 is the rightmost particle,
removed particles park at L+1, empty ranks at -1.  Every process is then a
deterministic product of rank operators read off one clock bundle:

* walk clock i with mark s displaces the rank-i particle by s (suppressed
  at the lattice ends, ignored on sentinels), re-sorting within the run of
  equal positions;
* a reservoir '+' mark appends a particle at 0; a '-' mark sends the
  highest-ranked physical particle to L+1 (no-op if none).

The batched variants differ from the true flow only in where the
reservoir operators sit: moved to the end (minus) or start (plus) of each
block of micro length N^2*delta.  Moving a reservoir operator later in the
product can only raise the outcome, which is the whole comparison
argument; ``verify_sandwich`` checks it event-for-event on sampled noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from reswalk.clocks import ClockBundle
from reswalk.simulate import Configuration

__all__ = [
    "OrderedConfig",
    "to_ordered",
    "from_ordered",
    "apply_operator",
    "ordered_leq",
    "flow",
    "verify_sandwich",
    "SandwichReport",
]

FLOW_KINDS = ("free", "true", "delta_minus", "delta_plus")


@dataclass(frozen=True)
class OrderedConfig:
    """Ranked particle positions on the enlarged lattice.

    ``positions`` holds ranks 1..n_active (non-increasing); the implicit
    tail is -1.  Entries equal to lattice_size+1 are exited particles and
    must form a prefix.
    """

    positions: tuple
    lattice_size: int

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        top = self.lattice_size + 1
        for a, b in zip(pos, pos[1:]):
            if a < b:
                raise ValueError("positions must be non-increasing")
        if any(p < 0 or p > top for p in pos):
            raise ValueError("positions must lie in [0, lattice_size+1]")

    @property
    def n_active(self) -> int:
        return len(self.positions)

    @property
    def m_exited(self) -> int:
        top = self.lattice_size + 1
        m = 0
        for p in self.positions:
            if p == top:
                m += 1
            else:
                break
        return m

    def rank(self, i: int) -> int:
        """Position of rank i (1-based); -1 beyond the active prefix."""
        return self.positions[i - 1] if 1 <= i <= self.n_active else -1

    def physical(self) -> tuple:
        """Ranks currently on the lattice {0..L}."""
        return self.positions[self.m_exited:]


def to_ordered(xi: Configuration) -> OrderedConfig:
    """Label particles right to left."""
    return OrderedConfig(tuple(int(p) for p in xi.positions()), xi.n_sites)


def from_ordered(x: OrderedConfig) -> Configuration:
    """Occupation counts of the physical restriction."""
    occ = np.zeros(x.lattice_size + 1, dtype=np.int64)
    for p in x.physical():
        occ[p] += 1
    return Configuration(occ)


def apply_operator(x: OrderedConfig, label: int, mark: int) -> OrderedConfig:
    """One creation/annihilation (label 0) or rank displacement (label >= 1)."""
    if mark not in (1, -1):
        raise ValueError("mark must be +1 or -1")
    top = x.lattice_size + 1
    pos = list(x.positions)
    if label == 0:
        if mark == 1:
            pos.append(0)
            return OrderedConfig(tuple(pos), x.lattice_size)
        m = x.m_exited
        if m == x.n_active:
            return x  # nothing physical to annihilate
        pos[m] = top
        return OrderedConfig(tuple(pos), x.lattice_size)
    idx = label - 1
    if idx >= len(pos):
        return x  # rank is an empty slot (-1)
    p = pos[idx]
    if p == top:
        return x  # exited particles never move
    target = p + mark
    if target < 0 or target > x.lattice_size:
        return x  # exiting jumps suppressed
    if mark == 1:
        f = idx
        while f > 0 and pos[f - 1] == p:
            f -= 1
        pos[f] = target
    else:
        f = idx
        while f < len(pos) - 1 and pos[f + 1] == p:
            f += 1
        pos[f] = target
    return OrderedConfig(tuple(pos), x.lattice_size)


def ordered_leq(x: OrderedConfig, y: OrderedConfig) -> bool:
    """Componentwise rank order (with the implicit -1 tail)."""
    if x.lattice_size != y.lattice_size:
        raise ValueError("configurations live on different lattices")
    if x.n_active > y.n_active:
        return False
    return all(a <= b for a, b in zip(x.positions, y.positions))


# ---------------------------------------------------------------------------
# flows as operator products (hot loop in numba)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _apply_sequence(pos, n_active, m_exited, labels, marks, lattice_size):
    """Apply rank operators in array order; mutates pos, returns (N, M)."""
    top = lattice_size + 1
    for e in range(labels.size):
        lab = labels[e]
        s = marks[e]
        if lab == 0:
            if s == 1:
                pos[n_active] = 0
                n_active += 1
            else:
                if n_active > m_exited:
                    pos[m_exited] = top
                    m_exited += 1
        else:
            idx = lab - 1
            if idx >= n_active:
                continue
            p = pos[idx]
            if p == top:
                continue
            t = p + s
            if t < 0 or t > lattice_size:
                continue
            if s == 1:
                f = idx
                while f > 0 and pos[f - 1] == p:
                    f -= 1
                pos[f] = t
            else:
                f = idx
                while f < n_active - 1 and pos[f + 1] == p:
                    f += 1
                pos[f] = t
    return n_active, m_exited


def _reorder_for_kind(times, labels, marks, t0: float, kind: str, block: float):
    """Application-order (labels, marks) from time-sorted event arrays.

    Batched kinds move the reservoir events to the end (minus) or start
    (plus) of their block; the stable sort keeps time order inside each
    group, so the relocation is a pure reindexing of the shared noise.
    """
    if kind == "free":
        keep = labels != 0
        return labels[keep], marks[keep]
    if kind == "true":
        return labels, marks
    block_idx = np.floor((times - t0) / block).astype(np.int64)
    is0 = (labels == 0).astype(np.int8)
    if kind == "delta_minus":
        order = np.lexsort((is0, block_idx))
    elif kind == "delta_plus":
        order = np.lexsort((1 - is0, block_idx))
    else:
        raise ValueError(f"unknown flow kind {kind!r}")
    return labels[order], marks[order]


def _ordered_events(clocks: ClockBundle, n_labels: int, t0: float, t1: float,
                    kind: str, block: float):
    times, labels, marks = clocks.merged(n_labels, t0, t1)
    return _reorder_for_kind(times, labels, marks, t0, kind, block)


class _FlowState:
    """Mutable flow state: a capacity-padded position array plus counters."""

    def __init__(self, x0: OrderedConfig, capacity: int):
        self.lattice_size = x0.lattice_size
        self.pos = np.full(capacity, -1, dtype=np.int64)
        self.pos[:x0.n_active] = np.asarray(x0.positions, dtype=np.int64)
        self.n_active = x0.n_active
        self.m_exited = x0.m_exited

    def advance(self, labels, marks):
        self.n_active, self.m_exited = _apply_sequence(
            self.pos, self.n_active, self.m_exited,
            np.ascontiguousarray(labels, dtype=np.int64),
            np.ascontiguousarray(marks, dtype=np.int64),
            self.lattice_size)

    def snapshot(self) -> OrderedConfig:
        return OrderedConfig(tuple(self.pos[:self.n_active]), self.lattice_size)

    def physical_interface(self) -> np.ndarray:
        """F_eps over the physical restriction (suffix counts per site)."""
        occ = np.bincount(self.pos[self.m_exited:self.n_active],
                          minlength=self.lattice_size + 1)
        return np.cumsum(occ[::-1])[::-1]


def flow(x0: OrderedConfig, clocks: ClockBundle, kind: str, j: float,
         delta: float, horizon: float) -> OrderedConfig:
    """Evolve an ordered configuration to the horizon under one flow kind.

    For the batched kinds the horizon must be a whole number of blocks of
    micro length N^2*delta.
    """
    if kind not in FLOW_KINDS:
        raise ValueError(f"kind must be one of {FLOW_KINDS}")
    block = clocks.n_sites ** 2 * delta
    if kind.startswith("delta"):
        n_blocks = horizon / block
        if abs(n_blocks - round(n_blocks)) > 1e-9:
            raise ValueError("horizon must be a whole number of blocks")
    budget = x0.n_active + clocks.plus_count(horizon)
    labels, marks = _ordered_events(clocks, budget, 0.0, horizon, kind, block)
    state = _FlowState(x0, capacity=budget + 1)
    state.advance(labels, marks)
    return state.snapshot()


# ---------------------------------------------------------------------------
# sandwich verification
# ---------------------------------------------------------------------------

@dataclass
class SandwichReport:
    samples: int
    boundaries_checked: int
    violations: list
    first_violation: dict | None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "samples": self.samples,
            "boundaries_checked": self.boundaries_checked,
            "violations": len(self.violations),
            "first_violation": self.first_violation,
        }


_CHAIN = ("coarse_minus", "fine_minus", "true", "fine_plus", "coarse_plus")


def verify_sandwich(x0: OrderedConfig, clocks: ClockBundle, j: float,
                    delta_coarse: float, delta_fine: float,
                    n_blocks: int) -> SandwichReport:
    """Run the five coupled flows on one noise realization and check the chain

        coarse_minus <= fine_minus <= true <= fine_plus <= coarse_plus

    on the physical restrictions at every coarse block boundary.  The
    counters N and M must agree across flows at those times; both that and
    the interface orderings are reported as violations if they fail.
    """
    ratio = delta_coarse / delta_fine
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("delta_coarse must be an integer multiple of delta_fine")
    k_fine = int(round(ratio))
    n2 = clocks.n_sites ** 2
    block_c = n2 * delta_coarse
    block_f = n2 * delta_fine
    horizon = n_blocks * block_c
    budget = x0.n_active + clocks.plus_count(horizon)

    kinds = {"coarse_minus": ("delta_minus", block_c),
             "fine_minus": ("delta_minus", block_f),
             "true": ("true", block_c),
             "fine_plus": ("delta_plus", block_f),
             "coarse_plus": ("delta_plus", block_c)}
    states = {name: _FlowState(x0, budget + 1) for name in _CHAIN}

    # one shared time-sorted event record; segments are views into it
    all_times, all_labels, all_marks = clocks.merged(budget, 0.0, horizon)
    seg_bounds = np.searchsorted(all_times, np.arange(n_blocks + 1) * block_c, "left")

    violations = []
    for m in range(1, n_blocks + 1):
        t0 = (m - 1) * block_c
        lo, hi = seg_bounds[m - 1], seg_bounds[m]
        seg = slice(lo, hi)
        for name in _CHAIN:
            kind, block = kinds[name]
            labels, marks = _reorder_for_kind(
                all_times[seg], all_labels[seg], all_marks[seg], t0, kind, block)
            states[name].advance(labels, marks)
        nm = {name: (states[name].n_active, states[name].m_exited) for name in _CHAIN}
        if len(set(nm.values())) != 1:
            violations.append({"boundary": m, "kind": "counter_mismatch",
                               "counters": {k: list(v) for k, v in nm.items()}})
            continue
        interfaces = {name: states[name].physical_interface() for name in _CHAIN}
        for lo, hi in zip(_CHAIN, _CHAIN[1:]):
            bad = interfaces[lo] > interfaces[hi]
            if bad.any():
                site = int(np.argmax(bad))
                violations.append({
                    "boundary": m, "kind": "order", "pair": (lo, hi), "site": site,
                    "f_lo": int(interfaces[lo][site]), "f_hi": int(interfaces[hi][site])})
    return SandwichReport(1, n_blocks, violations,
                          violations[0] if violations else None)
