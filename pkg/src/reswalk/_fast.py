"""Numba kernels for replica-scale runs of the same particle laws.

The event-driven simulator in :mod:`reswalk.simulate` is the reference
implementation; these kernels re-realize the identical unlabeled dynamics
for Monte Carlo work at N up to a few hundred and thousands of replicas.
Between reservoir events nothing interacts, so each particle independently
takes a Poisson number of clipped unit steps over the gap; reservoir
events then add at 0 or remove at the current maximum.  Agreement with the
reference simulator is covered by distributional tests.

All kernels seed numba's internal generator explicitly, so a (seed,
params) pair fixes the trajectory bit for bit.
"""

import numpy as np
from numba import njit

__all__ = ["run_true_final", "run_free_final", "run_batched_blocks", "count_final"]


@njit(cache=True)
def _advance_particles(pos, n, dt, lattice_size):
    """Each of pos[:n] takes Poisson(dt) fair +/-1 steps, exits suppressed."""
    for i in range(n):
        k = np.random.poisson(dt)
        p = pos[i]
        for _ in range(k):
            if np.random.random() < 0.5:
                if p > 0:
                    p -= 1
            else:
                if p < lattice_size:
                    p += 1
        pos[i] = p


@njit(cache=True)
def _remove_rightmost(pos, n):
    """Swap-delete one particle at the maximum position; returns new n."""
    if n == 0:
        return 0
    best = 0
    for i in range(1, n):
        if pos[i] > pos[best]:
            best = i
    pos[best] = pos[n - 1]
    return n - 1


@njit(cache=True)
def run_true_final(pos0, lattice_size, j, t_micro, seed):
    """Positions at t_micro under walks + reservoir, from one seed."""
    np.random.seed(seed)
    rate0 = 2.0 * j / lattice_size
    cap = pos0.size + 16 + 4 * int(rate0 * t_micro + 6.0 * np.sqrt(rate0 * t_micro) + 8.0)
    pos = np.empty(cap, dtype=np.int64)
    n = pos0.size
    pos[:n] = pos0
    t = 0.0
    while True:
        gap = np.random.exponential(1.0 / rate0)
        if t + gap >= t_micro:
            _advance_particles(pos, n, t_micro - t, lattice_size)
            break
        _advance_particles(pos, n, gap, lattice_size)
        t += gap
        if np.random.random() < 0.5:
            if n == cap:
                grown = np.empty(2 * cap, dtype=np.int64)
                grown[:n] = pos[:n]
                pos = grown
                cap = 2 * cap
            pos[n] = 0
            n += 1
        else:
            n = _remove_rightmost(pos, n)
    return pos[:n].copy()


@njit(cache=True)
def run_free_final(pos0, lattice_size, t_micro, seed):
    """Positions at t_micro under walks only."""
    np.random.seed(seed)
    pos = pos0.copy()
    _advance_particles(pos, pos.size, t_micro, lattice_size)
    return pos


@njit(cache=True)
def run_batched_blocks(pos0, lattice_size, j, delta, n_blocks, minus_side, seed):
    """Block-batched process: per block of micro length N^2*delta, draw the
    two reservoir counts as independent Poisson(j*N*delta) and apply them at
    the block end (minus) or start (plus), additions before removals."""
    np.random.seed(seed)
    block = lattice_size * lattice_size * delta
    mean_counts = j * delta * lattice_size
    cap = pos0.size + 16 + 4 * int(n_blocks * mean_counts + 6.0 * np.sqrt(n_blocks * mean_counts) + 8.0)
    pos = np.empty(cap, dtype=np.int64)
    n = pos0.size
    pos[:n] = pos0
    for _ in range(n_blocks):
        n_plus = np.random.poisson(mean_counts)
        n_minus = np.random.poisson(mean_counts)
        if minus_side:
            _advance_particles(pos, n, block, lattice_size)
        while n + n_plus > cap:
            grown = np.empty(2 * cap, dtype=np.int64)
            grown[:n] = pos[:n]
            pos = grown
            cap = 2 * cap
        for _ in range(n_plus):
            pos[n] = 0
            n += 1
        for _ in range(n_minus):
            n = _remove_rightmost(pos, n)
        if not minus_side:
            _advance_particles(pos, n, block, lattice_size)
    return pos[:n].copy()


@njit(cache=True)
def count_final(n0, rate0, t_micro, seed):
    """Final value of the reflected count walk (exact law of the total count)."""
    np.random.seed(seed)
    t = 0.0
    n = n0
    while True:
        t += np.random.exponential(1.0 / rate0)
        if t >= t_micro:
            return n
        if np.random.random() < 0.5:
            n += 1
        elif n > 0:
            n -= 1
