"""Experiment orchestration: micro/macro comparison runs and their reports.

A single JSON config drives everything (see README for the schema).  All
Monte Carlo is fanned out over a worker pool sized by the RESWALK_WORKERS
environment variable; per-replica seeds are fixed by replica index, so
reports are byte-identical however the work is scheduled.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from reswalk import __version__
from reswalk._fast import run_batched_blocks, run_true_final
from reswalk.barriers import barrier_evolve, discrete_evolution, discrete_scheme_from_profile, separating_element
from reswalk.profiles import MacroProfile, tail_at_boundaries
from reswalk.simulate import SimParams, sample_initial

__all__ = ["ExperimentConfig", "hydro_compare", "approx_process_compare", "worker_count"]


def worker_count() -> int:
    return max(1, int(os.environ.get("RESWALK_WORKERS", "1")))


@dataclass
class ExperimentConfig:
    """Inputs of a comparison run; ``profile`` picks the initial shape."""

    profile: str = "constant"           # constant | piecewise | with-edge
    profile_value: float = 1.0
    profile_args: dict = field(default_factory=dict)
    j: float = 0.5
    t: float = 0.25
    n_values: tuple = (100, 200, 400)
    depth: int = 8
    delta: float = 0.1                   # batched-process block size
    blocks: int = 3                      # batched-process block count
    replicas: int = 200
    seed: int = 1
    grid_cells: int = 512
    out_dir: str = "reports"

    def __post_init__(self):
        if self.j <= 0 or self.t <= 0 or self.replicas < 1 or self.depth < 1:
            raise ValueError("j, t, replicas and depth must be positive")
        self.n_values = tuple(int(n) for n in self.n_values)
        if list(self.n_values) != sorted(self.n_values):
            raise ValueError("n_values must be ascending")

    @staticmethod
    def from_json_file(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig(**json.load(fh))

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d

    def config_hash(self) -> str:
        payload = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def initial_profile(self) -> MacroProfile:
        return make_profile(self.profile, self.grid_cells,
                            value=self.profile_value, **self.profile_args)


def make_profile(kind: str, cells: int, value: float = 1.0, edge: float = 0.5,
                 pieces=None) -> MacroProfile:
    if kind == "constant":
        return MacroProfile.constant(value, cells)
    if kind == "with-edge":
        return MacroProfile.step([0.0, edge, 1.0], [value, 0.0], cells)
    if kind == "piecewise":
        pieces = pieces or {"breaks": [0.0, 0.4, 1.0], "values": [2.0, 0.5]}
        return MacroProfile.step(pieces["breaks"], pieces["values"], cells)
    raise ValueError(f"unknown profile kind {kind!r}")


def provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.to_json_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {"reswalk": __version__, "numpy": np.__version__},
    }


# ---------------------------------------------------------------------------
# replica fan-out
# ---------------------------------------------------------------------------

def _true_deviation_batch(args):
    """Max interface deviations of a block of true-process replicas."""
    n, j, t_micro, pos0, macro_edges_f, seeds = args
    eps = 1.0 / n
    xs = np.arange(n + 1) * eps
    macro_at_sites = np.interp(xs, np.linspace(0.0, 1.0, macro_edges_f.size), macro_edges_f)
    out = np.empty(len(seeds))
    for i, seed in enumerate(seeds):
        pos = run_true_final(pos0.copy(), n, j, t_micro, seed)
        occ = np.bincount(pos, minlength=n + 1)
        interface = eps * np.cumsum(occ[::-1])[::-1]
        out[i] = np.abs(interface - macro_at_sites).max()
    return out


def _batched_deviation_batch(args):
    n, j, delta, blocks, minus_side, pos0, macro_edges_f, seeds = args
    eps = 1.0 / n
    xs = np.arange(n + 1) * eps
    macro_at_sites = np.interp(xs, np.linspace(0.0, 1.0, macro_edges_f.size), macro_edges_f)
    out = np.empty(len(seeds))
    for i, seed in enumerate(seeds):
        pos = run_batched_blocks(pos0.copy(), n, j, delta, blocks, minus_side, seed)
        occ = np.bincount(pos, minlength=n + 1)
        interface = eps * np.cumsum(occ[::-1])[::-1]
        out[i] = np.abs(interface - macro_at_sites).max()
    return out


def _fan_out(fn, job_args, seeds, n_workers):
    """Split seeds into contiguous chunks and merge in seed order."""
    chunks = np.array_split(np.asarray(seeds), max(1, min(n_workers * 4, len(seeds))))
    jobs = [job_args + (list(chunk),) for chunk in chunks if chunk.size]
    if n_workers <= 1:
        parts = [fn(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(fn, jobs))
    return np.concatenate(parts)


def _batch_stats(values: np.ndarray, n_batches: int = 10):
    """(mean, standard error) by batch means over replica order."""
    batches = [b.mean() for b in np.array_split(values, n_batches) if b.size]
    mean = float(values.mean())
    se = float(np.std(batches, ddof=1) / np.sqrt(len(batches))) if len(batches) > 1 else 0.0
    return mean, se


# ---------------------------------------------------------------------------
# comparison runs
# ---------------------------------------------------------------------------

def hydro_compare(cfg: ExperimentConfig) -> dict:
    """True process at macroscopic time t against the bracketing-limit profile.

    For each N the report carries the mean (over replicas) of the maximal
    interface deviation, with batch-means error bars, plus the weak
    density-field pairing against cos(pi r).
    """
    rho = cfg.initial_profile()
    psi = separating_element(rho, cfg.j, cfg.t, cfg.depth)
    macro_f = tail_at_boundaries(psi.profile)
    rows = []
    workers = worker_count()
    for n in cfg.n_values:
        params = SimParams(n=n, j=cfg.j, seed=cfg.seed, horizon=cfg.t)
        xi0 = sample_initial(rho, params)
        pos0 = xi0.positions()
        seeds = [cfg.seed * 1_000_003 + n * 1000 + r for r in range(cfg.replicas)]
        devs = _fan_out(_true_deviation_batch,
                        (n, cfg.j, params.micro_horizon, pos0, macro_f), seeds, workers)
        mean, se = _batch_stats(devs)
        rows.append({"n": n, "deviation_mean": mean, "deviation_se": se,
                     "deviation_max": float(devs.max())})
    # monotone within 2 standard errors
    monotone = all(
        rows[k + 1]["deviation_mean"] <= rows[k]["deviation_mean"]
        + 2.0 * np.hypot(rows[k]["deviation_se"], rows[k + 1]["deviation_se"])
        for k in range(len(rows) - 1))
    # weak density-field check at the largest N, one replica
    n = cfg.n_values[-1]
    params = SimParams(n=n, j=cfg.j, seed=cfg.seed, horizon=cfg.t)
    pos0 = sample_initial(rho, params).positions()
    pos = run_true_final(pos0.copy(), n, cfg.j, params.micro_horizon, cfg.seed)
    phi = np.cos(np.pi * np.arange(n + 1) / n)
    field_micro = float(np.sum(phi[np.asarray(pos)]) / n)
    mids = psi.profile.cell_midpoints()
    field_macro = float(np.mean(np.cos(np.pi * mids) * psi.profile.density))
    report = {
        "kind": "hydro_compare",
        "achieved_gap": psi.achieved_gap,
        "rows": rows,
        "monotone_within_2se": bool(monotone),
        "weak_field_deviation": abs(field_micro - field_macro),
    }
    report.update(provenance(cfg))
    return report


def approx_process_compare(cfg: ExperimentConfig) -> dict:
    """Block-batched processes against the matching bracketing flow.

    Also runs the deterministic lattice discretization as the intermediate
    comparison between the particle runs and the continuum flow.
    """
    rho = cfg.initial_profile()
    j, delta, blocks = cfg.j, cfg.delta, cfg.blocks
    workers = worker_count()
    sides = {"minus": ("lower", True), "plus": ("upper", False)}
    out_rows = {side: [] for side in sides}
    discrete_rows = []
    for side, (flow_side, minus_flag) in sides.items():
        macro = barrier_evolve(rho, flow_side, j, delta, blocks)
        macro_f = tail_at_boundaries(macro)
        for n in cfg.n_values:
            params = SimParams(n=n, j=j, seed=cfg.seed, horizon=delta * blocks)
            pos0 = sample_initial(rho, params).positions()
            seeds = [cfg.seed * 7_000_003 + n * 1000 + r for r in range(cfg.replicas)]
            devs = _fan_out(_batched_deviation_batch,
                            (n, j, delta, blocks, minus_flag, pos0, macro_f),
                            seeds, workers)
            mean, se = _batch_stats(devs)
            out_rows[side].append({"n": n, "deviation_mean": mean, "deviation_se": se})
    macro = barrier_evolve(rho, "lower", j, delta, blocks)
    macro_f = tail_at_boundaries(macro)
    for n in cfg.n_values:
        scheme = discrete_scheme_from_profile(rho, n, j, delta)
        evolved = discrete_evolution(scheme, blocks)
        xs = np.arange(n + 1) / n
        macro_at = np.interp(xs, np.linspace(0.0, 1.0, macro_f.size), macro_f)
        discrete_rows.append({
            "n": n,
            "deviation": float(np.abs(evolved.interface() - macro_at).max()),
        })
    report = {
        "kind": "approx_process_compare",
        "delta": delta,
        "blocks": blocks,
        "batched": out_rows,
        "discrete_scheme": discrete_rows,
    }
    report.update(provenance(cfg))
    return report
