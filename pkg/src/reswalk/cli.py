"""Command-line entry points.

Every report path writes delimited data (CSV) and a JSON report into the
output directory, rendering matplotlib figures alongside them unless
--no-plots is given.  Seeds are always explicit, and reports embed the
config hash so re-runs are attributable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from reswalk import __version__
from reswalk.acceptance import SUITE_ORDER, run_all, run_suite
from reswalk.barriers import build_ladder, separating_element
from reswalk.clocks import ClockBundle
from reswalk.coupling import to_ordered, verify_sandwich
from reswalk.harness import ExperimentConfig, approx_process_compare, hydro_compare, make_profile, provenance
from reswalk.profiles import MacroProfile, tail_at_boundaries
from reswalk.simulate import Configuration, SimParams, duality_check, sample_initial
from reswalk._fast import run_true_final


def _load_profile(args) -> MacroProfile:
    if args.profile and Path(args.profile).exists():
        return MacroProfile.load_json(Path(args.profile).read_text())
    return make_profile(args.kind, args.grid, value=args.value, edge=args.edge)


def _add_profile_args(p):
    p.add_argument("--profile", help="path to a profile JSON file")
    p.add_argument("--kind", default="constant",
                   choices=["constant", "piecewise", "with-edge"])
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--edge", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=512)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict):
    from reswalk.acceptance import _plain
    path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    out = _outdir(args)
    rho = _load_profile(args)
    params = SimParams(n=args.n, j=args.j, seed=args.seed, horizon=args.t)
    xi0 = sample_initial(rho, params)
    pos0 = xi0.positions()
    eps = params.eps
    xs = np.arange(args.n + 1) * eps

    interfaces = np.empty((args.replicas, args.n + 1))
    counts = np.empty(args.replicas, dtype=np.int64)
    for r in range(args.replicas):
        pos = run_true_final(pos0.copy(), args.n, args.j,
                             params.micro_horizon, args.seed * 100_003 + r)
        occ = np.bincount(pos, minlength=args.n + 1)
        interfaces[r] = eps * np.cumsum(occ[::-1])[::-1]
        counts[r] = pos.size

    mean_interface = interfaces.mean(axis=0)
    _write_csv(out / "mean_interface.csv", ["x", "eps_F"],
               [(int(x * args.n), float(f)) for x, f in zip(xs, mean_interface)])
    keep = min(args.replicas, 20)
    for r in range(keep):
        _write_csv(out / f"interface_replica_{r:04d}.csv", ["x", "eps_F"],
                   [(k, float(f)) for k, f in enumerate(interfaces[r])])
    count_summary = {
        "final_counts": {"mean": float(counts.mean()), "std": float(counts.std()),
                         "min": int(counts.min()), "max": int(counts.max())},
        "initial_count": int(xi0.count),
        "replicas": args.replicas,
        "n": args.n, "j": args.j, "t": args.t, "seed": args.seed,
        "version": __version__,
    }
    _write_json(out / "counts.json", count_summary)
    if not args.no_plots:
        from reswalk.plots import save_interface_plot
        curves = {"mean over replicas": mean_interface}
        for r in range(min(3, args.replicas)):
            curves[f"replica {r}"] = interfaces[r]
        save_interface_plot(xs, curves, out / "interfaces.png",
                            title=f"N={args.n}, j={args.j}, t={args.t}")
    print(f"simulate: wrote {args.replicas} replicas to {out}")
    return 0


def cmd_barriers(args) -> int:
    out = _outdir(args)
    rho = _load_profile(args)
    ladder = build_ladder(rho, args.j, args.t, args.depth)
    _write_csv(out / "ladder.csv", ["n", "delta", "gap", "gap_bound", "mass_error"],
               [(row["n"], row["delta"], row["gap"], row["gap_bound"], row["mass_error"])
                for row in ladder.rows()])
    for n in range(ladder.depth):
        (out / f"lower_{n + 1}.json").write_text(ladder.lowers[n].dump_json())
        (out / f"upper_{n + 1}.json").write_text(ladder.uppers[n].dump_json())
    psi = ladder.uppers[-1]
    (out / "psi.json").write_text(psi.dump_json())
    (out / "psi.csv").write_text(psi.to_csv())
    _write_json(out / "report.json", {
        "j": args.j, "t": args.t, "depth": args.depth, "grid": rho.cells,
        "achieved_gap": ladder.gaps[-1], "rows": ladder.rows(),
        "version": __version__,
    })
    if not args.no_plots:
        from reswalk.plots import save_ladder_plot
        save_ladder_plot(ladder, out / "ladder.png")
    print(f"barriers: gap at deepest rung {ladder.gaps[-1]:.3e} -> {out}")
    return 0


def cmd_separate(args) -> int:
    out = _outdir(args)
    rho = _load_profile(args)
    se = separating_element(rho, args.j, args.t, args.depth, gap_tol=args.gap_tol)
    (out / "psi.json").write_text(se.profile.dump_json())
    (out / "psi.csv").write_text(se.profile.to_csv())
    _write_json(out / "report.json", {
        "time": se.time, "achieved_gap": se.achieved_gap,
        "refinement_depth": se.refinement_depth, "flagged": se.flagged,
        "bracket_certified": se.bracket_ok(), "version": __version__,
    })
    if not args.no_plots:
        from reswalk.plots import save_profile_plot
        save_profile_plot({"start": rho, "bracket estimate": se.profile},
                          out / "psi.png", title=f"t={args.t}, gap={se.achieved_gap:.2e}")
    status = "flagged" if se.flagged else "certified"
    print(f"separate: {status}, gap {se.achieved_gap:.3e} -> {out}")
    return 0


def cmd_compare(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg.out_dir = args.out
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hydro = hydro_compare(cfg)
    _write_json(out / "hydro_compare.json", hydro)
    _write_csv(out / "hydro_compare.csv", ["n", "deviation_mean", "deviation_se"],
               [(r["n"], r["deviation_mean"], r["deviation_se"]) for r in hydro["rows"]])
    approx = approx_process_compare(cfg)
    _write_json(out / "approx_compare.json", approx)
    rows = []
    for side in ("minus", "plus"):
        for r in approx["batched"][side]:
            rows.append((side, r["n"], r["deviation_mean"], r["deviation_se"]))
    _write_csv(out / "approx_compare.csv", ["side", "n", "deviation_mean", "deviation_se"], rows)
    if not args.no_plots:
        from reswalk.plots import save_trend_plot
        ns = [r["n"] for r in hydro["rows"]]
        save_trend_plot(ns, [r["deviation_mean"] for r in hydro["rows"]],
                        [2 * r["deviation_se"] for r in hydro["rows"]],
                        out / "hydro_trend.png")
    ok = hydro["monotone_within_2se"]
    print(f"compare: deviations {[round(r['deviation_mean'], 4) for r in hydro['rows']]} "
          f"monotone={ok} -> {out}")
    return 0


def cmd_couple(args) -> int:
    n, j = args.n, args.j
    blocks = int(round(args.t / args.delta))
    params = SimParams(n=n, j=j, seed=args.seed, horizon=args.t)
    x0 = to_ordered(sample_initial(make_profile("constant", 512, value=1.0), params))
    total_violations = []
    first = None
    for s in range(args.samples):
        rep = verify_sandwich(x0, ClockBundle(args.seed + s, n, j), j,
                              args.delta, args.delta_fine, blocks)
        total_violations.extend(rep.violations)
        if first is None and rep.first_violation:
            first = dict(rep.first_violation, sample=s)
    payload = {
        "samples": args.samples,
        "violations": total_violations,
        "first_violation": first,
        "n": n, "j": j, "delta": args.delta, "delta_fine": args.delta_fine,
        "t": args.t, "seed": args.seed, "version": __version__,
    }
    if args.out:
        _write_json(_outdir(args) / "couple.json", payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    ok = not total_violations
    print(f"couple: {args.samples} samples, "
          f"{'no violations' if ok else f'{len(total_violations)} VIOLATIONS'}")
    return 0 if ok else 1


def cmd_duality(args) -> int:
    from reswalk.acceptance import c11_duality
    res = c11_duality()
    payload = res.to_json_dict()
    if args.out:
        _write_json(_outdir(args) / "duality.json", payload)
    print(res.line())
    return 0 if res.passed else 1


def cmd_accept(args) -> int:
    if args.suite == "all":
        verdict = run_all()
    else:
        verdict = run_suite(args.suite)
    if args.out:
        _write_json(_outdir(args) / "acceptance.json", verdict)
    ok = verdict["passed"]
    print(f"acceptance: {'ALL PASS' if ok else 'FAILURES PRESENT'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reswalk",
        description="Current-reservoir lattice walkers and their free-boundary limit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replicas of the true particle process")
    _add_profile_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--replicas", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("barriers", help="bracketing flows over a dyadic ladder")
    p.add_argument("--init", dest="profile", help="profile JSON path")
    p.add_argument("--kind", default="constant", choices=["constant", "piecewise", "with-edge"])
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--edge", type=float, default=0.5)
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_barriers)

    p = sub.add_parser("separate", help="bracket the limit profile at one time")
    _add_profile_args(p)
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--gap-tol", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("compare", help="micro/macro comparison runs from a JSON config")
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--out", help="override the config's output directory")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("couple", help="five coupled flows on shared noise")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--delta-fine", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("duality", help="exact duality cross-check cases")
    p.add_argument("--out")
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--suite", default="all", choices=["all"] + SUITE_ORDER)
    p.add_argument("--out")
    p.set_defaults(func=cmd_accept)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
