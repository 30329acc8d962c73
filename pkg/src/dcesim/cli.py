"""Command-line front end.

Subcommands: spectrum, simulate, msa, sweep, compare.

Exit codes: 0 success, 2 configuration error, 3 spectrum failure,
4 integration or extraction failure, 5 comparison failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_growth
from .bogoliubov import (particle_number_history, project_bogoliubov, read_history_csv,
                         write_history_csv, write_summary_json)
from .cavity import coupling_coefficients
from .config import load_config
from .dynamics import integrate, max_wronskian_deviation, write_trajectory_csv
from .errors import ComparisonFailure, ConfigError, DceError
from .msa import predict
from .sweep import load_plan, run_sweep, workers_from_env

log = logging.getLogger("dcesim")


def _out_dir(args, run_dir: str) -> Path:
    out = Path(args.out) if args.out else Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cases(cfg):
    return [None, *cfg.cases]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    run = cfg.resolve(n_modes=args.modes)
    table = run.table
    gaps = np.append(table.gaps(), np.nan)
    lines = [f"{'n':>3} {'k_n':>22} {'phi_n':>22} {'M_n':>22} {'k_(n+1)-k_n':>22}"]
    for n, ((k, phi, M), g) in enumerate(zip(table.modes, gaps), start=1):
        gap = "" if np.isnan(g) else format(g, ".17g")
        lines.append(f"{n:>3} {k:>22.17g} {phi:>22.17g} {M:>22.17g} {gap:>22}")
    print("\n".join(lines))
    if args.out:
        out = _out_dir(args, run.out_dir)
        path = out / f"{run.prefix}_spectrum.csv"
        with path.open("w") as fh:
            fh.write("n,k,phi,M,gap\n")
            for n, ((k, phi, M), g) in enumerate(zip(table.modes, gaps), start=1):
                gap = "" if np.isnan(g) else format(g, ".17g")
                fh.write(f"{n},{k:.17g},{phi:.17g},{M:.17g},{gap}\n")
        log.info("wrote %s", path)
    return 0


def simulate_run(run, out: Path) -> dict:
    """Pipeline for one resolved run; writes the N_n(t) CSV and JSON summary."""
    coupling = coupling_coefficients(run.table, run.drive)
    traj = integrate(run.table, coupling, run.drive, run.integrator, checkpoints=run.checkpoints)
    t, N = particle_number_history(traj, run.table, run.convention)
    final = project_bogoliubov(traj[traj.index_of(run.drive.t_F)], run.table, t_F=run.drive.t_F,
                               convention=run.convention)
    hist = write_history_csv(t, N, out / f"{run.prefix}_N.csv")
    if run.trajectory:
        write_trajectory_csv(traj, out / f"{run.prefix}_trajectory.csv")
    extra = {
        "prefix": run.prefix, "code_version": __version__, "mode": run.mode,
        "history_csv": hist.name, "t_F": run.drive.t_F, "t_max": run.drive.t_max,
        "dt": traj.dt, "n_modes": len(run.table),
        "wronskian_deviation": max_wronskian_deviation(traj),
        "unitarity_deviation": final.unitarity_deviation(),
        "embedded_error_estimate": traj.error_estimate,
        "floor": run.floor, "tolerance": run.tolerance, "fit_end": run.fit_end,
    }
    summary = write_summary_json(final, out / f"{run.prefix}_summary.json", extra)
    return {"prefix": run.prefix, "N_tF": final.N.tolist(), "summary": str(summary),
            "history": str(hist), "wronskian_deviation": extra["wronskian_deviation"]}


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    results = []
    for case in _cases(cfg):
        run = cfg.resolve(case, n_modes=args.modes)
        out = _out_dir(args, run.out_dir)
        res = simulate_run(run, out)
        log.info("%s: N_%d(t_F) = %.6g", run.prefix, run.mode, res["N_tF"][run.mode - 1])
        results.append(res)
    _emit(results)
    return 0


def cmd_msa(args) -> int:
    cfg = load_config(args.config)
    preds = []
    for case in _cases(cfg):
        run = cfg.resolve(case, n_modes=args.modes)
        coupling = coupling_coefficients(run.table, run.drive)
        p = predict(run.table, coupling, run.drive)
        d = {"prefix": run.prefix, **p.to_dict()}
        if args.out:
            out = _out_dir(args, run.out_dir)
            p.write_json(out / f"{run.prefix}_msa.json")
        preds.append(d)
    _emit(preds)
    return 0


def cmd_sweep(args) -> int:
    plan = load_plan(args.config)
    workers = workers_from_env(args.workers or plan.workers)
    out = Path(args.out) if args.out else Path(plan.base.get("output", "dir"))
    result = run_sweep(plan, out, workers=workers)
    failed = sum(1 for s in result.status if s != "ok")
    _emit({"name": plan.name, "points": plan.size, "failed": failed,
           "csv": str(out / f"{plan.name}.csv"), "manifest": str(out / f"{plan.name}.json"),
           "elapsed_s": result.elapsed})
    return 0


def cmd_compare(args) -> int:
    try:
        sim = json.loads(Path(args.simulation).read_text())
        pred = json.loads(Path(args.msa).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read comparison inputs: {exc}") from None
    hist = Path(args.simulation).with_name(sim["history_csv"])
    t, N = read_history_csv(hist)
    mode = args.mode or sim.get("mode", 1)
    rate = float(pred.get("mode_rates", {}).get(str(mode), pred["rate"]))
    growing = rate > 0 and not pred.get("oscillatory", False)
    t_end = sim.get("fit_end") or sim["t_F"]
    cmp = compare_growth(t, N[:, mode - 1], rate, growing, t_end=t_end,
                         floor=sim.get("floor", 10.0), tol=sim.get("tolerance", 0.1))
    _emit({"mode": mode, "regime": pred["regime"], **cmp.to_dict()})
    if not cmp.consistent:
        raise ComparisonFailure(cmp.detail if cmp.deviation is None
                                else f"fitted rate deviates by {cmp.deviation:.3%}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (default: [output] dir)")
    common.add_argument("--modes", type=int, metavar="N", help="override the number of modes")
    common.add_argument("--workers", type=int, metavar="W",
                        help="sweep worker processes (DCE_WORKERS overrides)")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for scripting; every computation is deterministic")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="dcesim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, helptext in (
        ("spectrum", cmd_spectrum, "static eigenfrequencies, phases, norms and gaps"),
        ("simulate", cmd_simulate, "integrate the driven cavity and extract particle numbers"),
        ("msa", cmd_msa, "resonance classification and multiple-scale growth rates"),
        ("sweep", cmd_sweep, "run a sweep plan"),
    ):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.set_defaults(func=func)
    sp = sub.add_parser("compare", parents=[common],
                        help="fit the growth window of a simulation against an MSA prediction")
    sp.add_argument("simulation", help="summary JSON written by simulate")
    sp.add_argument("msa", help="prediction JSON written by msa --out")
    sp.add_argument("--mode", type=int, help="mode to compare (default: the run's analysis mode)")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
