"""Command-line orchestration: seeded reproducible runs from JSON configs.

Subcommands mirror the pipeline stages:

    hjhom env audit    --config c.json --out out/      assumption audit report
    hjhom solve        --config c.json --out out/      one initial-value solve
    hjhom fundamental  --config c.json --out out/      fundamental-solution table
    hjhom lbar         --config c.json --out out/      effective Lagrangian estimate
    hjhom hbar         --config c.json --out out/      + Legendre transform
    hjhom cell         --config c.json --out out/      cell-problem plateau ladder
    hjhom verify       --config c.json --out out/      homogenization eps ladder
    hjhom bounds       --config c.json --out out/      inf-sup upper bounds
    hjhom emit-plots   --report out/report.json --out out/

Exit codes: 0 = pass, 1 = run error (bad config, solver failure),
2 = the run finished but an acceptance verdict failed (non-monotone ladder,
audit violation, unconverged averaging).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import bounds as bounds_mod
from . import cell as cell_mod
from .config import ConfigError, environment_spec, load_config, validate_config
from .effective import estimate_lagrangian, legendre_transform
from .environment import EnvironmentError_, Seed, audit_assumptions, make_environment
from .fundamental import Vertex, compute_fundamental
from .homogenize import initial_profile, verify_homogenization
from .report import (ExperimentReport, emit_plotdata, write_convex_table,
                     write_csv, write_grid_function, write_json)
from .solver import GridSpec, SchemeParams, SolverError, solve_ivp


def _solver_params(cfg):
    s = cfg.get("solver", {})
    kw = {}
    for key in ("cfl_safety", "num_hamiltonian", "dissipation_source",
                "max_gradient_cap"):
        if key in s:
            kw[key] = s[key]
    return SchemeParams(**kw)


def _grid(cfg, default_extent=8.0, default_dx=0.05):
    s = cfg.get("solver", {})
    dx = s.get("dx", default_dx)
    extent = s.get("extent", default_extent)
    n_spec = environment_spec(cfg)
    npts = max(8, int(round(extent / dx)))
    boundary = s.get("boundary", "linear-extrapolation")
    if boundary == "linear-extrapolation":
        npts += 1
    return GridSpec(dimension=n_spec.dimension,
                    extent=(extent,) * n_spec.dimension,
                    points=(npts,) * n_spec.dimension,
                    boundary=boundary)


def _task_audit(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    seeds = cfg.get("seeds", [0])
    payload = {"audits": []}
    worst = True
    for s in seeds:
        env = make_environment(spec, Seed(s))
        rep = audit_assumptions(env,
                                p_grid=np.linspace(-task.get("p_max", 3.0),
                                                   task.get("p_max", 3.0), 17),
                                n_xt=task.get("n_xt", 25))
        payload["audits"].append({"seed": s, **rep.to_dict()})
        worst = worst and rep.passed
    return payload, {"assumptions_hold": worst}, []


def _task_solve(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    env = make_environment(spec, Seed(cfg.get("seeds", [0])[0]))
    grid = _grid(cfg)
    u0 = initial_profile(task.get("profile", "cone"), grid,
                         slope=task.get("slope", 1.0))
    params = _solver_params(cfg)
    t_final = task.get("t_final", 0.5)
    n_snap = task.get("snapshots", 0)
    snaps = np.linspace(0, t_final, n_snap + 2)[1:-1] if n_snap else ()
    res = solve_ivp(u0, env, task.get("epsilon", 1.0), params, t_final,
                    snapshot_times=snaps)
    files = []
    path = os.path.join(out_dir, "solution.csv")
    write_grid_function(path, res.final)
    files.append(path)
    for k, s in enumerate(res.snapshots):
        p = os.path.join(out_dir, f"snapshot_{k:03d}.csv")
        write_grid_function(p, s)
        files.append(p)
    payload = {"t_final": t_final, "n_steps": res.n_steps, "dt": res.dt,
               "sup_norm": float(np.max(np.abs(res.final.values)))}
    return payload, {}, files


def _task_fundamental(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    env = make_environment(spec, Seed(cfg.get("seeds", [0])[0]))
    grid = _grid(cfg, default_extent=12.0)
    vtx = task.get("vertex", [0.0, 0.0])
    vertex = Vertex(tuple(vtx[:-1]), vtx[-1])
    tab = compute_fundamental(env, vertex, task.get("t_final", 1.0), grid,
                              steepness=task.get("steepness", 4.0),
                              epsilon_scaling=task.get("epsilon", 1.0),
                              params=_solver_params(cfg),
                              n_snapshots=task.get("n_snapshots", 17),
                              certify=task.get("certify", True))
    base = os.path.join(out_dir, "fundamental")
    np.save(base + ".npy", tab.values)
    meta = {"vertex": list(vertex.y) + [vertex.s], "times": tab.times.tolist(),
            "steepness": tab.steepness, "epsilon": tab.epsilon_scaling,
            "certified": tab.certified, "certify_gap": tab.certify_gap,
            "grid": {"extent": list(grid.extent), "points": list(grid.points),
                     "origin": list(grid.origin), "boundary": grid.boundary}}
    write_json(base + ".json", meta)
    payload = {"certified": tab.certified, "certify_gap": tab.certify_gap,
               "times": tab.times.tolist()}
    return payload, {"certified": tab.certified}, [base + ".npy", base + ".json"]


def _lbar_estimate(cfg, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    seeds = cfg.get("seeds", [0])
    v_max = task.get("v_max", 2.5)
    n_v = task.get("n_v", 51)
    ladder = task.get("rho_ladder", [2.0, 4.0, 8.0, 16.0])
    dx = cfg.get("solver", {}).get("dx", 0.04)
    return estimate_lagrangian(spec, seeds, np.linspace(-v_max, v_max, n_v),
                               ladder, dx=dx,
                               steepness=task.get("steepness", 4.0),
                               certify_first=task.get("certify_first", False),
                               threads=threads)


def _table_payload(table):
    return {"axis": table.axes[0].tolist(), "raw": table.raw.tolist(),
            "convexified": table.values.tolist(),
            "trusted": table.trusted.astype(int).tolist()}


def _task_lbar(cfg, out_dir, threads):
    est = _lbar_estimate(cfg, threads)
    path = os.path.join(out_dir, "lbar.csv")
    write_convex_table(path, est.table)
    payload = {"lbar": _table_payload(est.table),
               "cauchy_increments": est.run.cauchy_increments().tolist(),
               "seed_spread": est.run.seed_spread().tolist(),
               "converged": est.converged}
    return payload, {"averaging_converged": est.converged}, [path]


def _task_hbar(cfg, out_dir, threads):
    est = _lbar_estimate(cfg, threads)
    task = cfg["task"]
    p_max = task.get("p_max", 1.5)
    n_p = task.get("n_p", 41)
    hbar = legendre_transform(est.table, np.linspace(-p_max, p_max, n_p))
    f1 = os.path.join(out_dir, "lbar.csv")
    f2 = os.path.join(out_dir, "hbar.csv")
    write_convex_table(f1, est.table)
    write_convex_table(f2, hbar)
    payload = {"lbar": _table_payload(est.table), "hbar": _table_payload(hbar),
               "converged": est.converged,
               "trusted_fraction": float(np.mean(hbar.trusted))}
    verdicts = {"averaging_converged": est.converged,
                "some_trusted_momenta": bool(np.any(hbar.trusted))}
    return payload, verdicts, [f1, f2]


def _task_cell(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    seed = cfg.get("seeds", [0])[0]
    dx = cfg.get("solver", {}).get("dx", spec.period_or_cell / 16)
    p_list = task.get("p_list", [1.0])
    eps_list = task.get("eps_list", [0.25, 0.125, 0.0625])
    rows = []
    plateau = []
    all_dec = True
    for p in p_list:
        sols = [cell_mod.solve_cell_problem(
                    spec, seed, p, e, dx=dx,
                    gradient_cap=task.get("gradient_cap", 4.0),
                    relax_time=task.get("relax_time"))
                for e in eps_list]
        h_fine, unc = sols[-1].hamiltonian_estimate()
        rep = cell_mod.plateau_check(sols, h_fine, p=p)
        plateau.append(rep.to_dict())
        all_dec = all_dec and rep.decreasing
        for e, s in zip(rep.eps, rep.statistics):
            rows.append((p, e, s))
    path = os.path.join(out_dir, "plateau.csv")
    write_csv(path, ["p", "eps", "statistic"], rows)
    payload = {"plateau": plateau}
    return payload, {"plateau_decreasing": all_dec}, [path]


def _task_verify(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    seeds = cfg.get("seeds", [0, 1, 2])
    est = _lbar_estimate(cfg, threads)
    kw = {}
    if "slope" in task:
        kw["slope"] = task["slope"]
    conv = verify_homogenization(
        spec, seeds, task.get("profile", "cone"), est.table,
        task.get("eps_list", [0.25, 0.125, 0.0625]),
        window_radius=task.get("window_radius", 1.0),
        horizon=task.get("horizon", 0.5),
        ratio_bound=task.get("ratio_bound", 0.8),
        threads=threads, profile_kwargs=kw)
    path = os.path.join(out_dir, "convergence.csv")
    write_csv(path, ["eps", "error", "seed_spread"],
              [(r["eps"], r["error"], r["spread"]) for r in conv.to_rows()])
    payload = {"convergence": conv.to_rows(), "ratios": conv.ratios,
               "monotone": conv.monotone, "padding_gap": conv.meta["padding_gap"],
               "lbar_converged": est.converged}
    return payload, {"error_trend_decreasing": conv.monotone}, [path]


def _task_bounds(cfg, out_dir, threads):
    spec = environment_spec(cfg)
    task = cfg["task"]
    env = make_environment(spec, Seed(cfg.get("seeds", [0])[0]))
    ansatz = bounds_mod.ansatz_from_environment(env, max_mode=task.get("max_mode", 1))
    rows = []
    records = []
    for p in task.get("p_list", [0.0, 1.0]):
        b = bounds_mod.infsup_upper_bound(env, p, ansatz,
                                          budget=task.get("budget", 250),
                                          n_grid=task.get("n_grid", 32))
        rows.append((p, b.value, b.psi0_value))
        records.append(b.to_dict())
    path = os.path.join(out_dir, "bounds.csv")
    write_csv(path, ["p", "upper_bound", "psi0_bound"], rows)
    return ({"bounds": records},
            {"certified": all(r["certified"] for r in records)}, [path])


_TASKS = {
    "audit": _task_audit,
    "solve": _task_solve,
    "fundamental": _task_fundamental,
    "lbar": _task_lbar,
    "hbar": _task_hbar,
    "cell": _task_cell,
    "verify": _task_verify,
    "bounds": _task_bounds,
}


def run(cfg, out_dir=None, threads=1, dry_run=False):
    """Execute the task described by a validated config; returns the report."""
    validate_config(cfg)
    task = cfg["task"]["kind"]
    out_dir = out_dir or cfg.get("out_dir", "out")
    if dry_run:
        return ExperimentReport(config=cfg, task=task,
                                payload={"dry_run": True}, verdicts={})
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.time()
    payload, verdicts, files = _TASKS[task](cfg, out_dir, threads)
    rep = ExperimentReport(config=cfg, task=task, payload=payload,
                           verdicts=verdicts, files=files,
                           wall_time=time.time() - t0)
    rep.write(out_dir)
    return rep


def _build_parser():
    ap = argparse.ArgumentParser(prog="hjhom", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", required=(name != "emit-plots"))
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, action="append", default=None,
                       help="override config seeds (repeatable)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dry-run", action="store_true")
        return p

    env_p = sub.add_parser("env", help="environment inspection")
    env_sub = env_p.add_subparsers(dest="env_command", required=True)
    audit_p = env_sub.add_parser("audit", help="assumption audit")
    audit_p.add_argument("--config", required=True)
    audit_p.add_argument("--out", default=None)
    audit_p.add_argument("--seed", type=int, action="append", default=None)
    audit_p.add_argument("--threads", type=int, default=1)
    audit_p.add_argument("--dry-run", action="store_true")

    for name in ("solve", "fundamental", "lbar", "hbar", "cell", "verify", "bounds"):
        add(name)
    plots = sub.add_parser("emit-plots", help="plot-ready CSVs from a report")
    plots.add_argument("--report", required=True)
    plots.add_argument("--out", default=None)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)

    if args.command == "emit-plots":
        with open(args.report) as fh:
            rep = json.load(fh)
        out_dir = args.out or os.path.dirname(os.path.abspath(args.report))
        files = emit_plotdata(rep, out_dir)
        for f in files:
            print(f)
        return 0

    task = "audit" if args.command == "env" else args.command
    try:
        cfg = load_config(args.config)
        if cfg["task"]["kind"] != task:
            raise ConfigError(
                f"task.kind = {cfg['task']['kind']!r} does not match the "
                f"{task!r} subcommand")
        if args.seed:
            cfg["seeds"] = list(args.seed)
        rep = run(cfg, out_dir=args.out, threads=args.threads,
                  dry_run=args.dry_run)
    except (ConfigError, EnvironmentError_, SolverError, ValueError,
            NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.dry_run:
        print("config valid; dry run, nothing executed")
        return 0
    status = "pass" if rep.passed else "FAIL"
    print(f"{task}: {status} ({rep.wall_time:.1f}s); report in "
          f"{args.out or cfg.get('out_dir', 'out')}")
    for name, ok in rep.verdicts.items():
        print(f"  verdict {name}: {'pass' if ok else 'FAIL'}")
    return 0 if rep.passed else 2


if __name__ == "__main__":
    sys.exit(main())
