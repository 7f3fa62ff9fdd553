"""Command-line experiment runner.

Subcommands: simulate | sigma | tgcc | beam | observe | fit | sweep |
reproduce <name> | list-experiments. Exit codes: 0 success, 1 config
error, 2 numerical failure, 3 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from torusdamp.beam import BeamDefinitenessError, BeamSpec, beam_vs_exact
from torusdamp.config import (
    ConfigError,
    build_damping,
    build_geodesic,
    build_grid,
    build_initial,
    build_sampling,
    build_solver_config,
    load_config,
    validate_config,
)
from torusdamp.experiments import EXPERIMENTS, run_experiment
from torusdamp.geodesic import check_tgcc, sigma_curve
from torusdamp.observe import ObservationWindow, sandwich_check
from torusdamp.rates import fit
from torusdamp.report import (
    ensure_outdir,
    plot_beam_comparison,
    plot_energy_trace,
    write_csv,
    write_manifest,
)
from torusdamp.solver import SolverInstabilityError, evolve

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3


def _simulate(cfg: dict, outdir: str, seed: int):
    grid = build_grid(cfg)
    w = build_damping(cfg.get("damping", {"family": "none"}),
                      period=grid.period)
    solver_cfg = build_solver_config(cfg, grid)
    state = build_initial(cfg, grid, np.random.default_rng(seed))
    t_end = float(cfg.get("t_end", 10.0))
    _, trace = evolve(state, w, t_end, config=solver_cfg)
    trace.to_csv(os.path.join(outdir, "trace.csv"))
    plot_energy_trace(trace, os.path.join(outdir, "energy.png"),
                      title=f"{cfg.get('kind')} run")
    return {"t_end": t_end, "final_energy": float(trace.energy[-1])}, trace


def _cmd_simulate(cfg, outdir, seed):
    summary, _ = _simulate(cfg, outdir, seed)
    return summary


def _cmd_sigma(cfg, outdir, seed):
    grid = build_grid(cfg)
    w = build_damping(cfg.get("damping", {"family": "none"}),
                      period=grid.period)
    if w is None:
        raise ConfigError("sigma experiment needs a damping section")
    sampling = build_sampling(cfg, grid)
    t_end = float(cfg.get("t_end", 10.0))
    times = np.linspace(0.0, t_end, 201)
    curve = sigma_curve(w, times, sampling, dim=grid.dim)
    write_csv(os.path.join(outdir, "sigma.csv"), ["t", "sigma"],
              [(float(t), float(s)) for t, s in zip(times, curve)])
    return {"sigma_at_t_end": float(curve[-1])}


def _cmd_tgcc(cfg, outdir, seed):
    grid = build_grid(cfg)
    w = build_damping(cfg.get("damping", {"family": "none"}),
                      period=grid.period)
    if w is None:
        raise ConfigError("tgcc experiment needs a damping section")
    sampling = build_sampling(cfg, grid)
    t0_window = float(cfg.get("observe", {}).get("duration", 1.0))
    report = check_tgcc(w, t0_window, sampling, dim=grid.dim)
    with open(os.path.join(outdir, "tgcc.json"), "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    return {"satisfied": report.satisfied, "min_average": report.value,
            "witness": report.as_dict()["witness"]}


def _cmd_beam(cfg, outdir, seed):
    grid = build_grid(cfg)
    w = build_damping(cfg.get("damping", {"family": "none"}),
                      period=grid.period)
    geo = build_geodesic(cfg, grid)
    beam_sec = cfg.get("beam", {})
    spec = BeamSpec(geodesic=geo, k=int(beam_sec.get("k", 32)),
                    t0=float(beam_sec.get("t0", 0.0)))
    solver_cfg = build_solver_config(cfg, grid)
    t_end = float(cfg.get("t_end", spec.t0 + 5.0))
    report = beam_vs_exact(spec, w, grid, t_end, config=solver_cfg)
    report.to_csv(os.path.join(outdir, "beam_vs_exact.csv"))
    plot_beam_comparison(report, os.path.join(outdir, "beam_vs_exact.png"))
    return {"k": spec.k, "sup_defect": report.sup_defect,
            "lower_bound_holds": report.lower_bound_holds()}


def _cmd_observe(cfg, outdir, seed):
    grid = build_grid(cfg)
    w = build_damping(cfg.get("damping", {"family": "none"}),
                      period=grid.period)
    if w is None:
        raise ConfigError("observe experiment needs a damping section")
    obs = cfg.get("observe", {})
    window = ObservationWindow(t0=float(obs.get("t0", 0.0)),
                               duration=float(obs.get("duration", 5.0)),
                               weight=w)
    state = build_initial(cfg, grid, np.random.default_rng(seed))
    solver_cfg = build_solver_config(cfg, grid)
    report = sandwich_check(state, w, window, config=solver_cfg)
    with open(os.path.join(outdir, "sandwich.json"), "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    return report.as_dict()


def _cmd_fit(cfg, outdir, seed):
    fit_sec = cfg.get("fit", {})
    model = fit_sec.get("model", "stretched")
    summary, trace = _simulate(cfg, outdir, seed)
    if model == "exp_sigma":
        grid = build_grid(cfg)
        w = build_damping(cfg.get("damping", {"family": "none"}),
                          period=grid.period)
        sampling = build_sampling(cfg, grid)
        trace.sigma = sigma_curve(w, trace.times, sampling, dim=grid.dim)
    window = fit_sec.get("window")
    rate = fit(trace, model, window=tuple(window) if window else None)
    rate.to_csv(os.path.join(outdir, "fit.csv"))
    summary["fit"] = rate.summary()
    return summary


_KIND_RUNNERS = {
    "simulate": _cmd_simulate,
    "sigma": _cmd_sigma,
    "tgcc": _cmd_tgcc,
    "beam": _cmd_beam,
    "observe": _cmd_observe,
    "fit": _cmd_fit,
}


def _set_dotted(cfg: dict, path: str, value):
    keys = path.split(".")
    node = cfg
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _run_sweep_point(args):
    cfg, outdir, seed, parameter, value = args
    point_cfg = copy.deepcopy(cfg)
    point_cfg.pop("sweep", None)
    _set_dotted(point_cfg, parameter, value)
    point_dir = ensure_outdir(
        os.path.join(outdir, f"{parameter.replace('.', '_')}_{value}"))
    started = time.time()
    try:
        summary = _KIND_RUNNERS[point_cfg["kind"]](point_cfg, point_dir, seed)
        status = "ok"
    except (SolverInstabilityError, BeamDefinitenessError,
            FloatingPointError) as exc:
        summary, status = {"error": str(exc)}, "numerical-failure"
    write_manifest(point_dir, point_cfg, time.time() - started,
                   extra={"summary": summary, "status": status})
    return value, status, summary


def _cmd_sweep(cfg, outdir, seed, threads):
    sweep = cfg.get("sweep")
    if not sweep or "parameter" not in sweep or not sweep.get("values"):
        raise ConfigError("sweep needs 'parameter' and nonempty 'values'")
    parameter = sweep["parameter"]
    values = sweep["values"]
    jobs = [(cfg, outdir, seed, parameter, v) for v in values]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_sweep_point, jobs))
    else:
        results = [_run_sweep_point(job) for job in jobs]
    rows = [(str(v), s, json.dumps(summ, default=str))
            for v, s, summ in results]
    write_csv(os.path.join(outdir, "sweep_summary.csv"),
              ["value", "status", "summary"], rows)
    failures = [r for r in results if r[1] != "ok"]
    return {"points": len(results), "failures": len(failures)}, bool(failures)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="torusdamp",
        description="Damped wave equation experiments on flat tori")
    parser.add_argument("command",
                        choices=["simulate", "sigma", "tgcc", "beam",
                                 "observe", "fit", "sweep", "reproduce",
                                 "list-experiments"])
    parser.add_argument("name", nargs="?", default=None,
                        help="experiment name (for reproduce)")
    parser.add_argument("--config", default=None, help="YAML config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name in sorted(EXPERIMENTS):
            print(name)
        return EXIT_OK

    started = time.time()
    try:
        outdir = ensure_outdir(args.out)

        if args.command == "reproduce":
            if not args.name:
                print("reproduce needs an experiment name "
                      "(see list-experiments)", file=sys.stderr)
                return EXIT_CONFIG
            if args.name not in EXPERIMENTS:
                print(f"unknown experiment {args.name!r}", file=sys.stderr)
                return EXIT_CONFIG
            result = run_experiment(args.name,
                                    os.path.join(outdir, args.name),
                                    seed=args.seed)
            write_manifest(os.path.join(outdir, args.name),
                           {"experiment": args.name, "seed": args.seed},
                           time.time() - started,
                           extra={"summary": result.summary,
                                  "passed": result.passed})
            for line in result.lines():
                print(line)
            return EXIT_OK if result.passed else EXIT_ACCEPTANCE

        if not args.config:
            print(f"{args.command} needs --config PATH", file=sys.stderr)
            return EXIT_CONFIG
        cfg = load_config(args.config)

        if args.command == "sweep":
            summary, failed = _cmd_sweep(cfg, outdir, args.seed, args.threads)
            write_manifest(outdir, cfg, time.time() - started,
                           extra={"summary": summary})
            print(json.dumps(summary, indent=2, default=str))
            return EXIT_NUMERICAL if failed else EXIT_OK

        if cfg["kind"] != args.command:
            raise ConfigError(
                f"config kind {cfg['kind']!r} does not match "
                f"subcommand {args.command!r}")
        summary = _KIND_RUNNERS[args.command](cfg, outdir, args.seed)
        write_manifest(outdir, cfg, time.time() - started,
                       extra={"summary": summary})
        print(json.dumps(summary, indent=2, default=str))
        return EXIT_OK

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverInstabilityError, BeamDefinitenessError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
