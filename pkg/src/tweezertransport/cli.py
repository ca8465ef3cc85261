"""Command-line entry point wiring the experiment drivers to files on disk.

Every subcommand writes a results.csv and a meta.json (schema version, fully
resolved configuration, seed, wall time) under the output directory, so any
run can be reproduced from its artifacts alone. Identical seeds give
byte-identical results.csv files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, validate
from .dcrab import optimize
from .errors import ConfigurationError, NumericalError
from .experiments import (
    ScanResult,
    convergence_study,
    extract_t_min,
    improvement_ratio,
    noise_ensemble,
    qsl_vs_distance,
    recapture_sweep,
    scan_time_vs_fom,
    transport_fom,
)
from .fom import time_averaged_fom
from .propagator import evolve_ensemble, make_plan
from .pulses import piecewise_quadratic, read_pulse_csv
from .spectrum import solve_spectrum

SCHEMA_VERSION = 1


def _write_meta(out: Path, config: RunConfig, command: str, extra: dict, wall_time: float):
    import scipy

    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "command": command,
        "seed": config.seed,
        "config": config.to_dict(),
        "wall_time_s": wall_time,
    }
    meta.update(extra)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")


def _prepare_output(config: RunConfig, command: str) -> Path:
    out = Path(config.output_dir) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scan_to_disk(scan: ScanResult, out: Path, config: RunConfig, command: str, t0: float):
    scan.write_csv(out / "results.csv")
    extra = {k: v for k, v in scan.metadata.items() if k != "params"}
    _write_meta(out, config, command, extra, time.time() - t0)


def cmd_spectrum(config: RunConfig, out: Path, t0: float) -> int:
    problem = config.problem()
    spec = solve_spectrum(problem.trap(), problem.grid(), problem.units(), config.physics.n_states)
    spec.write_csv(out / "results.csv")
    gap = float(spec.energies[1] - spec.energies[0]) if spec.n_states > 1 else float("nan")
    extra = {
        "n_bound_states": spec.n_states,
        "gap_rad_us": gap,
        "two_tau_us": 4.0 * np.pi / gap if spec.n_states > 1 else None,
    }
    _write_meta(out, config, "spectrum", extra, time.time() - t0)
    print(f"lowest gap: {gap:.6g} rad/us, 2*tau = {extra['two_tau_us']:.4g} us")
    return 0


def cmd_transport(config: RunConfig, out: Path, t0: float) -> int:
    problem = config.problem()
    pulse = piecewise_quadratic(problem.r_0, problem.r_f, config.pulse.t_p_us)
    noise = config.noise.to_spec(config.seed) if config.noise.enabled else None
    realization = None
    if noise is not None:
        from .noise import sample_realization

        n_steps = int(round((pulse.t_p + problem.t_c_us) / problem.dt_us))
        realization = sample_realization(noise, problem.dt_us, n_steps, index=0)
    record = time_averaged_fom(
        problem.ensemble(),
        pulse,
        problem.trap(),
        problem.units(),
        dt=problem.dt_us,
        t_c=problem.t_c_us,
        noise=realization,
    )
    record.write_csv(out / "results.csv")
    plan = make_plan(pulse, problem.trap(), problem.units(), problem.dt_us,
                     pulse.t_p + problem.t_c_us, noise=realization, record_observables=True)
    _, trajectories = evolve_ensemble(problem.ensemble(), plan)
    for i, traj in enumerate(trajectories):
        traj.write_csv(out / f"trajectory_{i}.csv")
    pulse.write_csv(out / "pulse_pq.csv", problem.dt_us, pulse.t_p)
    _write_meta(out, config, "transport", {"j_avg": record.j_avg}, time.time() - t0)
    print(f"J_avg = {record.j_avg:.6g}")
    return 0


def cmd_scan_time(config: RunConfig, out: Path, t0: float) -> int:
    problem = config.problem()
    grid = config.pulse.t_p_grid or [float(t) for t in np.arange(5.0, 41.0, 1.0)]
    optimizer = config.optimizer.to_dcrab(config.seed) if config.pulse.kind == "oc" else None
    workers = config.workers or os.cpu_count() or 1
    scan = scan_time_vs_fom(
        problem, config.physics.temperatures_uK, grid, config.pulse.kind, optimizer,
        workers=workers,
    )
    if config.pulse.kind == "oc":
        # the ramp baseline is cheap next to the optimization; emit the
        # relative improvement alongside the optimized scan
        pq_scan = scan_time_vs_fom(
            problem, config.physics.temperatures_uK, grid, "pq", workers=workers
        )
        improvement_ratio(pq_scan, scan).write_csv(out / "improvement.csv")
    _scan_to_disk(scan, out, config, "scan-time", t0)
    for temp in config.physics.temperatures_uK:
        t_min = extract_t_min(scan, config.experiment.threshold, temp)
        print(f"T = {temp} uK: t_min = {t_min} us")
    return 0


def cmd_optimize(config: RunConfig, out: Path, t0: float) -> int:
    problem = config.problem()
    pulse = piecewise_quadratic(problem.r_0, problem.r_f, config.pulse.t_p_us)
    record = optimize(
        pulse,
        lambda p: transport_fom(problem, p),
        config.optimizer.to_dcrab(config.seed),
        dt=problem.dt_us,
    )
    record.write_evals_csv(out / "results.csv")
    record.write_superiterations_csv(out / "superiterations.csv")
    record.best_pulse.write_csv(out / "pulse_oc.csv", problem.dt_us, pulse.t_p)
    extra = {
        "initial_fom": record.initial_fom,
        "best_fom": record.best_fom,
        "n_evals": record.n_evals,
        "stop_reason": record.stop_reason,
    }
    _write_meta(out, config, "optimize", extra, time.time() - t0)
    print(f"J: {record.initial_fom:.6g} -> {record.best_fom:.6g} in {record.n_evals} evaluations")
    return 0


def cmd_noise_ensemble(config: RunConfig, out: Path, t0: float) -> int:
    from .noise import sample_realization

    problem = config.problem()
    spec = config.noise.to_spec(config.seed)
    scan = noise_ensemble(
        problem,
        config.pulse.t_p_us,
        spec,
        config.noise.n_runs,
        workers=config.workers or os.cpu_count() or 1,
    )
    n_steps = int(round((config.pulse.t_p_us + problem.t_c_us) / problem.dt_us))
    sample_realization(spec, problem.dt_us, n_steps, index=0).write_csv(out / "realization_0.csv")
    _scan_to_disk(scan, out, config, "noise-ensemble", t0)
    print(
        f"J_avg over {config.noise.n_runs} noise realizations: "
        f"{scan.metadata['mean_j_avg']:.4g} +- {scan.metadata['std_j_avg']:.4g} "
        f"(noiseless {scan.metadata['noiseless_j_avg']:.4g})"
    )
    return 0


def cmd_recapture(config: RunConfig, out: Path, t0: float, pulse_file: str | None) -> int:
    problem = config.problem()
    if pulse_file:
        pulse_oc = read_pulse_csv(pulse_file)
        pulse_rerun = None
    else:
        base = piecewise_quadratic(problem.r_0, problem.r_f, config.pulse.t_p_us)
        fom = lambda p: transport_fom(problem, p)
        cfg = config.optimizer.to_dcrab(config.seed)
        pulse_oc = optimize(base, fom, cfg, dt=problem.dt_us).best_pulse
        cfg_rerun = dataclasses.replace(cfg, seed=cfg.seed + 1)
        pulse_rerun = optimize(base, fom, cfg_rerun, dt=problem.dt_us).best_pulse
    tau = np.arange(0.0, config.experiment.tau_rc_max_us + 1e-9, config.experiment.tau_rc_step_us)
    scan = recapture_sweep(
        problem,
        config.pulse.t_p_us,
        pulse_oc,
        config.experiment.n_transports,
        tau,
        pulse_oc_rerun=pulse_rerun,
        n_shots=config.experiment.n_shots,
        shot_seed=config.seed,
    )
    _scan_to_disk(scan, out, config, "recapture", t0)
    print(f"distinguishability metric: {scan.metadata['metric_by_n_transports']}")
    print(f"floor: {scan.metadata['floor']:.4g}")
    return 0


def cmd_qsl_distance(config: RunConfig, out: Path, t0: float) -> int:
    problem = config.problem()
    optimizer = config.optimizer.to_dcrab(config.seed)
    scan = qsl_vs_distance(
        problem,
        config.experiment.distances_um,
        optimizer=optimizer,
        threshold=config.experiment.threshold,
    )
    _scan_to_disk(scan, out, config, "qsl-distance", t0)
    for row in scan.rows:
        print(f"d = {row['distance_um']} um ({row['pulse_kind']}): t_min = {row['t_min_us']} us")
    return 0


def cmd_converge(config: RunConfig, out: Path, t0: float) -> int:
    scan = convergence_study(
        config.experiment.property,
        transport_t_p=config.experiment.convergence_t_p_us,
        release_time=config.experiment.release_time_us,
        depth_mK=config.physics.depth_mK,
        waist_um=config.physics.waist_um,
        distance_um=config.physics.distance_um,
    )
    _scan_to_disk(scan, out, config, "converge", t0)
    for row in scan.rows:
        print(f"{row['property']} scale {row['scale']}: infidelity = {row['infidelity']:.4g}")
    if "fitted_slope" in scan.metadata:
        print(f"fitted log-log slope: {scan.metadata['fitted_slope']:.3f}")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "transport": cmd_transport,
    "scan-time": cmd_scan_time,
    "optimize": cmd_optimize,
    "noise-ensemble": cmd_noise_ensemble,
    "recapture": cmd_recapture,
    "qsl-distance": cmd_qsl_distance,
    "converge": cmd_converge,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweezertransport",
        description="Finite-temperature atom transport in moving optical tweezers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--output-dir", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--t-p", type=float, default=None, help="pulse duration in us")
        p.add_argument("--dt", type=float, default=None, help="time step in us")
        p.add_argument("--dx", type=float, default=None, help="grid spacing in um")
        p.add_argument("--extent", type=float, default=None, help="grid extent in um")
        p.add_argument("--depth", type=float, default=None, help="trap depth in mK (negative)")
        p.add_argument("--waist", type=float, default=None, help="beam waist in um")
        p.add_argument("--distance", type=float, default=None, help="transport distance in um")
        p.add_argument("--temperature", type=float, action="append", default=None,
                       help="temperature in uK (repeatable)")
        p.add_argument("--n-states", type=int, default=None)
        p.add_argument("--pulse-kind", choices=["pq", "oc"], default=None)
        p.add_argument("--budget", type=int, default=None, help="optimizer evaluation budget")
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--workers", type=int, default=None,
                       help="worker pool size for scan points (default: all cores)")
        p.add_argument("--noise", action="store_true", help="enable trap noise")
        p.add_argument("--validate-only", action="store_true")
        if name == "recapture":
            p.add_argument("--pulse-file", type=str, default=None,
                           help="optimized pulse CSV (skips the built-in optimization)")
        if name == "converge":
            p.add_argument("--property", choices=["dt", "dx", "extent", "N_s"], default=None)


    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.output_dir is not None:
        config.output_dir = args.output_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.t_p is not None:
        config.pulse.t_p_us = args.t_p
    if args.dt is not None:
        config.numerics.dt_us = args.dt
    if args.dx is not None:
        config.numerics.dx_um = args.dx
    if args.extent is not None:
        config.numerics.extent_um = args.extent
    if args.depth is not None:
        config.physics.depth_mK = args.depth
    if args.waist is not None:
        config.physics.waist_um = args.waist
    if args.distance is not None:
        config.physics.distance_um = args.distance
    if args.temperature:
        config.physics.temperatures_uK = args.temperature
    if args.n_states is not None:
        config.physics.n_states = args.n_states
    if args.pulse_kind is not None:
        config.pulse.kind = args.pulse_kind
    if args.budget is not None:
        config.optimizer.max_total_evals = args.budget
    if args.threshold is not None:
        config.experiment.threshold = args.threshold
    if args.workers is not None:
        config.workers = args.workers
    if args.noise:
        config.noise.enabled = True
    if getattr(args, "property", None) is not None:
        config.experiment.property = args.property
    return config


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = _apply_overrides(config, args)
        report = validate(config)
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        if not report.ok:
            for error in report.errors:
                print(f"error: {error}", file=sys.stderr)
            return 2
        if args.validate_only:
            print("configuration valid")
            return 0
        t0 = time.time()
        out = _prepare_output(config, args.command)
        if args.command == "recapture":
            return _COMMANDS[args.command](config, out, t0, getattr(args, "pulse_file", None))
        return _COMMANDS[args.command](config, out, t0)
    except (ConfigurationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
