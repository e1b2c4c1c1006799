"""Command-line front end: phase | ramsey | map | dd | report.

Global flags select the configuration file, output directory, master seed
and worker count; subcommand flags override individual configuration values.
Exit status 0 means no validation or adequacy failure; 2 flags bad input,
3 flags a cutoff/convergence abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys

import numpy as np

from . import classical, dd, noise, quantum
from .config import ConfigError, SequenceParams, default_config, load_config_file
from .constants import MS_TO_S, TWO_PI, US_TO_S
from .output import (
    ensure_dir,
    fingerprint,
    fmt,
    parallel_map,
    write_csv,
    write_sidecar,
    write_text,
)
from .params import SystemParams, validate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ADEQUACY = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spingrav",
        description="Spin/nano-oscillator Ramsey gravimeter simulation toolkit")
    parser.add_argument("--config", help="configuration file (INI sections)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=12345, help="master seed")
    parser.add_argument("--workers", type=int, default=1, help="worker count")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", help="interferometer phase (closed form, quadrature, echo)")
    p.add_argument("--gravity", type=float, help="local g, m/s^2")
    p.add_argument("--gradient", type=float, help="magnetic gradient B_g, T/m")
    p.add_argument("--t0", type=float, help="oscillation period, ms")
    p.add_argument("--method", choices=["all", "closed", "quadrature"], default="all")
    p.add_argument("--csv", action="store_true", help="also write phase_methods.csv")

    p = sub.add_parser("ramsey", help="quantum Ramsey fringe (desk-scale coupling)")
    p.add_argument("--r", type=float, help="coupling ratio lambda/(hbar omega_z)")
    p.add_argument("--rg", type=float, help="gravity ratio dlam/(hbar omega_z)")
    p.add_argument("--t0", type=float, help="oscillation period, ms")
    p.add_argument("--t2", type=float, help="enable spin dephasing with this T2, ms")
    p.add_argument("--q", type=float, help="enable motional damping with this Q")
    p.add_argument("--nbar", type=float, help="initial thermal occupancy")
    p.add_argument("--nbar-th", type=float, default=0.0, help="damping bath occupancy")
    p.add_argument("--ncut", type=int, help="Fock cutoff")
    p.add_argument("--phipoints", type=int, help="number of scanned phases")
    p.add_argument("--allow-large-r", action="store_true",
                   help="lift the desk-scale r <= 4 guard (cutoff cost warning)")

    p = sub.add_parser("map", help="visibility or precision heatmap")
    p.add_argument("--kind", choices=["visibility", "precision"], required=True)
    p.add_argument("--nx", type=int, default=100)
    p.add_argument("--ny", type=int, default=100)
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--y-min", type=float)
    p.add_argument("--y-max", type=float)
    p.add_argument("--sigma-phi", type=float, default=0.01,
                   help="assumed phase accuracy for the precision map, rad")
    p.add_argument("--r", type=float, default=90.0,
                   help="coupling ratio for the visibility map")

    p = sub.add_parser("dd", help="continuous dynamical decoupling Monte Carlo")
    p.add_argument("--sigma-khz", type=float, default=10.0,
                   help="noise amplitude sigma/(2 pi), kHz")
    p.add_argument("--tau-us", type=float, default=10.0, help="noise memory, us")
    p.add_argument("--ntraj", type=int, default=1000)
    p.add_argument("--duration-free-us", type=float, default=100.0)
    p.add_argument("--duration-dd-us", type=float, default=250.0)
    p.add_argument("--omega1-mhz", type=float, default=1.0)
    p.add_argument("--omega2-khz", type=float, default=10.0)
    p.add_argument("--no-amp-noise", action="store_true")

    p = sub.add_parser("report", help="consistency report of quoted values")
    p.add_argument("--tolerance", type=float, default=0.10,
                   help="PASS threshold (relative)")
    return parser


def _load(args) -> tuple[SystemParams, SequenceParams]:
    if args.config:
        return load_config_file(args.config)
    return default_config()


def _sidecar_payload(args, params: SystemParams, seq: SequenceParams,
                     extra: dict | None = None) -> dict:
    config = params.to_dict()
    config["sequence"] = dataclasses.asdict(seq)
    # worker count is execution metadata, not configuration: it never changes
    # any numeric output, so it stays out of the sidecar by contract
    payload = {
        "command": args.command,
        "config": config,
        "seed": args.seed,
        "fingerprint": fingerprint(config),
    }
    if extra:
        payload.update(extra)
    return payload


def _cmd_phase(args, params: SystemParams, seq: SequenceParams) -> int:
    if args.gravity is not None:
        params = params.with_gravity(args.gravity)
    if args.gradient is not None:
        params = dataclasses.replace(
            params, coupling=dataclasses.replace(params.coupling, b_g=args.gradient))
    if args.t0 is not None:
        omega = TWO_PI / (args.t0 * MS_TO_S)
        params = dataclasses.replace(
            params, oscillator=dataclasses.replace(params.oscillator, omega_z=omega))
    report = validate(params)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVALID

    closed = classical.phase_shift(params, method="closed_form")
    rows = [("closed_form", closed.delta_phi)]
    print(f"delta_phi_closed = {fmt(closed.delta_phi)} rad")
    if args.method in ("all", "quadrature"):
        quad = classical.phase_shift(params, method="quadrature")
        rows.append(("quadrature", quad.delta_phi))
        print(f"delta_phi_quadrature = {fmt(quad.delta_phi)} rad")
    if args.method == "all":
        for protocol in classical.ECHO_PROTOCOLS:
            echo = classical.echo_phase_protocol(params, protocol)
            rows.append((f"echo_{protocol}", echo.delta_phi))
            print(f"delta_phi_echo_{protocol} = {fmt(echo.delta_phi)} rad")
    print(f"z0 = {fmt(params.z0)} m")
    print(f"delta_z = {fmt(params.delta_z)} m")
    print(f"branch_displacement = {fmt(params.branch_displacement)} m")
    print(f"r = {fmt(params.r)}")

    if args.csv:
        out = ensure_dir(args.out)
        path = f"{out}/phase_methods.csv"
        write_csv(path, ["method", "delta_phi_rad"], rows)
        write_sidecar(path, _sidecar_payload(args, params, seq))
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_ramsey(args, params: SystemParams, seq: SequenceParams) -> int:
    report = validate(params)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVALID
    r = seq.r if args.r is None else args.r
    r_g = seq.r_g if args.rg is None else args.rg
    n_cut = seq.fock_cutoff if args.ncut is None else args.ncut
    nbar = seq.nbar if args.nbar is None else args.nbar
    phi_points = seq.phi_points if args.phipoints is None else args.phipoints
    omega = params.oscillator.omega_z
    if args.t0 is not None:
        omega = TWO_PI / (args.t0 * MS_TO_S)
    if r > 4.0 and not args.allow_large_r:
        print(f"coupling ratio r = {r:g} exceeds the desk-scale guard r <= 4; "
              "rerun with --allow-large-r to accept the Fock-cutoff cost",
              file=sys.stderr)
        return EXIT_INVALID
    if r > 4.0:
        print(f"warning: r = {r:g} needs a cutoff of order {int((4 * r)**2 * 2)}; "
              "expect a large state space", file=sys.stderr)

    model = quantum.OscillatorSpinModel.from_ratios(omega, r, r_g,
                                                    D=params.constants.D)
    dis = quantum.Dissipators.from_q_t2(
        omega,
        Q=args.q if args.q is not None else math.inf,
        T2=args.t2 * MS_TO_S if args.t2 is not None else math.inf,
        nbar_th=args.nbar_th)
    try:
        fringe = quantum.ramsey_run(model, n_cut, phi_grid=np.linspace(
            0.0, TWO_PI, phi_points, endpoint=False), dissipators=dis, nbar=nbar)
    except quantum.CutoffError as exc:
        print(f"cutoff adequacy failure: {exc} "
              f"(suggested cutoff: {exc.suggested_cutoff})", file=sys.stderr)
        return EXIT_ADEQUACY

    out = ensure_dir(args.out)
    path = f"{out}/fringe.csv"
    config = params.to_dict()
    config["sequence"] = dataclasses.asdict(seq)
    write_csv(path, ["phi", "p0"], fringe.to_csv_rows(),
              comment=f"fingerprint={fingerprint(config)}")
    write_sidecar(path, _sidecar_payload(args, params, seq, {
        "run": {"r": r, "r_g": r_g, "n_cut": n_cut, "nbar": nbar,
                "omega_z": omega, "Q": args.q, "T2_ms": args.t2}}))
    print(f"delta_phi_mod_2pi = {fmt(fringe.delta_phi)} rad")
    print(f"closed_form_mod_2pi = {fmt(model.closed_form_phase() % TWO_PI)} rad")
    print(f"visibility = {fmt(fringe.visibility)}")
    print(f"fit_residual = {fmt(fringe.residual)}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_map(args, params: SystemParams, seq: SequenceParams) -> int:
    report = validate(params)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVALID
    if args.kind == "visibility":
        x = noise.AxisSpec("Q", args.x_min or 1e3, args.x_max or 1e9, args.nx, "log")
        y = noise.AxisSpec("T2", args.y_min or 1e-4, args.y_max or 1e-2, args.ny, "log")
        grid = noise.visibility_map(x, y, t0=params.t0, r=args.r)
    else:
        x = noise.AxisSpec("B_g", args.x_min or 1e4, args.x_max or 1e7, args.nx, "log")
        y = noise.AxisSpec("t0", args.y_min or 1e-4, args.y_max or 2e-3, args.ny, "lin")
        grid = noise.precision_map(params, x, y, sigma_phi=args.sigma_phi)

    xv, yv = grid.x.values(), grid.y.values()
    rows_idx = list(range(grid.y.n))

    def render_row(j):
        lines = []
        for i in range(grid.x.n):
            lines.append(
                f"{fmt(xv[i])},{fmt(yv[j])},{fmt(grid.values[j, i])},"
                f"{int(grid.mask[j, i])}")
        return "\n".join(lines)

    body = parallel_map(render_row, rows_idx, args.workers)
    out = ensure_dir(args.out)
    path = f"{out}/map_{args.kind}.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,value,feasible\n")
        fh.write("\n".join(body))
        fh.write("\n")
    write_sidecar(path, _sidecar_payload(args, params, seq, {
        "axes": {"x": dataclasses.asdict(grid.x), "y": dataclasses.asdict(grid.y)},
        "semantic": grid.semantic,
        "units": {"visibility": "dimensionless", "precision": "dimensionless",
                  "Q": "dimensionless", "T2": "s", "B_g": "T/m", "t0": "s"},
    }))
    best = grid.best_feasible()
    if best is None:
        print("feasible_cells = 0; best = none")
    else:
        value, bx, by = best
        print(f"best_feasible_value = {fmt(value)}")
        print(f"best_feasible_x = {fmt(bx)}")
        print(f"best_feasible_y = {fmt(by)}")
    if args.kind == "visibility":
        cpath = f"{out}/map_visibility_contour.csv"
        write_csv(cpath, ["t2", "q_threshold"],
                  [(t2, noise.visibility_threshold_q(t2, params.t0, args.r))
                   for t2 in yv])
        write_sidecar(cpath, _sidecar_payload(args, params, seq, {
            "semantic": "smallest Q reaching 1/e visibility per T2", "r": args.r}))
        print(f"wrote {cpath}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_dd(args, params: SystemParams, seq: SequenceParams) -> int:
    noise_spec = dd.OUNoise(sigma=TWO_PI * args.sigma_khz * 1e3,
                            tau_c=args.tau_us * US_TO_S, seed=args.seed)
    drive = dd.DriveSpec(omega_1=TWO_PI * args.omega1_mhz * 1e6,
                         omega_2=TWO_PI * args.omega2_khz * 1e3,
                         amp_noise_rel=0.0 if args.no_amp_noise else 0.005)
    drive.check()
    n_traj = args.ntraj
    chunks = dd.chunk_indices(n_traj)

    free_parts = parallel_map(
        lambda c: dd.free_phasor_sums(noise_spec, args.duration_free_us * US_TO_S, c),
        chunks, args.workers)
    free_env = dd.combine_sums(free_parts, fit_t_min=2.0 * noise_spec.tau_c)
    dd_parts = parallel_map(
        lambda c: dd.decoupled_phasor_sums(noise_spec, drive,
                                           args.duration_dd_us * US_TO_S, c),
        chunks, args.workers)
    dd_env = dd.combine_sums(dd_parts, free_amplitude=False)

    out = ensure_dir(args.out)
    for name, env in (("dd_free", free_env), ("dd_decoupled", dd_env)):
        path = f"{out}/{name}.csv"
        write_csv(path, ["t", "coherence", "stderr"],
                  zip(env.times, env.coherence, env.stderr))
        write_sidecar(path, _sidecar_payload(args, params, seq, {
            "noise": {"sigma": noise_spec.sigma, "tau_c": noise_spec.tau_c,
                      "seed": noise_spec.seed},
            "drive": dataclasses.asdict(drive),
            "n_traj": n_traj,
        }))
        print(f"wrote {path}")
    print(f"t2_free = {fmt(free_env.t2)} s")
    print(f"t2_decoupled = {fmt(dd_env.t2)} s")
    if noise_spec.sigma == 0.0 or not math.isfinite(free_env.t2):
        print("prolongation_ratio = undefined (no free decay resolved)")
    else:
        ratio = dd_env.t2 / free_env.t2
        print(f"prolongation_ratio = {fmt(ratio)}")
    return EXIT_OK


def _cmd_report(args, params: SystemParams, seq: SequenceParams) -> int:
    rep = noise.consistency_report(params, tolerance=args.tolerance)
    text = rep.to_text()
    out = ensure_dir(args.out)
    path = f"{out}/consistency_report.txt"
    write_text(path, text)
    write_sidecar(path, _sidecar_payload(args, params, seq,
                                         {"tolerance": args.tolerance}))
    print(text, end="")
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        params, seq = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    handlers = {
        "phase": _cmd_phase,
        "ramsey": _cmd_ramsey,
        "map": _cmd_map,
        "dd": _cmd_dd,
        "report": _cmd_report,
    }
    return handlers[args.command](args, params, seq)


if __name__ == "__main__":
    sys.exit(main())
