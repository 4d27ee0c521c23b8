"""Command-line front end.

One subcommand per dataset family: orbit simulation, fixed points and
spectra, bifurcation loci, region scans, period diagrams, mode traces, and
torus scans.  All outputs are CSV or JSON lines with fixed 17-significant-
digit numbers, so identical invocations produce byte-identical files.

Exit codes: 0 success, 1 numerical failure (JSON error record on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import atlas, serialize
from .errors import RelayDDEError
from .events import classify, initial_state, simulate
from .params import Parameters
from .symmap import fixed_point, spectrum_of, x_H
from .torus import perturbed_seed, torus_scan


def _default_threads() -> int:
    env = os.environ.get("RELAY_DDE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_params(sp, sigma_default=-1):
    sp.add_argument("--Q", type=float, required=True, help="filter quality factor")
    sp.add_argument("--Omega", type=float, help="center frequency times delay")
    sp.add_argument("--sigma", type=int, default=sigma_default, choices=(-1, 1))


def _add_output(sp):
    sp.add_argument("--out", help="output file (default: stdout for the data payload)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                    help="worker processes for scans (default: RELAY_DDE_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="relay-dde",
        description="Event-driven simulation and bifurcation datasets for the "
        "bandpass-filtered delayed relay oscillator.",
    )
    ap.add_argument("--config", help="key=value file; command-line flags override it")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker processes for scans (default: RELAY_DDE_THREADS or all cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one orbit and classify it")
    _add_params(sp)
    sp.add_argument("--events", type=int, default=2000)
    sp.add_argument("--horizon", type=float, default=None, help="stop at this time instead")
    sp.add_argument("--x0", type=float, default=0.5, help="constant-history value of x")
    sp.add_argument("--y0", type=float, default=0.0)
    sp.add_argument("--seed-nu", type=int, default=None,
                    help="seed near the nu fixed point instead of a constant history")
    sp.add_argument("--seed-eps", type=float, default=1e-3)
    sp.add_argument("--sample-dt", type=float, default=None,
                    help="dense output step between events")
    _add_output(sp)

    sp = sub.add_parser("fixedpoint", help="fixed point of the four-symbol map")
    _add_params(sp)
    sp.add_argument("--nu", type=int, required=True)
    _add_output(sp)

    sp = sub.add_parser("spectrum", help="characteristic roots at a fixed point")
    _add_params(sp)
    sp.add_argument("--nu", type=int, required=True)
    _add_output(sp)

    sp = sub.add_parser("locus", help="bifurcation points along one mode")
    _add_params(sp)
    sp.add_argument("--kind", choices=("ns", "pf", "corner"), required=True)
    sp.add_argument("--nu", type=int, required=True)
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--samples", type=int, default=600)
    _add_output(sp)

    sp = sub.add_parser("region", help="existence/stability grid over (Q, Omega)")
    sp.add_argument("--nus", type=str, required=True, help="comma-separated frequencies")
    sp.add_argument("--sigma", type=int, default=-1, choices=(-1, 1))
    sp.add_argument("--q-min", type=float, required=True)
    sp.add_argument("--q-max", type=float, required=True)
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--resolution", type=str, default="400x400", help="NQxNOMEGA")
    _add_output(sp)

    sp = sub.add_parser("period-diagram", help="inverse-period branch table vs Omega")
    sp.add_argument("--nus", type=str, required=True)
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--sigma", type=int, default=-1, choices=(-1, 1))
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--samples", type=int, default=400)
    _add_output(sp)

    sp = sub.add_parser("mode-trace", help="follow one mode across Omega")
    sp.add_argument("--nu0", type=int, required=True, help="base frequency of the mode")
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--sigma", type=int, default=-1, choices=(-1, 1))
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--samples", type=int, default=400)
    _add_output(sp)

    sp = sub.add_parser("torus-scan", help="H-event sections along an Omega scan")
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--sigma", type=int, default=-1, choices=(-1, 1))
    sp.add_argument("--nu", type=int, default=3)
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--steps", type=int, default=12)
    sp.add_argument("--events", type=int, default=40000)
    sp.add_argument("--settle-events", type=int, default=None,
                    help="budget for the first scan point (default: 2x --events; "
                    "transients near the torus bifurcation are slow)")
    sp.add_argument("--transient-frac", type=float, default=0.2)
    sp.add_argument("--no-warm-start", action="store_true")
    sp.add_argument("--seed-eps", type=float, default=1e-3)
    _add_output(sp)
    return ap


def _apply_config(argv: list[str]) -> list[str]:
    """Prepend key=value pairs from --config as flags (flags override)."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    probe.add_argument("--threads", type=int)
    known, rest = probe.parse_known_args(argv)
    if not known.config:
        return argv
    injected: list[str] = []
    with open(known.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            injected.extend([f"--{key.strip()}", value.strip()])
    if not rest:
        return argv
    # rest starts with the subcommand; insert right after it so the injected
    # defaults parse in subcommand scope and explicit flags still override.
    out = [rest[0]] + injected + rest[1:]
    if known.threads is not None:
        out = ["--threads", str(known.threads)] + out
    return out


def _emit(args, header, rows, json_records):
    if args.format == "json":
        lines = [serialize.json_line(r) for r in json_records]
        text = "\n".join(lines) + ("\n" if lines else "")
    else:
        text = serialize.csv_text(header, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    p = Parameters(Q=args.Q, Omega=args.Omega, sigma=args.sigma)
    if args.seed_nu is not None:
        st = perturbed_seed(fixed_point(args.seed_nu, p), args.seed_eps)
    else:
        st = initial_state(args.x0, args.y0)
    rec = simulate(st, p, max_events=args.events, t_max=args.horizon,
                   sample_dt=args.sample_dt)
    cls = classify(rec, min_events=min(200, max(8, args.events // 2)))
    if args.out:
        if args.format == "json" or args.out.endswith(".json"):
            serialize.write_json_lines([serialize.orbit_record_json(rec, cls)], args.out)
        else:
            rows = rec.samples if rec.samples else [
                (e.time, hp.x, hp.y) for e, hp in zip(rec.events, rec.headpoints)
            ]
            serialize.write_csv(serialize.ORBIT_CSV_HEADER, rows, args.out)
    summary = {
        "command": "simulate",
        "Q": p.Q, "Omega": p.Omega, "sigma": p.sigma,
        "n_events": len(rec.events),
        "terminated": rec.terminated,
        "tag": cls.tag.value,
        "label": cls.label,
        "nu": cls.nu,
        "symmetry": cls.symmetry,
        "period": cls.period,
    }
    print(serialize.json_line(summary))
    return 0


def _cmd_fixedpoint(args) -> int:
    p = Parameters(Q=args.Q, Omega=args.Omega, sigma=args.sigma)
    fp = fixed_point(args.nu, p)
    xh = x_H(fp)
    sp = spectrum_of(fp)
    _emit(args, serialize.FIXEDPOINT_CSV_HEADER,
          [serialize.fixed_point_row(fp, xh, sp)],
          [serialize.fixed_point_json(fp, xh, sp)])
    return 0


def _cmd_locus(args) -> int:
    rng = (args.omega_min, args.omega_max)
    if args.kind == "ns":
        pts = atlas.mode_ns_points(args.nu, args.Q, rng, sigma=args.sigma,
                                   samples=args.samples)
    elif args.kind == "pf":
        pts = atlas.mode_pf_points(args.nu, args.Q, rng, sigma=args.sigma,
                                   samples=args.samples)
    else:
        # Mode-aware: the relabeling corner belongs to the base branch and
        # the terminating corner to the relabeled one.
        base = atlas.mode_base(args.nu, args.sigma)
        pts = []
        for kind, K, nu in (("corner1", base + 1, base),
                            ("corner2", 2 * (base + 1) + 1, base + 1)):
            om = atlas.corner_omega(args.Q, K)
            if rng[0] <= om <= rng[1]:
                pts.append(atlas.BifurcationPoint(kind=kind, Q=args.Q, Omega=om, nu=nu))
    _emit(args, serialize.LOCUS_CSV_HEADER,
          [serialize.bifurcation_point_row(pt) for pt in pts],
          [serialize.bifurcation_point_json(pt) for pt in pts])
    return 0


def _parse_nus(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _cmd_region(args, threads: int) -> int:
    nq, _, nom = args.resolution.partition("x")
    grid = atlas.region_scan(
        _parse_nus(args.nus),
        (args.q_min, args.q_max),
        (args.omega_min, args.omega_max),
        resolution=(int(nq), int(nom)),
        sigma=args.sigma,
        threads=threads,
    )
    rows = list(serialize.region_rows(grid))
    _emit(args, serialize.REGION_CSV_HEADER, rows,
          [dict(zip(serialize.REGION_CSV_HEADER, r)) for r in rows])
    return 0


def _cmd_period_diagram(args) -> int:
    rows = atlas.period_diagram(_parse_nus(args.nus), args.Q,
                                (args.omega_min, args.omega_max),
                                sigma=args.sigma, samples=args.samples)
    _emit(args, serialize.BRANCH_CSV_HEADER, serialize.branch_rows(rows),
          [dict(zip(serialize.BRANCH_CSV_HEADER, r)) for r in serialize.branch_rows(rows)])
    return 0


def _cmd_mode_trace(args) -> int:
    branch = atlas.mode_trace(args.nu0, args.Q, (args.omega_min, args.omega_max),
                              sigma=args.sigma, samples=args.samples)
    rows = list(serialize.branch_rows(branch.samples + branch.markers))
    _emit(args, serialize.BRANCH_CSV_HEADER, rows,
          [dict(zip(serialize.BRANCH_CSV_HEADER, r)) for r in rows])
    return 0


def _cmd_torus_scan(args) -> int:
    omegas = [float(om) for om in np.linspace(args.omega_min, args.omega_max, args.steps)]
    result = torus_scan(
        args.Q, omegas,
        sigma=args.sigma, nu=args.nu,
        max_events=args.events,
        transient_fraction=args.transient_frac,
        warm_start=not args.no_warm_start,
        seed_eps=args.seed_eps,
        settle_events=args.settle_events or 2 * args.events,
    )
    if args.out:
        if args.format == "json":
            serialize.write_json_lines(serialize.torus_summary_json(result), args.out)
        else:
            serialize.write_csv(serialize.TORUS_CSV_HEADER,
                                serialize.torus_rows(result), args.out)
    for line in serialize.torus_summary_json(result):
        print(serialize.json_line(line))
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    threads = getattr(args, "threads", None) or _default_threads()
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command in ("fixedpoint", "spectrum"):
            return _cmd_fixedpoint(args)
        if args.command == "locus":
            return _cmd_locus(args)
        if args.command == "region":
            return _cmd_region(args, threads)
        if args.command == "period-diagram":
            return _cmd_period_diagram(args)
        if args.command == "mode-trace":
            return _cmd_mode_trace(args)
        if args.command == "torus-scan":
            return _cmd_torus_scan(args)
        ap.error(f"unknown command {args.command}")
    except RelayDDEError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(serialize.json_line(err), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(serialize.json_line(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
