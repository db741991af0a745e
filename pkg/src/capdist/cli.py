"""Command-line interface: ``capdist {capdist,simulate,rayleigh,mac,dump-spec}``.

Every subcommand writes CSV with a fixed header and 12-significant-digit
numbers. Exit codes: 0 success, 1 input error, 2 some rows infeasible.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .channel import SpecError, dump_channel, estimation_profile, load_channel
from .mac import load_mac_channel, mac_estimation_cost, mac_region_compute
from .rayleigh import (
    DegenerateConstructionError,
    RayleighQuery,
    asymptotic_window,
    lower_bound,
    upper_bound,
)
from .sim import build_codebook, messages_for_rate, simulate
from .solver import InfeasibleError, capacity_distortion, capacity_distortion_cost, unconstrained_capacity

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2


class InputError(Exception):
    pass


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _unit_scale(units: str) -> float:
    return 1.0 / math.log(2.0) if units == "bits" else 1.0


def _grid(args) -> list[float]:
    if args.points < 1:
        raise InputError("--points must be >= 1")
    if args.dmax is None:
        raise InputError("--dmax is required")
    dmin = args.dmax if args.dmin is None else args.dmin
    if args.points == 1:
        return [args.dmax]
    if dmin > args.dmax:
        raise InputError("--dmin must not exceed --dmax")
    return [float(v) for v in np.linspace(dmin, args.dmax, args.points)]


def _write(rows: list[list[str]], header: list[str], out) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_capdist(args) -> int:
    spec = load_channel(args.channel)
    scale = _unit_scale(args.units)
    labels = [f"p_{a}" for a in spec.input_alphabet]
    header = ["D", "C", "lambda_d", "lambda_v", "active_d", "active_v",
              "distortion_attained", "cost_attained", "iterations", "converged", "status"] + labels
    rows, status = [], EXIT_OK
    for D in _grid(args):
        try:
            if args.input_cost_limit is None:
                sol = capacity_distortion(spec, D)
            else:
                sol = capacity_distortion_cost(spec, D, args.input_cost_limit)
        except InfeasibleError:
            rows.append([fmt(D)] + [""] * 9 + ["INFEASIBLE"] + [""] * len(labels))
            status = EXIT_PARTIAL
            continue
        rows.append([fmt(D), fmt(sol.value * scale), fmt(sol.lambda_d * scale),
                     fmt(sol.lambda_v * scale), fmt(sol.active_d), fmt(sol.active_v),
                     fmt(sol.distortion_attained), fmt(sol.cost_attained),
                     fmt(sol.iterations), fmt(sol.converged), "OK"]
                    + [fmt(p) for p in sol.input_pmf])
    _write(rows, header, args.out)
    return status


SIM_HEADER = ["n", "M", "rate", "trials", "pe_hat", "pe_se", "dbar_hat", "dbar_se",
              "genie_dbar_hat", "genie_se", "codebook_cost", "bound", "bound_se"]


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise InputError("--seed is required for simulate")
    if not args.blocklengths:
        raise InputError("--blocklengths is required")
    if (args.rate is None) == (args.messages is None):
        raise InputError("give exactly one of --rate or --messages")
    spec = load_channel(args.channel)
    if args.input_pmf is not None:
        p_x = np.asarray(args.input_pmf, float)
        if p_x.size != spec.nx or np.any(p_x < 0) or abs(p_x.sum() - 1) > 1e-9:
            raise InputError("--input-pmf must be a PMF over the input alphabet")
    elif args.dmax is not None:
        p_x = capacity_distortion(spec, args.dmax).input_pmf
    else:
        p_x = unconstrained_capacity(spec).input_pmf
    scale = _unit_scale(args.units)
    rows = []
    for n in args.blocklengths:
        M = args.messages if args.messages is not None else messages_for_rate(n, args.rate)
        cb = build_codebook(p_x, n, M, args.seed)
        rep = simulate(spec, cb, args.trials, args.seed)
        row = rep.as_row()
        row["rate"] *= scale
        rows.append([fmt(row[k]) for k in SIM_HEADER])
    _write(rows, SIM_HEADER, args.out)
    return EXIT_OK


def cmd_rayleigh(args) -> int:
    if not args.rho_list:
        raise InputError("--rho-list is required")
    use_scaling = args.d_list is None
    if use_scaling and args.alpha is None:
        raise InputError("give --d-list or --alpha (with optional --kappa)")
    if use_scaling and args.alpha >= 1.0:
        raise InputError("alpha = 1 is the bounded-capacity regime (D ~ kappa/rho): "
                         "capacity stays finite as rho grows and no log-log window applies")
    scale = _unit_scale(args.units)
    header = ["rho", "D", "lower", "upper", "window_lo", "window_hi", "status"]
    rows, status = [], EXIT_OK
    for rho in args.rho_list:
        ds = args.d_list if not use_scaling else [args.kappa * rho ** (-args.alpha)]
        for D in ds:
            try:
                q = RayleighQuery(rho, D)
            except ValueError as exc:
                raise InputError(str(exc)) from None
            flag = "OK"
            try:
                lo_b = lower_bound(q) * scale
            except DegenerateConstructionError:
                lo_b, flag = None, "DEGENERATE"
                status = EXIT_PARTIAL
            try:
                up_b = upper_bound(q, mean_correction=args.mean_correction) * scale
            except ValueError:
                up_b, flag = None, "INFEASIBLE"
                status = EXIT_PARTIAL
            win = (None, None)
            if use_scaling and rho > math.e:
                w_lo, w_hi = asymptotic_window(rho, args.alpha)
                win = (w_lo * scale, w_hi * scale)
            rows.append([fmt(rho), fmt(D), fmt(lo_b), fmt(up_b), fmt(win[0]), fmt(win[1]), flag])
    _write(rows, header, args.out)
    return status


def cmd_mac(args) -> int:
    spec = load_mac_channel(args.mac_channel)
    D = args.distortion if args.distortion is not None else args.dmax
    if D is None:
        raise InputError("--distortion (or --dmax) is required")
    scale = _unit_scale(args.units)
    try:
        region = mac_region_compute(spec, D, args.grid_steps)
    except InfeasibleError as exc:
        _write([["", "", "", "INFEASIBLE"]], ["R1", "R2", "cost", "certificate_id"], args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    rows, certs = [], []
    for k, p in enumerate(region.points):
        rows.append([fmt(p.r1 * scale), fmt(p.r2 * scale), fmt(p.cost), str(k)])
        certs.append({"id": k, "R1": p.r1 * scale, "R2": p.r2 * scale, "cost": p.cost,
                      "atoms": [{"weight": a.weight, "p_x1": list(a.p_x1), "p_x2": list(a.p_x2),
                                 "corner": a.corner} for a in p.atoms]})
    _write(rows, ["R1", "R2", "cost", "certificate_id"], args.out)
    cert_path = args.certificates or (f"{args.out}.certificates.json" if args.out else None)
    if cert_path:
        doc = {"D": D, "units": args.units, "grid_steps": args.grid_steps, "points": certs}
        Path(cert_path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_dump_spec(args) -> int:
    if args.mac_channel:
        text = json.dumps(load_mac_channel(args.mac_channel).to_dict(), indent=2)
    elif args.channel:
        text = dump_channel(load_channel(args.channel))
    else:
        raise InputError("--channel or --mac-channel is required")
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capdist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--units", choices=("nats", "bits"), default="nats")
        p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("capdist", help="C(D) (or C(D, V)) over a distortion grid")
    p.add_argument("--channel", required=True)
    p.add_argument("--dmin", type=float)
    p.add_argument("--dmax", type=float)
    p.add_argument("--points", type=int, default=1)
    p.add_argument("--input-cost-limit", type=float)
    common(p)
    p.set_defaults(func=cmd_capdist)

    p = sub.add_parser("simulate", help="Monte-Carlo codebook experiment")
    p.add_argument("--channel", required=True)
    p.add_argument("--blocklengths", type=_int_list)
    p.add_argument("--rate", type=float)
    p.add_argument("--messages", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--input-pmf", type=_float_list)
    p.add_argument("--dmax", type=float, help="use the C(D) optimiser at this D as composition")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rayleigh", help="C(D) bounds for Rayleigh fading")
    p.add_argument("--rho-list", type=_float_list)
    p.add_argument("--d-list", type=_float_list)
    p.add_argument("--alpha", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--mean-correction", action="store_true",
                   help="use E[W] = -gamma/2 in the upper bound")
    common(p)
    p.set_defaults(func=cmd_rayleigh)

    p = sub.add_parser("mac", help="two-user MAC region at fixed D")
    p.add_argument("--mac-channel", required=True)
    p.add_argument("--distortion", type=float)
    p.add_argument("--dmax", type=float)
    p.add_argument("--grid-steps", type=int, default=51)
    p.add_argument("--certificates", help="certificate JSON path (default <out>.certificates.json)")
    common(p)
    p.set_defaults(func=cmd_mac)

    p = sub.add_parser("dump-spec", help="echo a channel file in canonical form")
    p.add_argument("--channel")
    p.add_argument("--mac-channel")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_spec)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved here for partial infeasibility
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (InputError, ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
