"""Command-line front end.

Subcommands: capacity, sweep, simulate, dare, scop, validate.
Exit codes: 0 success, 1 file/parse error, 2 model validation failure,
3 solver failure.  All outputs are deterministic functions of the inputs
and the seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .capacity import (
    SolverOptions,
    ar_stationary_capacity,
    extract_policy,
    kim_ma_capacity,
    scop_finite_n,
    solve_capacity,
    solve_capacity_scalar,
    waterfilling_capacity,
)
from .coding import SchemeConfig, simulate
from .errors import FbcapError
from .kalman import solve_dare
from .state_space import (
    ChannelModel,
    build_ar1,
    build_ma1,
    load_channel_json,
    load_noise_json,
    validate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

LN2 = math.log(2.0)


def _to_jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (tuple, list)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    return x


def _emit(data: dict, out: str | None):
    text = json.dumps(_to_jsonable(data), sort_keys=True, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _in_units(nats: float, units: str) -> float:
    return nats / LN2 if units == "bits" else nats


def _load_channel(path: str) -> ChannelModel:
    return load_channel_json(path)


def _check_assumptions(noise) -> list[str]:
    report = validate(noise)
    if report.assumptions_hold:
        return []
    return list(report.notes) or ["model assumptions failed"]


def _parse_range(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("range must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("range step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError("range is empty")
    return [start + k * step for k in range(count)]


def cmd_capacity(args) -> int:
    try:
        channel = _load_channel(args.model)
    except (OSError, ValueError, FbcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    notes = _check_assumptions(channel.noise)
    if notes:
        for note in notes:
            print(f"validation: {note}", file=sys.stderr)
        return EXIT_VALIDATION
    options = SolverOptions(constrain_gamma_zero=args.gamma_zero)
    try:
        if args.scalar and channel.is_scalar():
            sol = solve_capacity_scalar(channel, options)
        else:
            sol = solve_capacity(channel, options)
    except FbcapError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(
        {
            "capacity": _in_units(sol.capacity_nats, args.units),
            "units": args.units,
            "capacity_nats": sol.capacity_nats,
            "Pi": sol.Pi,
            "SigmaHat": sol.SigmaHat,
            "Gamma": sol.Gamma,
            "PsiY": sol.PsiY,
            "KY": sol.KY,
            "M": sol.M,
            "kkt_residual": sol.kkt_residual,
            "lmi_margins": list(sol.lmi_margins),
            "iterations": sol.iterations,
            "power_trace": float(np.trace(sol.Pi)),
        },
        args.out,
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        params = _parse_range(args.range)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.family not in ("ma", "ar"):
        print("error: family must be 'ma' or 'ar'", file=sys.stderr)
        return EXIT_INPUT
    units = args.units
    rows = []
    failures = 0
    for param in params:
        row = {"param": param}
        try:
            noise = build_ma1(param) if args.family == "ma" else build_ar1(param)
            channel = ChannelModel(Lambda=[[1.0]], P=args.power, noise=noise)
            sol = solve_capacity_scalar(channel)
            sol_iid = solve_capacity_scalar(
                channel, SolverOptions(constrain_gamma_zero=True)
            )
            row["c_fb"] = _in_units(sol.capacity_nats, units)
            row["r_iid"] = _in_units(sol_iid.capacity_nats, units)
            if args.family == "ma":
                c_kim = kim_ma_capacity(param, args.power) if abs(param) <= 1 else math.nan
            else:
                c_kim = ar_stationary_capacity(param, args.power)
            row["c_kim"] = _in_units(c_kim, units) if math.isfinite(c_kim) else math.nan
            try:
                row["c_waterfill"] = _in_units(waterfilling_capacity(channel), units)
            except FbcapError:
                row["c_waterfill"] = math.nan
            pol = extract_policy(sol)
            row["power_feedback"] = float(np.trace(pol.A @ sol.SigmaHat @ pol.A.T))
            row["power_iid"] = float(np.trace(pol.M))
        except FbcapError:
            failures += 1
            for key in ("c_fb", "c_kim", "r_iid", "c_waterfill",
                        "power_feedback", "power_iid"):
                row.setdefault(key, math.nan)
        rows.append(row)

    columns = ["param", "c_fb", "c_kim", "r_iid", "c_waterfill",
               "power_feedback", "power_iid"]
    target = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(target, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k]
                             for k in columns})
    finally:
        if args.out:
            target.close()
    return EXIT_SOLVER if failures == len(rows) else EXIT_OK


def cmd_simulate(args) -> int:
    try:
        channel = _load_channel(args.model)
    except (OSError, ValueError, FbcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    notes = _check_assumptions(channel.noise)
    if notes:
        for note in notes:
            print(f"validation: {note}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        sol = solve_capacity_scalar(channel)
        policy = extract_policy(sol)
        config = SchemeConfig(
            channel=channel,
            policy=policy,
            n=args.n,
            R=args.rate_frac * sol.capacity_bits,
            seed=args.seed,
            trials=args.trials,
            warmup=args.warmup,
        )
        result = simulate(config)
    except FbcapError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "msg", "msg_hat", "error_flag"])
            for t in range(result.trials):
                writer.writerow(
                    [t, int(result.msg[t]), int(result.msg_hat[t]),
                     int(result.error_flag[t])]
                )
    _emit(
        {
            "p_e": result.p_e,
            "ci_low": result.ci_low,
            "ci_high": result.ci_high,
            "avg_power": result.avg_power,
            "det_trace": result.det_trace,
            "n": args.n,
            "rate_bits": args.rate_frac * sol.capacity_bits,
            "trials": result.trials,
            "kernel": result.kernel,
        },
        None,
    )
    return EXIT_OK


def cmd_dare(args) -> int:
    try:
        noise = load_noise_json(args.model)
    except (OSError, ValueError, FbcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        sol = solve_dare(noise)
    except FbcapError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(
        {
            "Sigma": sol.Sigma,
            "Kp": sol.Kp,
            "Psi": sol.Psi,
            "closed_loop_radius": sol.closed_loop_radius,
            "iterations": sol.iterations,
            "residual": sol.residual,
            "maximal_only": sol.maximal_only,
        },
        args.out,
    )
    return EXIT_OK


def cmd_scop(args) -> int:
    try:
        channel = _load_channel(args.model)
    except (OSError, ValueError, FbcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    notes = _check_assumptions(channel.noise)
    if notes:
        for note in notes:
            print(f"validation: {note}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        value = scop_finite_n(channel, args.n)
    except FbcapError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(
        {
            "n": args.n,
            "value_per_step": _in_units(value, args.units),
            "units": args.units,
        },
        args.out,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        noise = load_noise_json(args.model)
    except (OSError, ValueError, FbcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = validate(noise)
    _emit(
        {
            "detectable": report.detectable,
            "controllable_unit_circle": report.controllable_unit_circle,
            "stationary": report.stationary,
            "spectral_radius": report.spectral_radius,
            "stabilizable": report.stabilizable,
            "sigma1_warning": report.sigma1_warning,
            "notes": list(report.notes),
            "assumptions_hold": report.assumptions_hold,
        },
        args.out,
    )
    if not report.assumptions_hold:
        for note in report.notes:
            print(f"validation: {note}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbcap",
        description="Feedback capacity of Gaussian channels with state-space noise",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--units", choices=["bits", "nats"], default="bits")
        p.add_argument("--out", default=None, help="write output to this file")

    p = sub.add_parser("capacity", help="feedback capacity of a channel model")
    p.add_argument("model", help="channel JSON (F,G,H,W,V,L,Sigma1,Lambda,P)")
    p.add_argument("--scalar", action="store_true",
                   help="use the reduced scalar-channel formulation")
    p.add_argument("--gamma-zero", action="store_true",
                   help="restrict to i.i.d. inputs (Gamma = 0)")
    add_common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("sweep", help="capacity curves for MA/AR families")
    p.add_argument("family", choices=["ma", "ar"])
    p.add_argument("range", help="parameter range start:stop:step")
    p.add_argument("--power", type=float, default=1.0)
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte-Carlo of the coding scheme")
    p.add_argument("model")
    p.add_argument("--rate-frac", type=float, default=0.8,
                   help="rate as a fraction of capacity")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--warmup", type=int, default=200)
    p.add_argument("--out", default=None, help="per-trial CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dare", help="stabilizing Riccati solution of a noise model")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_dare)

    p = sub.add_parser("scop", help="finite-horizon sequential program value")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    add_common(p)
    p.set_defaults(func=cmd_scop)

    p = sub.add_parser("validate", help="check model assumptions")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
