"""Batch command-line front end.

Subcommands: keyrate, sweep, profile, simulate. All output is CSV or JSON;
rates are nats by default with a --bits display option. Exit codes: 0 on
success, 2 on argument errors, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import channels as ch
from . import key_rate as kr
from . import lstate_sim as ls
from . import power_allocation as pa
from .errors import DomainError
from .numerics import Tolerance

_LN2 = math.log(2.0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerkey",
        description="Secret-key rates for layered-broadcast key generation "
                    "over slow-fading wiretap channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda1", type=float, default=1.0,
                        help="mean power gain of the legitimate channel (default 1)")
    common.add_argument("--lambda2", type=float, default=1.0,
                        help="mean power gain of the eavesdropper channel (default 1)")
    common.add_argument("--power", type=float, action="append",
                        help="total power budget P (repeatable where a sweep is meant)")
    common.add_argument("--grid-n", type=int, default=256, help="profile grid size")
    common.add_argument("--tol", type=float, default=1e-8, help="numeric tolerance")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (defaults to the natural one per command)")
    common.add_argument("--out", type=Path, default=None, help="output path (default stdout)")
    common.add_argument("--bits", action="store_true",
                        help="also print rates in bits (internal values stay in nats)")

    p = sub.add_parser("keyrate", parents=[common],
                       help="one rate: layered (lbc), single-level (slc), or full-CSIT (csit)")
    p.add_argument("--method", choices=("lbc", "slc", "csit"), required=True)
    p.add_argument("--profile-out", type=Path, default=None,
                   help="with --method lbc, also write the solved power profile CSV")

    p = sub.add_parser("sweep", parents=[common],
                       help="rate-vs-power CSV for all three methods")

    p = sub.add_parser("profile", parents=[common],
                       help="power profile CSV (x, I, rho)")
    p.add_argument("--method", choices=("keygen", "nonsecret", "nonfadingeve"),
                   required=True)
    p.add_argument("--eve-gain", type=float, default=0.5,
                   help="constant eavesdropper gain for --method nonfadingeve")

    p = sub.add_parser("simulate", parents=[common],
                       help="finite-state Monte Carlo against the formula rate")
    p.add_argument("--levels", type=int, default=50, help="number of states L")
    p.add_argument("--slots", type=int, default=100000, help="Monte Carlo slots")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--scale", type=int, default=32, help="bits-per-nat message granularity")
    p.add_argument("--protocol", action="store_true",
                   help="also run the message-level key agreement loop")
    p.add_argument("--channel-json", type=Path, default=None,
                   help="load an L-state channel (and optional powers) from JSON")
    return parser


def _single_power(args) -> float:
    if not args.power or len(args.power) != 1:
        raise _ArgError("exactly one --power is required here")
    if args.power[0] < 0:
        raise _ArgError("--power must be nonnegative")
    return args.power[0]


class _ArgError(Exception):
    pass


def _tol(args) -> Tolerance:
    return Tolerance(abs_tol=args.tol, rel_tol=args.tol)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _report_text(report: kr.KeyRateReport, bits: bool, fmt: str) -> str:
    data = json.loads(report.to_json())
    if bits:
        data["rate_bits"] = report.rate / _LN2
    if fmt == "csv":
        cols = ["method", "rate_nats", "err_est"] + (["rate_bits"] if bits else [])
        return ",".join(cols) + "\n" + ",".join(str(data[c]) for c in cols)
    return json.dumps(data, sort_keys=True, indent=2)


def _cmd_keyrate(args) -> int:
    P = _single_power(args)
    tol = _tol(args)
    if args.method == "lbc":
        report = kr.rate_optimal_rayleigh(args.lambda1, args.lambda2, P, tol, args.grid_n)
        if args.profile_out is not None:
            prof = pa.solve_rayleigh_profile(args.lambda1, args.lambda2, P, args.grid_n, tol)
            prof.to_csv(args.profile_out)
    elif args.method == "slc":
        report, _ = kr.rate_single_level(args.lambda1, args.lambda2, P, tol)
    else:
        pair = ch.ChannelPair(ch.Rayleigh(args.lambda1), ch.Rayleigh(args.lambda2))
        report = kr.rate_full_csit(pair, P, tol)
    _emit(_report_text(report, args.bits, args.format or "json"), args.out)
    return 0


def _cmd_sweep(args) -> int:
    if not args.power or len(args.power) < 2:
        raise _ArgError("sweep needs at least two --power values")
    tol = _tol(args)
    pair = ch.ChannelPair(ch.Rayleigh(args.lambda1), ch.Rayleigh(args.lambda2))
    rows = []
    for P in args.power:
        if P < 0:
            raise _ArgError("--power must be nonnegative")
        rows.append({
            "P": P,
            "rate_lbc": kr.rate_optimal_rayleigh(args.lambda1, args.lambda2, P, tol,
                                                 args.grid_n).rate,
            "rate_slc": kr.rate_single_level(args.lambda1, args.lambda2, P, tol)[0].rate,
            "rate_csit": kr.rate_full_csit(pair, P, tol).rate,
        })
    if (args.format or "csv") == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        lines = ["P,rate_lbc,rate_slc,rate_csit"]
        lines += [f"{r['P']!r},{r['rate_lbc']!r},{r['rate_slc']!r},{r['rate_csit']!r}"
                  for r in rows]
        _emit("\n".join(lines), args.out)
    return 0


def _cmd_profile(args) -> int:
    if not args.power:
        raise _ArgError("--power is required")
    if any(P < 0 for P in args.power):
        raise _ArgError("--power must be nonnegative")
    if len(args.power) > 1 and args.out is None:
        raise _ArgError("multi-power profile mode needs --out (one file per P)")
    tol = _tol(args)
    for P in args.power:
        if args.method == "keygen":
            prof = pa.solve_rayleigh_profile(args.lambda1, args.lambda2, P, args.grid_n, tol)
        elif args.method == "nonsecret":
            prof = pa.nonsecret_profile(ch.Rayleigh(args.lambda1), P, args.grid_n)
        else:
            prof = pa.nonfading_eve_profile(ch.Rayleigh(args.lambda1), args.eve_gain,
                                            P, args.grid_n)
        if (args.format or "csv") == "json":
            text = json.dumps({
                "P": prof.P, "x0": prof.x0, "x1": prof.x1,
                "provenance": prof.provenance,
                "x": prof.xs.tolist(), "I": prof.I_vals.tolist(),
                "rho": prof.rho_vals.tolist(),
            }, indent=2)
        else:
            text = prof.to_csv_text()
        if args.out is None:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
        else:
            path = args.out
            if len(args.power) > 1:
                path = path.with_name(f"{path.stem}_P{P:g}{path.suffix or '.csv'}")
            path.write_text(text if text.endswith("\n") else text + "\n")
    return 0


def _cmd_simulate(args) -> int:
    tol = _tol(args)
    if args.channel_json is not None:
        channel, powers = ls.load_channel_json(args.channel_json)
        if powers is None:
            if not args.power or len(args.power) != 1:
                raise _ArgError("channel file has no powers; give a single --power to split evenly")
            powers = np.full(channel.L, args.power[0] / channel.L)
        alloc = ls.LayerAllocation.from_powers(channel.gains, powers)
    else:
        P = _single_power(args)
        prof = pa.solve_rayleigh_profile(args.lambda1, args.lambda2, P, args.grid_n, tol)
        pair = ch.ChannelPair(ch.Rayleigh(args.lambda1), ch.Rayleigh(args.lambda2))
        channel, alloc = ls.discretize_profile(prof, pair, args.levels)
    formula = ls.finite_state_key_rate(channel, alloc)
    mean, std_err, _ = ls.simulate_rewards(channel, alloc, args.slots, args.seed)
    data = {
        "levels": channel.L,
        "slots": args.slots,
        "seed": args.seed,
        "formula_rate_nats": formula,
        "empirical_rate_nats": mean,
        "std_err_nats": std_err,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    if args.bits:
        data["formula_rate_bits"] = formula / _LN2
        data["empirical_rate_bits"] = mean / _LN2
    if args.protocol:
        outcome = ls.run_protocol(channel, alloc, args.slots, args.scale, args.seed)
        data["keys_match"] = outcome.keys_match
        data["key_bits"] = outcome.key_bits
    if (args.format or "json") == "csv":
        text = "key,value\n" + "\n".join(f"{k},{data[k]}" for k in sorted(data))
        _emit(text, args.out)
    else:
        _emit(json.dumps(data, sort_keys=True, indent=2), args.out)
    return 0


_COMMANDS = {
    "keyrate": _cmd_keyrate,
    "sweep": _cmd_sweep,
    "profile": _cmd_profile,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except _ArgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (DomainError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
