"""Command-line interface: ``besovlab <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input (including unwritable output),
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .besov import (
    classify_regularity, dyadic_profile, estimate_exponent, grr_check, random_piecewise_linear,
    uniform_localtime_statistic,
)
from .errors import NumericalError, ValidationError
from .harness import emit_report, parse_config, run_experiment
from .lndcheck import LndSampleSpec, alphalnd_constant
from .loctime import local_time_field, localtime_cross_check
from .procsim import METHODS, read_path_csv, simulate, write_path_csv
from .procsim.types import KINDS

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON experiment config; flags override its keys")
    p.add_argument("--seed", type=int, help="u64 master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--replicates", type=int, help="number of replicates")
    p.add_argument("--quiet", action="store_true", help="suppress the JSON summary on stdout")
    return p


def _process_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--H", type=float)
    p.add_argument("--K", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--n-points", type=int, dest="n_points")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--sampler", choices=METHODS)


def _config_dict(args) -> dict:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as err:
            raise ValidationError(f"cannot read config: {err}") from None
        except json.JSONDecodeError as err:
            raise ValidationError(f"config is not valid JSON: {err}") from None
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
    overrides = {
        "kind": getattr(args, "kind", None), "H": getattr(args, "H", None), "K": getattr(args, "K", None),
        "d": getattr(args, "d", None), "n_points": getattr(args, "n_points", None),
        "t_max": getattr(args, "t_max", None), "sampler": getattr(args, "sampler", None),
        "seed": args.seed, "n_replicates": args.replicates, "out_dir": args.out,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    data.setdefault("n_points", 4097)
    data.setdefault("seed", 0)
    return data


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_path(args):
    if not args.path:
        raise ValidationError("--path is required (a CSV written by 'besovlab simulate')")
    return read_path_csv(args.path)


def cmd_simulate(args) -> dict:
    cfg = parse_config(_config_dict(args))
    paths = simulate(cfg.descriptor, cfg.grid, cfg.seed, cfg.n_replicates, method=cfg.sampler)
    out = _out_dir(args, "besovlab_out")
    files = []
    for path in paths:
        csv_path, _ = write_path_csv(path, out / f"path_r{path.replicate}.csv")
        files.append(str(csv_path))
    return {"files": files, "meta": {k: v for k, v in paths[0].meta.items() if k != "jitter"}}


def cmd_localtime(args) -> dict:
    path = _load_path(args)
    fld = local_time_field(path, args.bin_width)
    summary = {"bin_width": fld.dx, "n_bins": list(fld.n_bins), "n_times": int(fld.t_grid.size),
               "stride": fld.stride, "total_mass": float(fld.values[..., -1].sum() * fld.dx ** fld.d)}
    if args.out:
        csv_path, _ = fld.to_csv(_out_dir(args, ".") / "localtime.csv", time_stride=args.time_stride)
        summary["file"] = str(csv_path)
    if args.cross_check and path.d == 1:
        cc = localtime_cross_check(path, fld.dx, N=args.N)
        summary["cross_check"] = {"discrepancy": cc.discrepancy, "probes": list(map(float, cc.probes))}
    if args.nu is not None:
        prof = uniform_localtime_statistic(fld, args.q, args.nu, args.J_max)
        summary["verdict"] = classify_regularity(prof, args.nu, args.tau).to_dict()
        summary["S_j"] = prof.S.tolist()
    return summary


def cmd_besov(args) -> dict:
    path = _load_path(args)
    prof = dyadic_profile(path.values, args.p, args.J_max)
    out = {"A_j": prof.A.tolist(), "nu_hat": estimate_exponent(prof)}
    if args.nu is not None:
        out["verdict"] = classify_regularity(prof, args.nu, args.tau).to_dict()
    if args.out:
        out["file"] = str(prof.to_csv(_out_dir(args, ".") / "profile.csv"))
    return out


def cmd_lnd(args) -> dict:
    cfg = parse_config(_config_dict(args))
    k = args.k if args.k is not None else [2] * args.m
    alpha = args.alpha if args.alpha is not None else cfg.descriptor.alpha
    spec = LndSampleSpec(mode=args.mode, n_times=args.n_times, n_freq=args.n_freq, seed=cfg.seed)
    report = alphalnd_constant(cfg.descriptor, args.m, k, alpha, spec).to_dict()
    if args.out:
        p = _out_dir(args, ".") / "lnd_report.json"
        p.write_text(json.dumps(report, indent=2) + "\n")
    return report


def cmd_grr(args) -> dict:
    if args.path:
        g = read_path_csv(args.path).values[:, 0]
    else:
        rng = np.random.default_rng(args.seed or 0)
        g = random_piecewise_linear(rng, args.n_points)
    case = grr_check(g, args.p, args.nu, args.beta)
    return asdict(case)


def cmd_experiment(args) -> dict:
    if not args.config:
        raise ValidationError("experiment needs --config")
    cfg = parse_config(_config_dict(args))
    bundle = run_experiment(cfg)
    out = Path(args.out or cfg.out_dir or "besovlab_out")
    manifest = emit_report(bundle, out)
    return {"config_hash": cfg.config_hash, "aggregates": bundle.aggregates, "manifest": manifest}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="besovlab", description="Besov regularity of paths and local times.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate sample paths to CSV")
    _process_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("localtime", parents=[common], help="histogram local time of a path CSV")
    p.add_argument("--path")
    p.add_argument("--bin-width", type=float, dest="bin_width")
    p.add_argument("--time-stride", type=int, default=1, dest="time_stride")
    p.add_argument("--cross-check", action="store_true", dest="cross_check")
    p.add_argument("--N", type=float, default=300.0, help="Fourier cutoff for --cross-check")
    p.add_argument("--nu", type=float, help="also compute the uniform statistic at this nu")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--J-max", type=int, dest="J_max")
    p.add_argument("--tau", type=float, default=0.1)
    p.set_defaults(func=cmd_localtime)

    p = sub.add_parser("besov", parents=[common], help="dyadic Besov profile of a path CSV")
    p.add_argument("--path")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--nu", type=float)
    p.add_argument("--J-max", type=int, dest="J_max")
    p.add_argument("--tau", type=float, default=0.1)
    p.set_defaults(func=cmd_besov)

    p = sub.add_parser("lnd-check", parents=[common], help="empirical alpha-LND constant")
    _process_flags(p)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=float, nargs="+")
    p.add_argument("--alpha", type=float)
    p.add_argument("--mode", choices=("grid", "random"), default="grid")
    p.add_argument("--n-times", type=int, default=32, dest="n_times")
    p.add_argument("--n-freq", type=int, default=48, dest="n_freq")
    p.set_defaults(func=cmd_lnd)

    p = sub.add_parser("grr-check", parents=[common], help="Garsia-Rodemich-Rumsey bound on a function")
    p.add_argument("--path", help="path CSV (first coordinate); default: random piecewise-linear")
    p.add_argument("--n-points", type=int, default=257, dest="n_points")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.set_defaults(func=cmd_grr)

    p = sub.add_parser("experiment", parents=[common], help="run a configured experiment and emit a report")
    _process_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except NumericalError as err:
        print(f"besovlab: numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as err:
        print(f"besovlab: invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"besovlab: I/O error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        print(json.dumps(result, indent=2, default=float))
    return EXIT_OK
