"""Command-line entry point: ``glassydecay {validate-kernel,simulate,verify,sweep}``.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfg
from .decay import sweep_eta
from .energy import energy_series
from .kernels import validate
from .pipeline import direct_energy_stride, fmt, oracle_gap, run_checks
from .simulator import simulate, simulate_direct

ENERGY_COLUMNS = ["E", "E_kin", "E_ela", "E_his", "dE"]


def _write_csv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def _config_path(args):
    if args.config and args.preset:
        raise cfg.ConfigError(["give either --config or --preset, not both"])
    if args.preset:
        return cfg.preset_path(args.preset)
    if args.config:
        return Path(args.config)
    raise cfg.ConfigError(["--config PATH or --preset NAME is required"])


def _scenario(args):
    sc = cfg.load_scenario(_config_path(args))
    if args.stride is not None:
        sc.stride = args.stride
    return sc


def cmd_validate_kernel(args):
    kernel, eta, tol = cfg.load_kernel_section(_config_path(args))
    report = validate(kernel, tol, eta)
    print(report.as_text())
    print()
    print(report.as_key_values())
    return 0 if report.ok else 1


def _per_mode_energy(traj, method):
    # per-mode shares; summing a column over modes at fixed t gives the total
    cols = []
    for m in range(traj.n_modes):
        en = energy_series(traj.mode(m), method)
        cols.append(np.column_stack([en.total, en.kinetic, en.elastic, en.history, en.rate]))
    return np.stack(cols, axis=1)


def _trajectory_rows(traj, stride, energy, aux):
    header = ["t", "mode", "u", "v", "conv"]
    if energy:
        header += ENERGY_COLUMNS
    n_terms = traj.z.shape[-1]
    if aux and traj.method == "fast":
        header += [f"z_{i + 1}" for i in range(n_terms)] + [f"w_{i + 1}" for i in range(n_terms)]
    yield header
    en = _per_mode_energy(traj, traj.method) if energy else None
    conv = traj.conv
    for j in range(0, traj.n_points, stride):
        for m in range(traj.n_modes):
            row = [fmt(traj.times[j]), str(m + 1), fmt(traj.u[j, m]), fmt(traj.v[j, m]), fmt(conv[j, m])]
            if energy:
                row += [fmt(x) for x in en[j, m]]
            if aux and traj.method == "fast":
                row += [fmt(x) for x in traj.z[j, m]] + [fmt(x) for x in traj.w[j, m]]
            yield row


def cmd_simulate(args):
    sc = _scenario(args)
    out = Path(args.out)
    methods = ["fast", "direct"] if args.method == "both" else [args.method]
    trajs = {}
    for method in methods:
        fn = simulate if method == "fast" else simulate_direct
        traj = fn(sc.operator, sc.kernel, sc.initial, sc.T, sc.dt)
        trajs[method] = traj
        path = out / f"simulate_{method}.csv"
        _write_csv(path, _trajectory_rows(traj, sc.stride, not args.no_energy, args.aux))
        print(f"wrote {path} ({traj.n_points} time points, {traj.n_modes} mode(s), method {method})")
    if len(trajs) == 2:
        f, d = trajs["fast"], trajs["direct"]
        gap_u, gap_E = oracle_gap(f, energy_series(f), d,
                                  energy_series(d, "direct", every=direct_energy_stride(d)))
        print(f"max gap fast vs direct: u {fmt(gap_u)}, E {fmt(gap_E)}")
    return 0


def cmd_verify(args):
    sc = _scenario(args)
    result = run_checks(sc)
    text = result.report()
    sys.stdout.write(text)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.txt").write_text(text, encoding="utf-8", newline="\n")
    _write_csv(out / "verify.csv", result.csv_rows())
    return 0 if result.passed else 1


def _parse_eta_list(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise cfg.ConfigError([f"--eta expects comma-separated numbers, got {text!r}"]) from None


def cmd_sweep(args):
    etas = _parse_eta_list(args.eta or "")
    if not etas:
        raise cfg.ConfigError(["no sweep points"])
    sc = _scenario(args)
    rows = sweep_eta(sc.kernel, etas, sc.operator, sc.initial, sc.T, sc.dt,
                     S_grid=sc.checks.S, window=sc.checks.fit_window)
    header = ["eta", "k0", "alpha_theory", "alpha_fitted", "bound_margin", "komornik_max", "skipped"]
    table = [header] + [
        [fmt(r.eta), fmt(r.k0), fmt(r.alpha_theory), fmt(r.alpha_fitted),
         fmt(r.bound_margin), fmt(r.komornik_max), r.skipped]
        for r in rows
    ]
    path = Path(args.out) / "sweep.csv"
    _write_csv(path, table)
    for r in rows:
        if r.skipped:
            print(f"eta={fmt(r.eta)}: skipped ({r.skipped})")
        else:
            print(f"eta={fmt(r.eta)}: alpha_theory={fmt(r.alpha_theory)} alpha_fitted={fmt(r.alpha_fitted)} "
                  f"bound_margin={fmt(r.bound_margin)} komornik_max={fmt(r.komornik_max)}")
    print(f"wrote {path}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario TOML file")
    common.add_argument("--preset", metavar="NAME",
                        help="bundled scenario: " + ", ".join(cfg.preset_names()))
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    common.add_argument("--stride", metavar="N", type=int, help="write every N-th time point")
    common.add_argument("--method", choices=["fast", "direct", "both"], default="fast")

    parser = argparse.ArgumentParser(
        prog="glassydecay", description="Energy decay laboratory for evolution equations with glassy memory."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate-kernel", parents=[common], help="check kernel assumptions")
    p.set_defaults(func=cmd_validate_kernel)
    p = sub.add_parser("simulate", parents=[common], help="write trajectory CSVs")
    p.add_argument("--aux", action="store_true", help="add z_i / w_i columns (fast method)")
    p.add_argument("--no-energy", action="store_true", help="omit energy columns")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("verify", parents=[common], help="run every check and write a report")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", parents=[common], help="decay constant against kernel rate eta")
    p.add_argument("--eta", metavar="LIST", help="comma-separated rates, e.g. 1,2,4")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.stride is not None and args.stride < 1:
        parser.error("--stride must be a positive integer")
    try:
        with warnings.catch_warnings(record=True) as caught, np.errstate(over="ignore", invalid="ignore"):
            warnings.simplefilter("always", RuntimeWarning)
            try:
                return args.func(args)
            finally:
                for msg in dict.fromkeys(str(w.message) for w in caught):
                    print(f"warning: {msg}", file=sys.stderr)
    except cfg.ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
