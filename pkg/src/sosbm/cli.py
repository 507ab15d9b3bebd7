"""Command-line runner: simulate paths, run convergence ladders, audits and estimation.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
configuration or input/output error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, SosBmError
from .estimators import REPORT_FIELDS, estimate_full, estimate_rho_beta, estimate_sigmas
from .experiments import (
    LADDER_COLUMNS,
    ExperimentConfig,
    bounds_suite,
    chapman_kolmogorov_suite,
    evaluate_ladder,
    kernel_bound_suite,
    ladder_row_cells,
    normalization_suite,
    g_hat_mass_suite,
    reduction_suite,
    run_ladder,
    scaling_suite,
    starved,
)
from .paths import read_path_csv, write_path_csv
from .reports import VerificationReport, format_float, write_table
from .sampler import map_paths
from .statistics import NormalizingSequence, test_function
from .transforms import REDUCTION_COLUMNS

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
SCOPES = ("kernel", "bounds", "scaling", "prop57", "reduction")


def _overrides(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = _overrides(args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out"] = args.out
    if args.config:
        return ExperimentConfig.load(args.config, overrides)
    return ExperimentConfig().with_overrides(overrides)


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args)
    out = _out_dir(config)
    n = config.ladder[-1]
    folder = out / "paths"
    folder.mkdir(exist_ok=True)

    def write(path) -> list:
        name = f"path_{path.stream:05d}.csv"
        write_path_csv(path, folder / name)
        return [path.stream, path.seed, path.stream, f"paths/{name}"]

    rows = map_paths(config.params, config.x, n, config.t, config.seed, config.paths, write, args.jobs)
    manifest = out / "manifest.csv"
    write_table(manifest, ("path_id", "seed", "stream", "file"), rows)
    if not args.no_timestamp:
        text = manifest.read_text()
        stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
        manifest.write_text(f"# created={stamp}\n{text}")
    print(f"wrote {len(rows)} paths with n={n} to {folder}")
    return EXIT_OK


def _print_ladder(rows) -> None:
    header = f"{'n':>9} {'u_n':>10} {'mean':>11} {'se':>9} {'limit':>11} {'z':>7} {'hits':>5} {'rho^':>7} {'beta^':>7}"
    print(header)
    for r in rows:
        rho = r.medians.get("rho_hat", math.nan)
        beta = r.medians.get("beta_hat", math.nan)
        print(f"{r.n:>9d} {r.u_n:>10.4g} {r.statistic.mean:>11.5g} {r.statistic.se:>9.3g} "
              f"{r.limit_value:>11.5g} {r.z_score:>7.2f} {r.hits:>5d} {rho:>7.4f} {beta:>7.4f}")


def cmd_convergence(args: argparse.Namespace) -> int:
    config = load_config(args)
    out = _out_dir(config)
    rows = run_ladder(config, args.jobs)
    write_table(out / "convergence.csv", LADDER_COLUMNS, [ladder_row_cells(r) for r in rows])
    _print_ladder(rows)
    short = starved(config, rows)
    if short is not None:
        print(f"conditioning starved: only {short.hits} of {config.paths} paths reached 0 at n={short.n}",
              file=sys.stderr)
        return EXIT_FAILED
    outcome = evaluate_ladder(config, rows)
    if outcome.negative_control:
        print("negative control: g(0) != 0, divergence from the local-time limit is the expected outcome")
    write_table(out / "convergence_checks.csv", ("check", "pass"),
                [[name, "true" if ok else "false"] for name, ok in outcome.checks.items()])
    for name, ok in outcome.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if outcome.passed else EXIT_FAILED


def _verify_report(scope: str, config: ExperimentConfig | None, jobs: int | None, out: Path) -> bool:
    if scope == "reduction":
        if config is None:
            reports = reduction_suite(jobs=jobs)
        else:
            reports = reduction_suite([config.params.as_sos()], paths=config.paths, n=config.ladder[-1],
                                      t=config.t, seed=config.seed, jobs=jobs)
        write_table(out / "verify_reduction.csv", REDUCTION_COLUMNS, [r.row() for r in reports])
        for r in reports:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.config} ks={r.ks_statistic:.5f} "
                  f"threshold={r.ks_threshold:.5f}")
        return all(r.passed for r in reports)
    params_list = None if config is None else [config.params]
    if scope == "kernel":
        report = VerificationReport("kernel")
        if config is None:
            parts = (normalization_suite(), chapman_kolmogorov_suite(), kernel_bound_suite())
        else:
            p = config.params.skew_sticky if hasattr(config.params, "skew_sticky") else config.params
            parts = (normalization_suite(rhos=(p.rho,), betas=(p.beta,)),
                     chapman_kolmogorov_suite(rhos=(p.rho,), betas=(p.beta,), seed=config.seed),
                     kernel_bound_suite(rhos=(p.rho,), betas=(p.beta,)))
        for part in parts:
            report.extend(part)
    elif scope == "bounds":
        report = bounds_suite()
    elif scope == "scaling":
        cs = (0.25, 4.0) if config is None else config.c
        report = scaling_suite(params_list, cs)
    else:
        report = g_hat_mass_suite(params_list) if config is None else g_hat_mass_suite(
            params_list, ladder=tuple(float(n) for n in config.ladder))
    report.write(out / f"verify_{scope}.csv")
    failed = [r for r in report.rows if not r.passed]
    failed_checks = [k for k, ok in report.checks.items() if not ok]
    print(f"{scope}: {len(report.rows)} rows, {len(failed)} failed rows, {len(failed_checks)} failed checks")
    for r in failed[:10]:
        print(f"FAIL {r.quantity} t={format_float(r.t)} x={format_float(r.x)} y={format_float(r.y)} "
              f"lhs={format_float(r.lhs)} rhs={format_float(r.rhs)}")
    for k in failed_checks:
        print(f"FAIL {k}")
    return report.passed


def cmd_verify(args: argparse.Namespace) -> int:
    uses_config = bool(args.config or args.set)
    config = load_config(args) if uses_config else None
    out = _out_dir(config if config is not None else ExperimentConfig(out=args.out or "out"))
    scopes = SCOPES if args.scope == "all" else (args.scope,)
    ok = True
    for scope in scopes:
        ok &= _verify_report(scope, config, args.jobs, out)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_estimate(args: argparse.Namespace) -> int:
    path = read_path_csv(args.input)
    g = test_function(args.g)
    u = NormalizingSequence.parse(args.u)
    if args.joint:
        report = estimate_full(path, g, u)
    else:
        report = estimate_rho_beta(path, g, u, args.sigma_plus, args.sigma_minus).merge(estimate_sigmas(path))
    row = report.row()
    if args.out:
        target = Path(args.out)
        if target.suffix != ".csv":
            target.mkdir(parents=True, exist_ok=True)
            target = target / "estimate.csv"
        write_table(target, REPORT_FIELDS, [row])
    print(",".join(REPORT_FIELDS))
    print(",".join(row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value or JSON experiment config")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--jobs", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line in manifests")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sosbm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write path CSV files and a manifest").set_defaults(
        func=cmd_simulate)
    sub.add_parser("convergence", parents=[common], help="Monte Carlo ladder of statistics and estimators"
                   ).set_defaults(func=cmd_convergence)
    verify = sub.add_parser("verify", parents=[common], help="numerical audits")
    verify.add_argument("scope", choices=SCOPES + ("all",))
    verify.set_defaults(func=cmd_verify)
    est = sub.add_parser("estimate", parents=[common], help="estimate parameters from a path CSV")
    est.add_argument("input", help="path CSV file")
    est.add_argument("--g", default="hat", help="test function name")
    est.add_argument("--u", default="sqrt", help="normalizing sequence: sqrt, log or power:<alpha>")
    est.add_argument("--sigma-plus", type=float, default=1.0)
    est.add_argument("--sigma-minus", type=float, default=1.0)
    est.add_argument("--joint", action="store_true", help="estimate the volatilities too")
    est.set_defaults(func=cmd_estimate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SosBmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
