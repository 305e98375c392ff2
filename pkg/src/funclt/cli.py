"""Command-line entry point.

Subcommands
-----------
run             execute an experiment config and write CSV/JSON results
list-scenarios  show the built-in array presets and their hypothesis flags
audit-eq1       one recovery audit (covariance preservation) from flags
verify-clt      projection-normality verification for one preset

Exit codes: 0 success; 1 configuration / usage error; 2 runtime failure;
3 a requested audit or verification reported FAIL.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiment import (
    ConfigError,
    ExperimentError,
    WORKERS_ENV,
    list_scenarios,
    make_mechanism,
    mechanism_label,
    parse_config_dict,
    read_config_file,
    run,
)
from .imputation import lemma_eq1_audit
from .normality import clt_verify
from .presets import get_scenario


def _add_mechanism_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mechanism",
        default="mcar-bernoulli",
        choices=("mcar-bernoulli", "mcar-interval", "mar-threshold"),
        help="missingness mechanism kind",
    )
    parser.add_argument(
        "--observe-prob",
        type=float,
        default=None,
        help="mcar-bernoulli: probability a point is observed (default 0.5)",
    )
    parser.add_argument(
        "--interval-length",
        type=float,
        default=None,
        help="mcar-interval: missing-interval length as a fraction (default 0.3)",
    )
    parser.add_argument(
        "--probe-count", type=int, default=None, help="mar-threshold: probe points"
    )
    parser.add_argument(
        "--threshold", type=float, default=None, help="mar-threshold: probe-mean cut"
    )
    parser.add_argument(
        "--miss-frac", type=float, default=None, help="mar-threshold: block fraction"
    )
    parser.add_argument(
        "--alt-frac",
        type=float,
        default=None,
        help="mar-threshold: alternate block fraction",
    )


def _mechanism_from_args(args: argparse.Namespace):
    return make_mechanism(
        args.mechanism,
        p=args.observe_prob,
        length=args.interval_length,
        probe_count=args.probe_count,
        threshold=args.threshold,
        miss_frac=args.miss_frac,
        alt_frac=args.alt_frac,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funclt",
        description="Simulation experiments for functional-data limit theorems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, help="TOML or JSON config file")
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override root seed")
    p_run.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"override worker count (env default: {WORKERS_ENV})",
    )
    p_run.add_argument("--reps", type=int, default=None, help="override replicates")

    sub.add_parser("list-scenarios", help="show built-in presets and their flags")

    p_audit = sub.add_parser(
        "audit-eq1", help="check that recovery preserves an element's covariance"
    )
    p_audit.add_argument("--scenario", default="gaussian-j2")
    p_audit.add_argument("--n", type=int, default=256, help="row size")
    p_audit.add_argument("--m", type=int, default=1, help="member index")
    p_audit.add_argument("--reps", type=int, default=5000)
    p_audit.add_argument("--seed", type=int, default=0)
    p_audit.add_argument("--grid-size", type=int, default=64)
    p_audit.add_argument("--basis-size", type=int, default=None)
    p_audit.add_argument(
        "--noise-mode",
        default="conditional",
        choices=("conditional", "second-moment"),
        help="'second-moment' is the deliberately broken variant (should FAIL)",
    )
    _add_mechanism_flags(p_audit)

    p_verify = sub.add_parser(
        "verify-clt", help="projection-normality verification for one preset"
    )
    p_verify.add_argument("--scenario", default="lf-pass")
    p_verify.add_argument(
        "--n-list", type=int, nargs="+", default=[64, 256, 1024], metavar="N"
    )
    p_verify.add_argument("--reps", type=int, default=2000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--grid-size", type=int, default=256)
    p_verify.add_argument("--basis-size", type=int, default=None)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    data = read_config_file(args.config)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    env_workers = os.environ.get(WORKERS_ENV)
    if args.workers is not None:
        data["workers"] = args.workers
    elif "workers" not in data and env_workers is not None:
        try:
            data["workers"] = int(env_workers)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from None
    for key, value in (
        ("out_dir", args.out),
        ("seed", args.seed),
        ("reps", args.reps),
    ):
        if value is not None:
            data[key] = value
    cfg = parse_config_dict(data)
    manifest = run(cfg)
    print(f"wrote {len(manifest.outputs)} table(s) to {cfg.out_dir}:")
    for name in manifest.outputs:
        print(f"  {name}")
    print(f"config hash {manifest.config_hash[:16]}…  "
          f"wall clock {manifest.wall_clock_seconds}s")
    if manifest.audit_failures:
        print(f"AUDIT FAIL: {manifest.audit_failures} violated invariant row(s)")
        return 3
    return 0


def _cmd_list_scenarios() -> int:
    rows = list_scenarios()
    width = max(len(r["scenario"]) for r in rows)
    for r in rows:
        imp = "yes" if r["supports_imputation"] else "no"
        print(f"{r['scenario']:<{width}}  recovery-audits={imp}  {r['summary']}")
        for key, value in r["flags"].items():
            print(f"{'':<{width}}    {key}: {value}")
    return 0


def _cmd_audit_eq1(args: argparse.Namespace) -> int:
    scenario = get_scenario(args.scenario)
    spec = scenario.make_spec(grid_size=args.grid_size, basis_size=args.basis_size)
    mech = _mechanism_from_args(args)
    audit = lemma_eq1_audit(
        spec, args.n, args.m, mech, args.reps, args.seed, noise_mode=args.noise_mode
    )
    print(
        f"scenario={args.scenario} mechanism={mechanism_label(mech)} "
        f"n={audit.n} m={audit.m} reps={audit.reps} noise_mode={audit.noise_mode}"
    )
    print(
        f"covariance distance {audit.cov_distance:.3e} "
        f"(allowed {4 * audit.cov_stderr:.3e})"
    )
    print(
        f"mean squared norm: recovered {audit.moment_partial:.6f} vs "
        f"complete {audit.moment_complete:.6f}, gap {audit.moment_gap:.3e} "
        f"(allowed {4 * audit.moment_stderr:.3e})"
    )
    print("PASS" if audit.passed else "FAIL")
    return 0 if audit.passed else 3


def _cmd_verify_clt(args: argparse.Namespace) -> int:
    scenario = get_scenario(args.scenario)
    spec = scenario.make_spec(grid_size=args.grid_size, basis_size=args.basis_size)
    sigma = scenario.sigma_limit(spec)
    reports = clt_verify(
        spec, sigma, args.n_list, reps=args.reps, seed=args.seed
    )
    all_ok = True
    for report in reports:
        for c in report.checks:
            verdict = "ok" if (c.cf_ok and c.ks_ok) else "FAIL"
            all_ok = all_ok and c.cf_ok and c.ks_ok
            print(
                f"n={report.n:>6} {c.label:<6} "
                f"cf_gap={c.cf_gap:.4f} (allowed {4 * c.cf_estimate.stderr:.4f})  "
                f"ks={c.ks_stat:.4f} (band {c.ks_quantile:.4f})  {verdict}"
            )
        for label in report.skipped:
            print(f"n={report.n:>6} {label:<6} skipped (zero target variance)")
    print("PASS" if all_ok else "FAIL")
    return 0 if all_ok else 3


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-scenarios":
            return _cmd_list_scenarios()
        if args.command == "audit-eq1":
            return _cmd_audit_eq1(args)
        if args.command == "verify-clt":
            return _cmd_verify_clt(args)
        raise AssertionError(args.command)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
