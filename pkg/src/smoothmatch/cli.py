"""Batch command-line interface.

Subcommands:
  run      execute a scenario described by a JSON config, write records CSV
  verify   run a bound-verification suite, exit 1 on any failure
  scaling  sweep instance sizes, write records CSV, print log-log fits

Exit codes: 0 all checks pass, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import experiments
from .experiments import ConfigError, ScenarioConfig


def _cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = ScenarioConfig.from_json(fh.read())
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
            cfg.validate()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    records = experiments.run_scenario(cfg)
    experiments.write_csv(records, args.out)
    ratio_of_means, mean_of_ratios = experiments.ratio_summary(records)
    print(f"wrote {len(records)} records to {args.out}")
    print(f"mean(cost)/mean(OPT) {ratio_of_means:.6g}; mean(cost/OPT) {mean_of_ratios:.6g}")
    return 0


def _cmd_verify(args) -> int:
    try:
        results = experiments.verify_bounds(args.suite, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    failed = 0
    for res in results:
        print(res.line())
        failed += not res.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def _cmd_scaling(args) -> int:
    try:
        n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
        if len(n_list) < 3:
            raise ConfigError("n-list: need at least 3 sizes for a scaling fit")
        base = ScenarioConfig(
            d=args.d,
            n=max(n_list),
            sigma=args.sigma,
            algorithm=args.algorithm,
            trials=args.trials,
            seed=args.seed,
        )
        base.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    records = []
    for n in n_list:
        cfg = replace(base, n=n)
        records.extend(experiments.run_scenario(cfg))
    experiments.write_csv(records, args.out)
    alg_fit = experiments.fit_scaling(records, value=lambda r: r.cost_alg)
    opt_fit = experiments.fit_scaling(records, value=lambda r: r.cost_opt)
    print(f"wrote {len(records)} records to {args.out}")
    print(f"cost_alg slope {alg_fit.slope:.4f} +- {alg_fit.stderr:.4f} (intercept {alg_fit.intercept:.4f})")
    print(f"cost_opt slope {opt_fit.slope:.4f} +- {opt_fit.stderr:.4f} (intercept {opt_fit.intercept:.4f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothmatch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument(
        "--suite", required=True, choices=sorted(experiments.SUITES) + ["all"]
    )
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=_cmd_verify)

    p_scaling = sub.add_parser("scaling", help="sweep sizes and fit exponents")
    p_scaling.add_argument("--d", type=int, required=True)
    p_scaling.add_argument("--sigma", type=float, required=True)
    p_scaling.add_argument("--algorithm", required=True, choices=experiments.ALGORITHMS)
    p_scaling.add_argument("--n-list", required=True)
    p_scaling.add_argument("--trials", type=int, required=True)
    p_scaling.add_argument("--out", required=True)
    p_scaling.add_argument("--seed", type=int, default=0)
    p_scaling.set_defaults(func=_cmd_scaling)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
