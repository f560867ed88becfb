"""Command-line front end.

Subcommands
-----------
construct    build coreset weights from a CSV dataset
gauss-synth  synthetic Gaussian-mean study with exact KL evaluation
bounds       theoretical error bounds for a dataset at each M
diagnose     geometry constants (sigma, eta, eta_bar) of a dataset

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import csv
import json
import sys

from .errors import ConfigError, DataError, NumericalError
from .experiments import (ALGORITHMS, MODELS, NORMS, SYNTH_COLUMNS, WEIGHTINGS, ExperimentConfig,
                          run_bounds, run_construct, run_diagnose, run_gauss_synth)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _m_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--M expects a comma-separated list of integers, got {text!r}")


def _common(p, *, algorithm=True, norm="fisher", weighting="laplace", M="10"):
    if algorithm:
        p.add_argument("--algorithm", choices=ALGORITHMS, default="fw")
    p.add_argument("--model", choices=MODELS, default="gaussian")
    p.add_argument("--norm", choices=NORMS, default=norm)
    p.add_argument("--weighting", choices=WEIGHTINGS, default=weighting)
    p.add_argument("--M", type=_m_list, default=_m_list(M), help="comma-separated budgets, ascending")
    p.add_argument("--J", type=int, default=500, help="random projection dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.01, help="confidence level for reported bounds")
    p.add_argument("--output", default=None)


def _data_args(p):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--label-col", default=None, help="label/count column for regression models")


def build_parser():
    parser = argparse.ArgumentParser(prog="hilbert-coresets", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build coreset weights from a CSV dataset")
    _common(p)
    _data_args(p)
    p.add_argument("--trials", type=int, default=1)

    p = sub.add_parser(
        "gauss-synth", help="synthetic Gaussian-mean study",
        description="Output CSV columns, in order: " + ", ".join(SYNTH_COLUMNS) + ". "
        "KL is KL(exact posterior || coreset posterior); error is the coreset error in feature space.")
    _common(p, algorithm=False, norm="exact-gaussian", weighting="exact-posterior", M="5,50,500")
    p.add_argument("--algorithms", default=",".join(ALGORITHMS), help="comma-separated subset of fw,is,unif,rand")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--D", type=int, default=2)
    p.add_argument("--sanity-row", action="store_true", help="add an all-ones 'full' row per trial (KL = 0)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bounds", help="error bounds at each M",
                       description="Output CSV columns: M, is_bound, is_bound_simple, fw_bound, fw_bound_fixed_step.")
    _common(p, algorithm=False)
    _data_args(p)

    p = sub.add_parser("diagnose", help="geometry constants of a dataset")
    _common(p, algorithm=False)
    _data_args(p)
    return parser


def config_from_args(args) -> ExperimentConfig:
    kw = {k: getattr(args, k) for k in ("algorithm", "norm", "weighting", "M", "J", "seed", "model",
                                         "output", "delta", "trials", "N", "D", "sanity_row", "workers")
          if hasattr(args, k)}
    if hasattr(args, "input"):
        kw["input"] = args.input
        kw["label_col"] = args.label_col
    if hasattr(args, "algorithms"):
        kw["algorithms"] = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    return ExperimentConfig(**kw)


def _emit_rows(rows, columns, output):
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if output:
            fh.close()


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "construct":
            records = run_construct(cfg)
            print(f"wrote {len(records)} weight files to {cfg.output}")
        elif args.command == "gauss-synth":
            rows = run_gauss_synth(cfg)
            if not cfg.output:
                _emit_rows(rows, SYNTH_COLUMNS, None)
        elif args.command == "bounds":
            rows = run_bounds(cfg)
            _emit_rows(rows, list(rows[0]), cfg.output)
        elif args.command == "diagnose":
            text = json.dumps(run_diagnose(cfg), indent=1)
            if cfg.output:
                with open(cfg.output, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
