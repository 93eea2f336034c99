"""Command line interface: ``dmdextrap run | sweep | compare``.

Exit codes: 0 success, 1 error, 2 invariant violation.
"""
import argparse
import sys
from pathlib import Path

from .exceptions import DmdExtrapError, InvariantViolation
from .harness import (
    ExperimentConfig,
    compare_methods,
    config_from_mapping,
    read_comparison,
    read_config,
    run_experiment,
    run_sweep,
    write_summary,
)

EXIT_OK, EXIT_ERROR, EXIT_INVARIANT = 0, 1, 2

# flag dest -> config key
_FLAG_KEYS = {
    "test": "test_id", "n_grid": "n_grid", "n_snapshots": "n_snapshots_total", "m": "m",
    "rank_eps": "rank_eps", "observables": "observables", "methods": "methods",
    "out": "output_dir", "repeats": "repeats", "amplitudes": "amplitudes",
}


def _add_experiment_flags(p):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--test", help="test id: 1a, 1b, 2a, 2b, 3 or 4")
    p.add_argument("--n-grid", help="grid size (interior nodes; periodic nodes for test 4)")
    p.add_argument("--n-snapshots", help="snapshots kept on the reporting mesh")
    p.add_argument("--m", help="training snapshot pairs")
    p.add_argument("--rank-eps", help="relative singular value cutoff")
    p.add_argument("--observables", help="comma list: g1, g2 or observable names")
    p.add_argument("--methods", help="comma list from resolved, dmd, pod_deim")
    p.add_argument("--out", help="output directory")
    p.add_argument("--repeats", help="timing repeats (median reported)")
    p.add_argument("--amplitudes", help="DMD amplitude anchor: shifted or first")
    p.add_argument("--assert-bound", action="store_true",
                   help="exit 2 if the DMD error bound fails at any step")


def _config(args):
    cfg = read_config(args.config) if args.config else ExperimentConfig()
    flags = {key: getattr(args, dest) for dest, key in _FLAG_KEYS.items()
             if getattr(args, dest) is not None}
    if args.assert_bound:
        flags["assert_bound"] = "true"
    return config_from_mapping(flags, base=cfg)


def _print_rows(rows):
    print(f"{'method':<10}{'observable':<12}{'rank':>6}{'total_s':>12}"
          f"{'max_error':>14}{'final_error':>14}")
    for r in rows:
        print(f"{r.method:<10}{r.observable:<12}{r.rank:>6}{r.total_time_s:>12.4g}"
              f"{r.max_error:>14.4e}{r.final_error:>14.4e}")


def cmd_run(args):
    res = run_experiment(_config(args))
    _print_rows(res.rows)
    print(f"wrote {res.config.output_dir}")


def cmd_sweep(args):
    values = [v for v in args.values.split(",") if v.strip()]
    results = run_sweep(_config(args), args.param, values)
    for res in results:
        print(f"[m={res.config.m} rank_eps={res.config.rank_eps:g}]")
        _print_rows(res.rows)


def cmd_compare(args):
    rows = [row for path in args.tables for row in read_comparison(path)]
    if not rows:
        raise ValueError("no rows to compare")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out, compare_methods(rows))
    _print_rows(rows)
    print(f"wrote {out / 'summary.csv'}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dmdextrap", description="DMD extrapolation experiments and reports")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _add_experiment_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="repeat an experiment over m or rank_eps")
    _add_experiment_flags(sweep)
    sweep.add_argument("--param", choices=("m", "rank_eps"), default="m")
    sweep.add_argument("--values", required=True, help="comma list, e.g. 100,200,300")
    sweep.set_defaults(func=cmd_sweep)

    cmp_ = sub.add_parser("compare", help="merge comparison tables and rank them")
    cmp_.add_argument("tables", nargs="+", help="comparison.csv files")
    cmp_.add_argument("--out", required=True, help="directory for the merged summary")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DmdExtrapError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
