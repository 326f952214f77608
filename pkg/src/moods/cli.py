"""Command-line entry point: ``moods run | compare | export``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (METHODS, ExperimentConfig, compare_methods, export_figures, load_run, render_comparison,
                      run_experiment)


def _config(args, **extra) -> ExperimentConfig:
    overrides = {"dataset": args.dataset, "n_runs": args.runs, "seed": args.seed, "out": args.out, **extra}
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    if args.dataset is None:
        raise SystemExit("error: --dataset is required unless --config names one")
    return ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def _common(p):
    p.add_argument("--dataset", help="manifest path or bundled name (ecoli, yeast, winequality)")
    p.add_argument("--runs", type=int, help="number of seeded runs (default 5)")
    p.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig; flags override it")


def _fmt_summary(summary) -> str:
    lines = []
    for name in ("f1", "f1_minority", "f1_majority", "overlap_decrease", "var_order_avg", "balance"):
        s = summary[name]
        if s["mean"] is None:
            continue
        var = "n/a" if s["variance"] is None else f"{s['variance']:.3g}"
        lines.append(f"  {name:<17} mean {s['mean']:.4f}  variance {var}")
    if summary["failed"]:
        lines.append(f"  failed runs: {summary['failed']}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _config(args, method=args.method)
    result = run_experiment(cfg)
    print(f"{cfg.method} on {cfg.dataset}: {result.summary['n_ok']}/{cfg.n_runs} runs ok")
    print(_fmt_summary(result.summary))
    if cfg.out:
        print(f"wrote {Path(cfg.out) / 'summary.json'}")
    return 0 if result.summary["n_ok"] else 1


def cmd_compare(args) -> int:
    base = _config(args, out=None)
    cfgs = [replace(base, method=m, out=None if args.out is None else str(Path(args.out) / m))
            for m in args.methods]
    rows, _ = compare_methods(cfgs, out=args.out, include_literature=args.literature)
    print(render_comparison(rows), end="")
    if args.out:
        print(f"wrote {Path(args.out) / 'comparison.csv'}")
    return 0


def cmd_export(args) -> int:
    out = Path(args.out)
    runs = [args.run] if args.run is not None else sorted(
        int(p.stem.split("_")[1]) for p in out.glob("run_*.json"))
    if not runs:
        print(f"error: no run_<i>.json files in {out}", file=sys.stderr)
        return 1
    dest = Path(args.dest) if args.dest else out
    for i in runs:
        files = export_figures(load_run(out, i), dest, bins=args.bins)
        print(f"run {i}: " + ", ".join(files[k] for k in sorted(files)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moods", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one method over several seeds")
    _common(p)
    p.add_argument("--method", choices=METHODS, help="resampling method (default moods)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run several methods on the same splits and tabulate them")
    _common(p)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=["none", "svm_smote", "moods"])
    p.add_argument("--literature", action="store_true", help="append published scores of methods not rerun here")
    p.add_argument("--out", help="output directory; each method writes to a subdirectory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="rewrite histogram and trace CSVs from a finished run directory")
    p.add_argument("--out", required=True, help="directory written by `moods run`")
    p.add_argument("--run", type=int, help="run index (default: all)")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--dest", help="where to write (default: --out)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
