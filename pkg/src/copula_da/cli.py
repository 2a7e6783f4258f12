"""Command-line interface: ``copula-da {run,transform,check,fetch}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .adaptation import CopulaAdapter, SolverOptions
from .checks import run_checks
from .datasets import SPLITS, data_dir, fetch, load_dataset
from .experiment import load_specs, run_experiment
from .report import emit_report, rank_table

logger = logging.getLogger("copula_da")


def _cmd_run(args) -> int:
    results = []
    output = args.output
    for spec_path in args.spec:
        for spec in load_specs(spec_path):
            logger.info("running %s (%d trials)", spec.name, spec.trials)
            results.extend(run_experiment(spec, jobs=args.jobs))
            output = output or spec.output
    if not results:
        logger.error("no results were produced")
        return 1
    if output:
        path = emit_report(results, output)
        logger.info("wrote %s", path)
    sys.stdout.write(rank_table(results))
    return 0


def _cmd_transform(args) -> int:
    rule = None
    if args.split == "column_rule":
        rule = {"column": args.column, "predicate": args.predicate, "target": args.target,
                "drop_rule_column": args.drop_rule_column}
    data = load_dataset(args.dataset, args.split, rule)
    opts = SolverOptions(max_iters=args.max_iters, seed=args.seed)
    adapter = CopulaAdapter(p=args.p, lam=args.lam, options=opts,
                            qmi_samples=args.qmi_samples, seed=args.seed)
    adapter.fit(data.X_S, data.y_S, data.X_T)
    F_S = adapter.transform_source(data.X_S)
    F_T = adapter.transform_target(data.X_T)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain"] + [f"f{j}" for j in range(F_S.shape[1])] + [data.target_name])
        for domain, F, y in (("source", F_S, data.y_S), ("target", F_T, data.y_T)):
            for row, label in zip(F, y):
                writer.writerow([domain] + [repr(float(v)) for v in row] + [repr(float(label))])
    if adapter.report is not None:
        logger.info("solver: %d iterations, objective %.6g (%s)", adapter.report.iterations,
                    adapter.report.objective, adapter.report.reason)
    return 0


def _cmd_check(args) -> int:
    failed = 0
    for name, ok, detail in run_checks(args.seed):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def _cmd_fetch(args) -> int:
    for name, path in fetch(args.dest).items():
        print(f"{name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copula-da", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--threads", type=int, default=1,
                        help="BLAS threads (1 gives byte-stable reports)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run benchmark experiments from a JSON/YAML spec")
    run.add_argument("--spec", action="append", required=True,
                     help="experiment file; repeat to rank across several datasets")
    run.add_argument("--output", help="JSON-lines report path (overrides the spec)")
    run.add_argument("--jobs", type=int, default=1, help="parallel trials")
    run.set_defaults(func=_cmd_run)

    tr = sub.add_parser("transform", help="write adapted source and target features")
    tr.add_argument("--dataset", required=True)
    tr.add_argument("--split", required=True, choices=SPLITS)
    tr.add_argument("--p", type=int, required=True)
    tr.add_argument("--lambda", dest="lam", type=float, default=0.0)
    tr.add_argument("--out", required=True)
    tr.add_argument("--column", help="column_rule: column defining the split")
    tr.add_argument("--predicate", help="column_rule: e.g. '< median'")
    tr.add_argument("--target", help="column_rule: label column")
    tr.add_argument("--drop-rule-column", action="store_true",
                    help="column_rule: do not use the split column as a feature")
    tr.add_argument("--qmi-samples", type=int, default=None)
    tr.add_argument("--max-iters", type=int, default=500)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=_cmd_transform)

    chk = sub.add_parser("check", help="run the built-in invariant suite")
    chk.add_argument("--seed", type=int, default=0)
    chk.set_defaults(func=_cmd_check)

    fe = sub.add_parser("fetch", help="download the UCI datasets")
    fe.add_argument("--dest", default=None, help=f"default: {data_dir()}")
    fe.set_defaults(func=_cmd_fetch)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore", under="ignore")
    with threadpool_limits(limits=args.threads):
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
