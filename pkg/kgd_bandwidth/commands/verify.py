# File Summary: `kgdbw verify` - randomized checks of the bounds, exit 1 on any violation.

"""
Run one verification suite (or all of them) and write the per-check report.

Trajectories of failing instances are written next to the report as
<stem>.<suite>-<seed>.trajectory.csv.
"""

import argparse
from typing import Dict, List

import pandas as pd

from .. import output
from ..errors import UsageError
from ..models.schema import ExperimentConfig, KernelFamily
from ..results import sibling_path, write_csv
from ..verification import SUITE_NAMES, SuiteRun, report_frame, run_suite

HELP = "run randomized verification suites of the bounds"
# suites draw their kernel family at random
DEFAULT_KERNELS = list(KernelFamily)

MAX_LISTED_FAILURES = 5


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--suite", required=True, choices=SUITE_NAMES + ["all"], help="suite to run")
    parser.add_argument("--trials", type=int, default=None, help="instances per suite (suite default when omitted)")


def _dump_failures(run: SuiteRun, config: ExperimentConfig) -> List[str]:
    paths = []
    for seed, frame in run.dumps.items():
        target = sibling_path(config.out, f"{run.report.suite}-{seed}.trajectory")
        if target is None:
            continue
        write_csv(frame, target, config.seed)
        paths.append(target)
    return paths


def call(args: argparse.Namespace, config: ExperimentConfig) -> int:
    if args.trials is not None and args.trials < 1:
        raise UsageError(f"--trials must be at least 1, got {args.trials}")
    names = SUITE_NAMES if args.suite == "all" else [args.suite]

    runs = [run_suite(name, args.trials, config.seed, config.jobs) for name in names]
    frame = pd.concat([report_frame(run.report) for run in runs], ignore_index=True)
    written = write_csv(frame, config.out, config.seed)

    values: Dict[str, object] = {}
    dumped: List[str] = []
    for run in runs:
        failures = run.report.failures
        total = len(run.report.records)
        values[run.report.suite] = f"{total - len(failures)}/{total} hold"
        if failures:
            dumped.extend(_dump_failures(run, config))
    values["report"] = str(written) if written else "stdout"

    failed = [run for run in runs if not run.report.holds]
    if not failed:
        output.print_summary("verification passed", values)
        return 0

    for run in failed:
        for record in run.report.failures[:MAX_LISTED_FAILURES]:
            output.print_error(
                f"{record.check} seed={record.seed}: {record.lhs:.6g} > {record.rhs:.6g} ({record.detail or '-'})"
            )
    if dumped:
        values["trajectories"] = ", ".join(dumped)
    elif config.out is None or config.out == "-":
        output.print_warning("failing trajectories are only written next to an --out file")
    output.print_summary("verification failed", values, style="error")
    return 1
