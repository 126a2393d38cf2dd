# File Summary: `kgdbw compare` - KGD with decreasing bandwidth against GCV and MML over repeated realizations.

"""
Method comparison.

Every (kernel, realization) pair is fitted three ways: KGD with a decreasing
bandwidth, KRR at the GCV grid minimum and KRR at the marginal-likelihood
maximum. Test R² values are summarized per kernel and method by their
quartiles, and KGD is tested against each baseline with a paired Wilcoxon
signed-rank test.

Synthetic sources draw realization r from stream r. CSV sources use the ten
folds of a seeded split as realizations; with a group column each group is
split on its own and gets its own p-value rows.
"""

import argparse
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .. import output
from ..data import Dataset, generate, kfold_split, load_csv, standardize
from ..errors import DegenerateTestError, KernelRegressionError
from ..kgd import kgd_decreasing_bandwidth, r2
from ..models.schema import Alternative, DataSource, ExperimentConfig, KernelFamily, KernelSpec, KGDConfig
from ..regression import krr_fit
from ..results import sibling_path, write_csv
from ..selection import gcv_select, mml_select
from ..stats import quartiles, wilcoxon_signed_rank
from .common import CSV_FOLDS, add_kgd_arguments, kgd_config, load_groups, ordered_map, resolve_source

HELP = "compare KGD (decreasing bandwidth) with GCV and MML over repeated realizations"
DEFAULT_KERNELS = list(KernelFamily)

METHODS = ["kgd-dec", "gcv", "mml"]
BASELINES = ["gcv", "mml"]
MIN_PAIRS = 5
INSUFFICIENT = "insufficient-n"

SUMMARY_COLUMNS = ["kernel", "method", "q2", "q1", "q3", "p_value", "n"]
REALIZATION_COLUMNS = ["group", "realization", "kernel", "method", "test_r2", "failed", "error"]
GROUP_COLUMNS = ["group", "kernel", "baseline", "p_value", "n_pairs"]


@dataclass(frozen=True)
class Realization:
    group: str
    index: int
    data: Dataset


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--data", default="gen:linear-sine", help="dataset URI (default gen:linear-sine)")
    parser.add_argument(
        "--alternative",
        default=Alternative.GREATER.value,
        choices=[a.value for a in Alternative],
        help="alternative hypothesis for KGD minus baseline (default greater)",
    )
    add_kgd_arguments(parser)


# ============================================================================
# REALIZATIONS
# ============================================================================

def _folds(data: Dataset, group: str, seed: int) -> List[Realization]:
    return [Realization(group, i, train) for i, (train, _) in enumerate(kfold_split(data, CSV_FOLDS, seed))]


def build_realizations(source: DataSource, seed: int, reps: int) -> List[Realization]:
    if source.kind == "gen":
        return [Realization("", r, generate(source, seed, stream=r)) for r in range(reps)]
    if source.group_column:
        groups, dropped = load_groups(source)
        if dropped:
            output.print_warning(f"dropped {dropped} row(s) without a usable response")
        out: List[Realization] = []
        for label, data in groups.items():
            if data.n < CSV_FOLDS:
                output.print_warning(f"group {label!r} has {data.n} rows, fewer than {CSV_FOLDS} folds; skipped")
                continue
            out.extend(_folds(data, label, seed))
        return out
    data, dropped = load_csv(source.path, source.x_columns, source.y_column)
    if dropped:
        output.print_warning(f"dropped {dropped} row(s) with an empty response")
    return _folds(data, "", seed)


# ============================================================================
# ONE CELL
# ============================================================================

def _test_r2(data: Dataset, f_test: np.ndarray) -> float:
    return r2(data.y_test, f_test)


def _fit_method(method: str, data: Dataset, family: KernelFamily, cfg: KGDConfig) -> float:
    if method == "kgd-dec":
        return _test_r2(data, kgd_decreasing_bandwidth(data, family, cfg).final.f_test)
    selection = gcv_select(data, family) if method == "gcv" else mml_select(data, family)
    spec = KernelSpec(family=family, sigma=selection.sigma)
    return _test_r2(data, krr_fit(data, spec, selection.lambda_).f_test)


def run_cell(realization: Realization, family: KernelFamily, cfg: KGDConfig) -> List[dict]:
    """Test R² of every method; a failing method yields NaN and its error."""
    data, _ = standardize(realization.data)
    rows = []
    for method in METHODS:
        value, error = math.nan, ""
        try:
            with np.errstate(all="ignore"):
                value = _fit_method(method, data, family, cfg)
        except KernelRegressionError as e:
            error = f"{type(e).__name__}: {e}"
        rows.append(
            {
                "group": realization.group,
                "realization": realization.index,
                "kernel": family.value,
                "method": method,
                "test_r2": value,
                "failed": bool(error),
                "error": error,
            }
        )
    return rows


# ============================================================================
# SUMMARIES
# ============================================================================

def _format_p(value: float) -> str:
    return f"{value:.17g}"


def paired_p_value(kgd: np.ndarray, baseline: np.ndarray, alternative: Alternative) -> Tuple[str, int]:
    """Wilcoxon p-value over realizations where both methods succeeded."""
    keep = np.isfinite(kgd) & np.isfinite(baseline)
    a, b = kgd[keep], baseline[keep]
    n_pairs = int(keep.sum())
    if np.count_nonzero(a - b) < MIN_PAIRS:
        return INSUFFICIENT, n_pairs
    try:
        return _format_p(wilcoxon_signed_rank(a, b, alternative).p_value), n_pairs
    except DegenerateTestError:
        return INSUFFICIENT, n_pairs


def _values(frame: pd.DataFrame, kernel: str, method: str) -> np.ndarray:
    part = frame[(frame["kernel"] == kernel) & (frame["method"] == method)]
    return part.sort_values(["group", "realization"], kind="stable")["test_r2"].to_numpy(dtype=float)


def summary_table(frame: pd.DataFrame, kernels: List[KernelFamily], alternative: Alternative) -> pd.DataFrame:
    rows = []
    for family in kernels:
        kgd = _values(frame, family.value, "kgd-dec")
        for method in METHODS:
            values = _values(frame, family.value, method)
            finite = values[np.isfinite(values)]
            q1, q2, q3 = quartiles(finite) if finite.size else (math.nan, math.nan, math.nan)
            p_value = ""
            if method in BASELINES:
                p_value, _ = paired_p_value(kgd, values, alternative)
            rows.append(
                {
                    "kernel": family.value,
                    "method": method,
                    "q2": q2,
                    "q1": q1,
                    "q3": q3,
                    "p_value": p_value,
                    "n": int(finite.size),
                }
            )
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def group_table(frame: pd.DataFrame, kernels: List[KernelFamily], alternative: Alternative) -> pd.DataFrame:
    rows = []
    for group in pd.unique(frame["group"]):
        part = frame[frame["group"] == group]
        for family in kernels:
            kgd = _values(part, family.value, "kgd-dec")
            for baseline in BASELINES:
                p_value, n_pairs = paired_p_value(kgd, _values(part, family.value, baseline), alternative)
                rows.append(
                    {"group": group, "kernel": family.value, "baseline": baseline, "p_value": p_value, "n_pairs": n_pairs}
                )
    return pd.DataFrame(rows, columns=GROUP_COLUMNS)


def call(args: argparse.Namespace, config: ExperimentConfig) -> int:
    source = resolve_source(args.data)
    cfg = kgd_config(args)
    alternative = Alternative(args.alternative)
    realizations = build_realizations(source, config.seed, config.reps)
    if not realizations:
        output.print_error("no realization could be built from the dataset")
        return 1
    if source.kind == "csv" and config.reps != len(realizations):
        output.print_info(f"csv source: using {len(realizations)} folds as realizations")

    tasks = [(family, r) for family in config.kernels for r in realizations]

    def one(task) -> List[dict]:
        family, realization = task
        return run_cell(realization, family, cfg)

    cells = ordered_map(one, tasks, config.jobs)
    frame = pd.DataFrame([row for rows in cells for row in rows], columns=REALIZATION_COLUMNS)

    table = summary_table(frame, config.kernels, alternative)
    written = write_csv(table, config.out, config.seed)
    paths: Dict[str, Optional[str]] = {"summary": str(written) if written else "stdout"}
    detail = sibling_path(config.out, "realizations")
    if detail is not None:
        write_csv(frame, detail, config.seed)
        paths["realizations"] = detail
    if source.kind == "csv" and source.group_column:
        groups_path = sibling_path(config.out, "groups")
        if groups_path is not None:
            write_csv(group_table(frame, config.kernels, alternative), groups_path, config.seed)
            paths["groups"] = groups_path
        else:
            output.print_warning("per-group p-values are only written next to an --out file")

    failed = int(frame["failed"].sum())
    if failed:
        output.print_warning(f"{failed} fit(s) failed; their pairs are excluded from the tests")
    values: Dict[str, object] = {
        "kernels": ", ".join(f.value for f in config.kernels),
        "realizations": len(realizations),
        "failed_fits": failed,
    }
    for _, row in table[table["method"] == "kgd-dec"].iterrows():
        values[f"kgd-dec {row['kernel']} median"] = row["q2"]
    values.update(paths)
    output.print_summary("compare", values)
    return 0
