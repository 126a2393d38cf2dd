# File Summary: `kgdbw double-descent` - error curves over a sweep of minimum bandwidths.

"""
Double-descent sweep.

For each minimum bandwidth σ_m on a log-spaced grid, fit KRR with the constant
bandwidth σ_m at a fixed λ, and KGD with a bandwidth decreasing from the data
diameter down to σ_m, run for exactly 1/λ time units. Errors are 1 − R² on the
training and test samples. The combined prediction bound is reported for the
first test point of every decreasing-bandwidth run.

With --reps above one every error column is the median over realizations,
flanked by first and third quartile columns.
"""

import argparse
import math
from typing import Dict, List

import numpy as np
import pandas as pd

from .. import output
from ..bounds import eq9_bound_curve
from ..data import Dataset, standardize
from ..errors import DegenerateTrajectoryError, UsageError
from ..kernels import max_pairwise_distance
from ..kgd import kgd_decreasing_bandwidth, r2
from ..models.schema import ExperimentConfig, KernelFamily, KernelSpec
from ..regression import krr_fit
from ..results import sibling_path, write_csv
from ..stats import quartiles
from .common import add_kgd_arguments, kgd_config, load_realization, ordered_map, resolve_source

HELP = "sweep the minimum bandwidth and record train/test error curves"
DEFAULT_KERNELS = [KernelFamily.GAUSSIAN]

SIGMA_RANGE = 1e-4
ERROR_COLUMNS = ["train_err_const", "test_err_const", "train_err_dec", "test_err_dec", "bound"]
CURVE_COLUMNS = ["sigma_m", "complexity"] + ERROR_COLUMNS + ["branch"]


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--data", default="gen:dd-sine", help="dataset URI (default gen:dd-sine)")
    parser.add_argument("--lambda", dest="lambda_", type=float, default=1e-3, help="ridge penalty; KGD runs to t = 1/λ")
    parser.add_argument("--n-sigma", dest="n_sigma", type=int, default=100, help="number of σ_m values (default 100)")
    add_kgd_arguments(parser)


def complexity(sigma_m) -> np.ndarray:
    """Plotting coordinate 1/(σ_m + 0.1)."""
    return 1.0 / (np.asarray(sigma_m, dtype=float) + 0.1)


def sigma_sweep(max_distance: float, count: int) -> np.ndarray:
    return np.geomspace(SIGMA_RANGE * max_distance, max_distance, count)


def _error(y: np.ndarray, f: np.ndarray) -> float:
    return 1.0 - r2(y, f)


def sweep_point(data: Dataset, family: KernelFamily, sigma_m: float, lam: float, args: argparse.Namespace) -> dict:
    """Constant and decreasing-bandwidth errors at one minimum bandwidth."""
    krr = krr_fit(data, KernelSpec(family=family, sigma=sigma_m), lam)
    sigma0 = max(max_pairwise_distance(data.x), sigma_m)
    cfg = kgd_config(args, sigma0=sigma0, sigma_min=sigma_m, r2_max=1.0, t_max=1.0 / lam)
    traj = kgd_decreasing_bandwidth(data, family, cfg)
    try:
        row = eq9_bound_curve([traj], [sigma_m])[0]
        bound, branch = row.bound, row.active_branch
    except DegenerateTrajectoryError:
        bound, branch = math.nan, ""
    return {
        "sigma_m": sigma_m,
        "complexity": float(complexity(sigma_m)),
        "train_err_const": _error(data.y, krr.f_train),
        "test_err_const": _error(data.y_test, krr.f_test),
        "train_err_dec": _error(data.y, traj.final.f_train),
        "test_err_dec": _error(data.y_test, traj.final.f_test),
        "bound": bound,
        "branch": branch,
    }


def median_curves(frame: pd.DataFrame) -> pd.DataFrame:
    """Median with first/third quartiles per σ_m; branch is the most frequent one."""
    rows = []
    for sigma_m, part in frame.groupby("sigma_m", sort=True):
        row: Dict[str, object] = {"sigma_m": sigma_m, "complexity": float(complexity(sigma_m))}
        for col in ERROR_COLUMNS:
            values = part[col].to_numpy(dtype=float)
            values = values[np.isfinite(values)]
            q1, q2, q3 = quartiles(values) if values.size else (math.nan, math.nan, math.nan)
            row[col], row[f"{col}_q1"], row[f"{col}_q3"] = q2, q1, q3
        modes = part["branch"].mode()
        row["branch"] = str(modes.iloc[0]) if not modes.empty else ""
        rows.append(row)
    columns = ["sigma_m", "complexity"]
    for col in ERROR_COLUMNS:
        columns += [col, f"{col}_q1", f"{col}_q3"]
    return pd.DataFrame(rows, columns=columns + ["branch"])


def call(args: argparse.Namespace, config: ExperimentConfig) -> int:
    lam = args.lambda_
    if not (math.isfinite(lam) and lam > 0):
        raise UsageError(f"--lambda must be positive, got {lam}")
    if args.n_sigma < 1:
        raise UsageError(f"--n-sigma must be at least 1, got {args.n_sigma}")
    if len(config.kernels) != 1:
        raise UsageError("double-descent takes exactly one --kernel")
    family = config.kernels[0]
    source = resolve_source(args.data)

    datasets: List[Dataset] = []
    for rep in range(config.reps):
        data, _ = standardize(load_realization(source, config.seed, rep))
        if data.y_test is None or data.n_test < 2:
            raise UsageError("double-descent needs a test sample with at least two rows")
        datasets.append(data)
    sigmas = sigma_sweep(max_pairwise_distance(datasets[0].x), args.n_sigma)

    tasks = [(rep, float(s)) for rep in range(config.reps) for s in sigmas]

    def one(task) -> dict:
        rep, sigma_m = task
        with np.errstate(all="ignore"):
            row = sweep_point(datasets[rep], family, sigma_m, lam, args)
        return {"rep": rep, **row}

    frame = pd.DataFrame(ordered_map(one, tasks, config.jobs), columns=["rep"] + CURVE_COLUMNS)

    paths: Dict[str, str] = {}
    if config.reps == 1:
        curves = frame[CURVE_COLUMNS]
    else:
        curves = median_curves(frame)
        detail = sibling_path(config.out, "reps")
        if detail is not None:
            write_csv(frame, detail, config.seed)
            paths["per_rep"] = detail
    written = write_csv(curves, config.out, config.seed)
    paths["curves"] = str(written) if written else "stdout"

    smallest = curves.iloc[0]
    values: Dict[str, object] = {
        "kernel": family.value,
        "lambda": lam,
        "sigma_m_points": len(sigmas),
        "reps": config.reps,
        "test_err_dec at min σ_m": float(smallest["test_err_dec"]),
        "test_err_const at min σ_m": float(smallest["test_err_const"]),
    }
    values.update(paths)
    output.print_summary("double descent", values)
    return 0
