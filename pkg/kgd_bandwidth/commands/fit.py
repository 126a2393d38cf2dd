# File Summary: `kgdbw fit` - one estimator on one dataset, predictions and trajectory CSV.

"""
Fit a single estimator and write its predictions.

Methods:
    kgd-dec    kernel gradient descent with a decreasing bandwidth
    kgd-const  kernel gradient descent with a fixed bandwidth (needs --sigma, --t)
    krr        kernel ridge regression (needs --lambda, --sigma)
    kgf        kernel gradient flow (needs --t, --sigma)
"""

import argparse
import math
from typing import Dict, List

import numpy as np
import pandas as pd

from .. import output
from ..data import Dataset, StandardizeRecord, standardize, unstandardize
from ..errors import UsageError
from ..kgd import Trajectory, bandwidth_r2_profile, kgd_constant, kgd_decreasing_bandwidth, largest_r2_jump, r2
from ..models.schema import ExperimentConfig, KernelFamily, KernelSpec
from ..regression import FitResult, kgf_fit, krr_fit
from ..results import sibling_path, write_csv
from .common import add_kgd_arguments, kgd_config, load_realization, resolve_source

HELP = "fit one estimator and write predictions (and the KGD trajectory)"
DEFAULT_KERNELS = [KernelFamily.GAUSSIAN]

METHODS = ["kgd-dec", "kgd-const", "krr", "kgf"]

REQUIRED_FLAGS: Dict[str, List[str]] = {
    "kgd-dec": [],
    "kgd-const": ["sigma", "t"],
    "krr": ["lambda_", "sigma"],
    "kgf": ["t", "sigma"],
}

FLAG_NAMES = {"lambda_": "--lambda", "sigma": "--sigma", "t": "--t"}


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--data", default="gen:linear-sine", help="dataset URI (default gen:linear-sine)")
    parser.add_argument("--method", required=True, choices=METHODS, help="estimator")
    parser.add_argument("--lambda", dest="lambda_", type=float, default=None, help="ridge penalty (krr)")
    parser.add_argument("--sigma", type=float, default=None, help="fixed bandwidth (krr, kgf, kgd-const)")
    parser.add_argument("--t", type=float, default=None, help="training time (kgf, kgd-const)")
    parser.add_argument("--grid", type=int, default=0, help="add N evenly spaced prediction points (1-D data)")
    add_kgd_arguments(parser)


def _check_required(args: argparse.Namespace):
    missing = [FLAG_NAMES[name] for name in REQUIRED_FLAGS[args.method] if getattr(args, name) is None]
    if missing:
        raise UsageError(f"--method {args.method} requires {', '.join(missing)}")
    for name, flag in FLAG_NAMES.items():
        value = getattr(args, name)
        if value is not None and not (math.isfinite(value) and value > 0):
            raise UsageError(f"{flag} must be positive and finite, got {value}")


def _grid_rows(data: Dataset, size: int) -> np.ndarray:
    if size <= 0:
        return np.empty((0, data.p))
    if data.p != 1:
        raise UsageError("--grid is only available for one covariate")
    return np.linspace(data.x.min(), data.x.max(), size).reshape(-1, 1)


def _run(args: argparse.Namespace, data: Dataset, family: KernelFamily):
    """Returns the fit and, for the iterative methods, its trajectory."""
    if args.method == "kgd-dec":
        traj = kgd_decreasing_bandwidth(data, family, kgd_config(args))
        return traj.final, traj
    spec = KernelSpec(family=family, sigma=args.sigma)
    if args.method == "kgd-const":
        traj = kgd_constant(data, spec, kgd_config(args).dt, args.t)
        return traj.final, traj
    if args.method == "krr":
        return krr_fit(data, spec, args.lambda_), None
    return kgf_fit(data, spec, args.t), None


def _predictions_frame(data: Dataset, x_eval: np.ndarray, fit: FitResult, record: StandardizeRecord) -> pd.DataFrame:
    """Rows: training, then test, then grid points, on the original y scale; y is empty on grid rows."""
    original = unstandardize(data, record)
    n_test = data.n_test
    splits = (
        [("train", i) for i in range(data.n)]
        + [("test", i) for i in range(n_test)]
        + [("grid", i) for i in range(x_eval.shape[0] - n_test)]
    )
    x = np.vstack([data.x, x_eval])
    y = np.full(x.shape[0], np.nan)
    y[: data.n] = original.y
    if original.y_test is not None:
        y[data.n : data.n + n_test] = original.y_test
    frame = pd.DataFrame({"split": [s for s, _ in splits], "index": [i for _, i in splits]})
    for j in range(data.p):
        frame[f"x{j + 1}"] = x[:, j]
    frame["y"] = y
    frame["prediction"] = record.inverse_y(np.concatenate([fit.f_train, fit.f_test]))
    return frame


def _trajectory_summary(traj: Trajectory, config: ExperimentConfig, method: str) -> Dict[str, object]:
    values: Dict[str, object] = {
        "steps": traj.steps - 1,
        "t_final": traj.t_final,
        "sigma_final": traj.sigma_final,
    }
    if method == "kgd-dec":
        jump = largest_r2_jump(traj)
        values["largest_r2_jump"] = "none" if jump is None else jump
    target = sibling_path(config.out, "trajectory")
    # on stdout the trajectory follows the predictions as a second CSV block
    write_csv(traj.to_frame(), target, config.seed)
    values["trajectory"] = target or "stdout"
    if target is not None and method == "kgd-dec":
        profile = sibling_path(config.out, "profile")
        write_csv(bandwidth_r2_profile(traj), profile, config.seed)
        values["profile"] = profile
    return values


def call(args: argparse.Namespace, config: ExperimentConfig) -> int:
    _check_required(args)
    if len(config.kernels) != 1:
        raise UsageError("fit takes exactly one --kernel")
    family = config.kernels[0]
    raw = load_realization(resolve_source(args.data), config.seed)
    data, record = standardize(raw)

    x_eval = np.vstack([data.test_rows(), _grid_rows(data, args.grid)])
    fit, traj = _run(args, Dataset(x=data.x, y=data.y, x_test=x_eval), family)
    written = write_csv(_predictions_frame(data, x_eval, fit, record), config.out, config.seed)

    summary: Dict[str, object] = {
        "method": args.method,
        "kernel": family.value,
        "n_train": data.n,
        "train_r2": r2(data.y, fit.f_train),
    }
    if data.y_test is not None and data.n_test > 1:
        summary["test_r2"] = r2(data.y_test, fit.f_test[: data.n_test])
    if traj is not None:
        summary.update(_trajectory_summary(traj, config, args.method))
    summary["predictions"] = str(written) if written else "stdout"
    output.print_summary("fit", summary)
    return 0
