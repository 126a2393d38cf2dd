# File Summary: Flags and helpers shared by the subcommands.

"""
Shared command plumbing: KGD flags, kernel lists, dataset loading and the
ordered worker pool.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Tuple, TypeVar

from ..data import Dataset, generate, kfold_split, load_csv, load_csv_groups, parse_source
from ..errors import InvalidArgumentError, UsageError
from ..models.schema import DataSource, KernelFamily, KGDConfig

T = TypeVar("T")
R = TypeVar("R")

CSV_FOLDS = 10


def add_kgd_arguments(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("kernel gradient descent")
    group.add_argument("--dt", type=float, default=0.01, help="Euler step size (default 0.01)")
    group.add_argument("--v-r2", dest="v_r2", type=float, default=0.05, help="minimum R² rate (default 0.05)")
    group.add_argument("--sigma0", type=float, default=None, help="initial bandwidth (default: max pairwise distance)")
    group.add_argument("--sigma-min", dest="sigma_min", type=float, default=None, help="minimum bandwidth")
    group.add_argument("--r2-max", dest="r2_max", type=float, default=0.99, help="stopping train R² (default 0.99)")
    group.add_argument("--t-max", dest="t_max", type=float, default=1e4, help="training-time budget (default 1e4)")
    group.add_argument("--decay", type=float, default=0.99, help="bandwidth decay factor (default 0.99)")


def kgd_config(args: argparse.Namespace, **overrides) -> KGDConfig:
    """Build a KGDConfig from parsed flags; validation errors are usage errors."""
    values = {
        "dt": args.dt,
        "v_r2": args.v_r2,
        "sigma0": args.sigma0,
        "sigma_min": args.sigma_min,
        "r2_max": args.r2_max,
        "t_max": args.t_max,
        "decay": args.decay,
    }
    values.update(overrides)
    try:
        return KGDConfig(**values)
    except Exception as e:
        raise UsageError(f"Invalid KGD flags: {e}")


def parse_kernels(text: Optional[str], default: Iterable[KernelFamily]) -> List[KernelFamily]:
    """Parse a comma-separated kernel list such as "gaussian,laplace"."""
    if not text:
        return list(default)
    out = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            out.append(KernelFamily(item))
        except ValueError:
            valid = ", ".join(f.value for f in KernelFamily)
            raise UsageError(f"Unknown kernel '{item}'; choose from {valid}")
    if not out:
        raise UsageError("--kernel needs at least one kernel id")
    return out


def resolve_source(uri: str) -> DataSource:
    try:
        return parse_source(uri)
    except InvalidArgumentError as e:
        raise UsageError(str(e))


def load_realization(source: DataSource, seed: int, realization: int = 0) -> Dataset:
    """Training rows with test rows attached.

    gen: sources draw a fresh dataset on stream `realization`; csv: sources
    use fold `realization` of a ten-fold split as the test set.
    """
    if source.kind == "gen":
        return generate(source, seed, stream=realization)
    data, _ = load_csv(source.path, source.x_columns, source.y_column)
    folds = kfold_split(data, CSV_FOLDS, seed)
    return folds[realization % len(folds)][0]


def load_groups(source: DataSource) -> Tuple[Dict[str, Dataset], int]:
    return load_csv_groups(source.path, source.x_columns, source.y_column, source.group_column)


def ordered_map(fn: Callable[[T], R], items: List[T], jobs: int) -> List[R]:
    """Map fn over items; results keep input order regardless of jobs."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
