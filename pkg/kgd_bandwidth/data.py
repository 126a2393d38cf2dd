# File Summary: Datasets, seeded synthetic generators, CSV ingestion and fold splits.

"""
Data layer for the experiments.

Synthetic generators draw from a PCG64 stream keyed by (seed, stream), so a
given seed reproduces a dataset bit for bit on every platform. Normal
deviates come from Box–Muller on that uniform stream.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple
from urllib.parse import parse_qs

import numpy as np
import pandas as pd

from .errors import CSVParseError, InvalidArgumentError, SchemaError
from .models.schema import DataSource

MAX_SEED = 2**64


@dataclass(frozen=True)
class Dataset:
    """Training rows (x, y) and optional prediction rows (x_test, y_test)."""

    x: np.ndarray
    y: np.ndarray
    x_test: Optional[np.ndarray] = None
    y_test: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] < 1:
            raise InvalidArgumentError(f"x must be a non-empty matrix, got shape {x.shape}")
        if y.shape[0] != x.shape[0]:
            raise InvalidArgumentError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("dataset contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

        if self.x_test is not None:
            xt = np.asarray(self.x_test, dtype=float)
            if xt.ndim == 1:
                xt = xt.reshape(-1, x.shape[1]) if x.shape[1] > 1 else xt.reshape(-1, 1)
            if xt.ndim != 2 or xt.shape[1] != x.shape[1]:
                raise InvalidArgumentError(f"x_test must have {x.shape[1]} columns, got shape {xt.shape}")
            if not np.all(np.isfinite(xt)):
                raise InvalidArgumentError("x_test contains non-finite values")
            object.__setattr__(self, "x_test", xt)
        if self.y_test is not None:
            yt = np.asarray(self.y_test, dtype=float).reshape(-1)
            if self.x_test is None or yt.shape[0] != self.x_test.shape[0]:
                raise InvalidArgumentError("y_test needs x_test with the same number of rows")
            if not np.all(np.isfinite(yt)):
                raise InvalidArgumentError("y_test contains non-finite values")
            object.__setattr__(self, "y_test", yt)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n_test(self) -> int:
        return 0 if self.x_test is None else self.x_test.shape[0]

    def test_rows(self) -> np.ndarray:
        """Prediction covariates, or an empty (0, p) matrix."""
        return self.x_test if self.x_test is not None else np.empty((0, self.p))

    def with_test(self, x_test, y_test=None) -> "Dataset":
        return replace(self, x_test=x_test, y_test=y_test)


@dataclass(frozen=True)
class StandardizeRecord:
    """Means removed by standardize(), kept for the inverse transform."""

    y_mean: float
    x_mean: Optional[np.ndarray] = None

    def inverse_y(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) + self.y_mean


# ============================================================================
# RANDOM NUMBERS
# ============================================================================

def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator keyed by (seed, stream)."""
    if not (0 <= int(seed) < MAX_SEED):
        raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if int(stream) < 0:
        raise InvalidArgumentError(f"stream must be non-negative, got {stream}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal deviates from pairs of uniforms."""
    if size <= 0:
        return np.empty(0)
    pairs = (size + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * math.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:size]


# ============================================================================
# SYNTHETIC GENERATORS
# ============================================================================

def linear_sine(x) -> np.ndarray:
    """x − 1 below −1, sin(10πx) on [−1, 1], x + 1 above 1."""
    x = np.asarray(x, dtype=float)
    return np.where(x < -1.0, x - 1.0, np.where(x > 1.0, x + 1.0, np.sin(5.0 * 2.0 * math.pi * x)))


def two_freq(x) -> np.ndarray:
    """sin(2πx) on [−2, 0], sin(16πx) on (0, 1]."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0, np.sin(2.0 * math.pi * x), np.sin(8.0 * 2.0 * math.pi * x))


def dd_sine(x) -> np.ndarray:
    return np.sin(2.0 * math.pi * np.asarray(x, dtype=float))


def _check_noise(noise_sd: float):
    if not (math.isfinite(noise_sd) and noise_sd >= 0):
        raise InvalidArgumentError(f"noise_sd must be finite and non-negative, got {noise_sd}")


def gen_linear_sine(n: int = 100, noise_sd: float = 0.2, seed: int = 0, n_test: int = 0, stream: int = 0) -> Dataset:
    """x ~ N(0, 1), y = linear_sine(x) + N(0, noise_sd²)."""
    if n < 1 or n_test < 0:
        raise InvalidArgumentError(f"need n >= 1 and n_test >= 0, got n={n}, n_test={n_test}")
    _check_noise(noise_sd)
    rng = make_rng(seed, stream)
    x = box_muller(rng, n)
    y = linear_sine(x) + noise_sd * box_muller(rng, n)
    if n_test == 0:
        return Dataset(x=x, y=y)
    xt = box_muller(rng, n_test)
    yt = linear_sine(xt) + noise_sd * box_muller(rng, n_test)
    return Dataset(x=x, y=y, x_test=xt, y_test=yt)


def _two_freq_design(rng: np.random.Generator, n_low: int, n_high: int) -> np.ndarray:
    low = -2.0 + 2.0 * rng.random(n_low)
    high = rng.random(n_high)
    return np.concatenate([low, high])


def gen_two_freq(
    n_low: int = 20,
    n_high: int = 80,
    noise_sd: float = 0.2,
    seed: int = 0,
    n_test: int = 0,
    stream: int = 0,
) -> Dataset:
    """Stratified x (n_low on [−2, 0], n_high on [0, 1]) with ten points per period.

    Test rows follow the same stratification in proportion to the training counts.
    """
    if n_low < 0 or n_high < 0 or n_low + n_high < 1 or n_test < 0:
        raise InvalidArgumentError("two_freq needs non-negative counts with at least one row")
    _check_noise(noise_sd)
    rng = make_rng(seed, stream)
    n = n_low + n_high
    x = _two_freq_design(rng, n_low, n_high)
    y = two_freq(x) + noise_sd * box_muller(rng, n)
    if n_test == 0:
        return Dataset(x=x, y=y)
    test_low = int(round(n_test * n_low / n))
    xt = _two_freq_design(rng, test_low, n_test - test_low)
    yt = two_freq(xt) + noise_sd * box_muller(rng, n_test)
    return Dataset(x=x, y=y, x_test=xt, y_test=yt)


def gen_dd_sine(n: int = 20, noise_sd: float = 0.2, seed: int = 0, n_test: int = 0, stream: int = 0) -> Dataset:
    """x ~ U(−1, 1), y = sin(2πx) + N(0, noise_sd²)."""
    if n < 1 or n_test < 0:
        raise InvalidArgumentError(f"need n >= 1 and n_test >= 0, got n={n}, n_test={n_test}")
    _check_noise(noise_sd)
    rng = make_rng(seed, stream)
    x = -1.0 + 2.0 * rng.random(n)
    y = dd_sine(x) + noise_sd * box_muller(rng, n)
    if n_test == 0:
        return Dataset(x=x, y=y)
    xt = -1.0 + 2.0 * rng.random(n_test)
    yt = dd_sine(xt) + noise_sd * box_muller(rng, n_test)
    return Dataset(x=x, y=y, x_test=xt, y_test=yt)


# ============================================================================
# CSV
# ============================================================================

def _read_columns(path: str, columns: List[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except FileNotFoundError:
        raise InvalidArgumentError(f"File not found: {path}")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} has no header row")
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")
    return frame


def _parse_numeric(frame: pd.DataFrame, column: str, path: str) -> pd.Series:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() & (raw != "")
    if bad.any():
        pos = int(np.flatnonzero(bad.to_numpy())[0])
        # header is line 1
        line = pos + 2
        raise CSVParseError(
            f"{path}: non-numeric value {raw.iloc[pos]!r} in column '{column}' at line {line}",
            line=line,
            column=column,
        )
    return values


def _frame_to_dataset(frame: pd.DataFrame, x_columns: List[str], y_column: str, path: str) -> Tuple[Dataset, int]:
    y = _parse_numeric(frame, y_column, path)
    keep = y.notna().to_numpy()
    xs = []
    for col in x_columns:
        values = _parse_numeric(frame, col, path)
        missing = values.isna().to_numpy() & keep
        if missing.any():
            line = int(np.flatnonzero(missing)[0]) + 2
            raise CSVParseError(f"{path}: empty value in column '{col}' at line {line}", line=line, column=col)
        xs.append(values.to_numpy()[keep])
    dropped = int((~keep).sum())
    if not keep.any():
        raise SchemaError(f"{path}: no rows with a value in '{y_column}'")
    return Dataset(x=np.column_stack(xs), y=y.to_numpy()[keep]), dropped


def load_csv(path: str, x_columns: List[str], y_column: str) -> Tuple[Dataset, int]:
    """Load (X, y) from a headed CSV in file order.

    Returns:
        The dataset and the number of rows dropped because y was empty.
    """
    if not x_columns:
        raise InvalidArgumentError("at least one x column is required")
    frame = _read_columns(path, list(x_columns) + [y_column])
    return _frame_to_dataset(frame, list(x_columns), y_column, path)


def load_csv_groups(path: str, x_columns: List[str], y_column: str, group_column: str) -> Tuple[Dict[str, Dataset], int]:
    """Load one dataset per value of group_column, in order of first appearance."""
    frame = _read_columns(path, list(x_columns) + [y_column, group_column])
    groups: Dict[str, Dataset] = {}
    dropped = 0
    labels = frame[group_column].str.strip()
    for label in pd.unique(labels):
        part = frame[labels == label].reset_index(drop=True)
        try:
            groups[str(label)], lost = _frame_to_dataset(part, list(x_columns), y_column, path)
        except SchemaError:
            dropped += len(part)
            continue
        dropped += lost
    return groups, dropped


# ============================================================================
# SPLITS AND TRANSFORMS
# ============================================================================

def kfold_split(data: Dataset, k: int = 10, seed: int = 0, stream: int = 0) -> List[Tuple[Dataset, Dataset]]:
    """Random partition into k near-equal folds; each fold is the test set once.

    The training half of each pair carries the fold as its x_test/y_test.
    """
    if k < 2:
        raise InvalidArgumentError(f"k must be at least 2, got {k}")
    if data.n < k:
        raise InvalidArgumentError(f"cannot split {data.n} rows into {k} folds")
    order = make_rng(seed, stream).permutation(data.n)
    splits = []
    for fold in np.array_split(order, k):
        test_idx = np.sort(fold)
        mask = np.ones(data.n, dtype=bool)
        mask[test_idx] = False
        test = Dataset(x=data.x[test_idx], y=data.y[test_idx])
        train = Dataset(x=data.x[mask], y=data.y[mask], x_test=test.x, y_test=test.y)
        splits.append((train, test))
    return splits


def standardize(data: Dataset, center_x: bool = False) -> Tuple[Dataset, StandardizeRecord]:
    """Subtract the training mean of y (and optionally the column means of X).

    Test rows are shifted by the training means.
    """
    y_mean = float(np.mean(data.y))
    x_mean = data.x.mean(axis=0) if center_x else None
    x = data.x - x_mean if center_x else data.x
    x_test = data.x_test
    if center_x and x_test is not None:
        x_test = x_test - x_mean
    y_test = None if data.y_test is None else data.y_test - y_mean
    return Dataset(x=x, y=data.y - y_mean, x_test=x_test, y_test=y_test), StandardizeRecord(y_mean, x_mean)


def unstandardize(data: Dataset, record: StandardizeRecord) -> Dataset:
    x = data.x if record.x_mean is None else data.x + record.x_mean
    x_test = data.x_test
    if record.x_mean is not None and x_test is not None:
        x_test = x_test + record.x_mean
    y_test = None if data.y_test is None else record.inverse_y(data.y_test)
    return Dataset(x=x, y=record.inverse_y(data.y), x_test=x_test, y_test=y_test)


# ============================================================================
# DATASET URIS
# ============================================================================

def parse_source(uri: str) -> DataSource:
    """Parse gen:<name> or csv:<path>?x=a,b&y=c[&group=d]."""
    kind, sep, rest = uri.partition(":")
    if not sep or kind not in ("gen", "csv"):
        raise InvalidArgumentError(f"dataset must start with 'gen:' or 'csv:', got {uri!r}")
    try:
        if kind == "gen":
            return DataSource(kind="gen", name=rest)
        path, _, query = rest.partition("?")
        params = parse_qs(query)
        x_cols = [c.strip() for v in params.get("x", []) for c in v.split(",") if c.strip()]
        return DataSource(
            kind="csv",
            path=path,
            x_columns=x_cols,
            y_column=(params.get("y") or [None])[0],
            group_column=(params.get("group") or [None])[0],
        )
    except Exception as e:
        raise InvalidArgumentError(f"Invalid dataset {uri!r}: {e}")


GENERATORS = {
    "linear-sine": gen_linear_sine,
    "two-freq": gen_two_freq,
    "dd-sine": gen_dd_sine,
}

# test sample sizes match the training sizes of each design
TEST_SIZES = {"linear-sine": 100, "two-freq": 100, "dd-sine": 20}


def generate(source: DataSource, seed: int, stream: int = 0, noise_sd: Optional[float] = None) -> Dataset:
    """Draw a synthetic dataset with a test sample the size of the training sample."""
    if source.kind != "gen":
        raise InvalidArgumentError("generate() needs a gen: source")
    kwargs = {"seed": seed, "stream": stream, "n_test": TEST_SIZES[source.name]}
    if noise_sd is not None:
        kwargs["noise_sd"] = noise_sd
    return GENERATORS[source.name](**kwargs)
