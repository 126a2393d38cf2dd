"""Shared fixtures: seeded generators, small datasets and a clean environment."""

import io
from typing import List

import numpy as np
import pandas as pd
import pytest

from kgd_bandwidth.data import Dataset, make_rng


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    """No colors, no KGDBW_* overrides and no stray .env files."""
    monkeypatch.setenv("NO_COLOR", "1")
    for var in ("KGDBW_SEED", "KGDBW_JOBS", "KGDBW_REPS", "KGDBW_BOX_WIDTH"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setattr("kgd_bandwidth.main.USER_ENV_PATH", tmp_path / "missing.env")
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def rng():
    return make_rng(12345, 0)


def smooth_instance(rng: np.random.Generator, n: int = 12, n_test: int = 4, p: int = 1) -> Dataset:
    x = rng.uniform(-1.0, 1.0, size=(n, p))
    y = np.sin(3.0 * x[:, 0]) + 0.1 * rng.standard_normal(n)
    x_test = rng.uniform(-1.0, 1.0, size=(n_test, p))
    y_test = np.sin(3.0 * x_test[:, 0])
    return Dataset(x=x, y=y, x_test=x_test, y_test=y_test)


@pytest.fixture
def small_data(rng) -> Dataset:
    return smooth_instance(rng)


@pytest.fixture
def grid_data() -> Dataset:
    """Evenly spaced 1-D design with a centered response."""
    x = np.linspace(0.0, 3.0, 8)
    y = np.cos(2.0 * x)
    y = y - y.mean()
    return Dataset(x=x, y=y, x_test=np.array([0.7, 1.9]), y_test=np.cos(2.0 * np.array([0.7, 1.9])))


@pytest.fixture
def csv_fixture(tmp_path):
    """Write a CSV file and return its path."""

    def write(text: str, name: str = "data.csv") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


def read_result(path: str) -> pd.DataFrame:
    """Read a result CSV, skipping the trailing metadata line."""
    return pd.read_csv(path, comment="#")


def split_blocks(text: str) -> List[pd.DataFrame]:
    """Split stdout holding several result CSVs, each closed by its metadata line."""
    blocks, lines = [], []
    for line in text.splitlines():
        if line.startswith("# version="):
            blocks.append(pd.read_csv(io.StringIO("\n".join(lines) + "\n")))
            lines = []
        else:
            lines.append(line)
    return blocks
