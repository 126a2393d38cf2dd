import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kgd_bandwidth.data import Dataset
from kgd_bandwidth.errors import InvalidArgumentError, SelectionFailedError
from kgd_bandwidth.kernels import kernel_matrix, max_pairwise_distance
from kgd_bandwidth.models.schema import HyperGrid, KernelFamily, KernelSpec, SelectionMethod
from kgd_bandwidth.selection import (
    default_mml_seeds,
    gcv_score,
    gcv_score_spectral,
    gcv_select,
    log_marginal_likelihood,
    log_marginal_likelihood_spectral,
    mml_select,
)
from kgd_bandwidth.spectral import eig_sym_psd


def test_gcv_spectral_toy():
    decomp = eig_sym_psd(np.diag([1.0, 0.0]))
    assert gcv_score_spectral(decomp, np.array([1.0, 1.0]), 1.0) == pytest.approx(0.625 / 0.5625)


def test_gcv_vanishing_hat_matrix(small_data):
    spec = KernelSpec(family=KernelFamily.LAPLACE, sigma=0.5)
    expected = float(small_data.y @ small_data.y) / small_data.n
    assert gcv_score(small_data, spec, 1e12) == pytest.approx(expected, rel=1e-6)


def test_gcv_rejects_bad_lambda(small_data):
    with pytest.raises(InvalidArgumentError):
        gcv_score(small_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=0.5), -1.0)


def test_single_cell_grid(small_data):
    grid = HyperGrid(lambdas=[0.3], sigmas=[0.7])
    result = gcv_select(small_data, KernelFamily.MATERN32, grid)
    assert result.method == SelectionMethod.GCV
    assert result.lambda_ == 0.3
    assert result.sigma == 0.7


def test_zero_response_picks_largest_lambda_and_sigma(small_data):
    data = Dataset(x=small_data.x, y=np.zeros(small_data.n))
    grid = HyperGrid.log_spaced((1e-3, 1e1), (0.1, 1.0), 5, 4)
    result = gcv_select(data, KernelFamily.GAUSSIAN, grid)
    assert result.lambda_ == pytest.approx(1e1)
    assert result.sigma == pytest.approx(1.0)


def test_gcv_select_finds_grid_minimum(small_data):
    grid = HyperGrid.log_spaced((1e-3, 1e1), (0.05, 2.0), 6, 6)
    result = gcv_select(small_data, KernelFamily.LAPLACE, grid)
    scores = [
        gcv_score(small_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=s), lam)
        for lam in grid.lambdas
        for s in grid.sigmas
    ]
    assert result.score == pytest.approx(min(scores), rel=1e-10)


def test_gcv_default_grid_is_thirty_by_thirty(small_data):
    grid = HyperGrid.default_for(max_pairwise_distance(small_data.x))
    assert len(grid.lambdas) == 30 and len(grid.sigmas) == 30
    result = gcv_select(small_data, KernelFamily.CAUCHY)
    assert min(grid.lambdas) <= result.lambda_ <= max(grid.lambdas)


def test_gcv_fails_when_every_cell_fails(small_data):
    data = Dataset(x=small_data.x, y=np.full(small_data.n, np.finfo(float).max))
    grid = HyperGrid(lambdas=[1.0], sigmas=[1.0])
    with pytest.raises(SelectionFailedError):
        gcv_select(data, KernelFamily.LAPLACE, grid)


def test_log_spacing_is_enforced():
    with pytest.raises(ValueError):
        HyperGrid(lambdas=[1.0, 2.0, 10.0], sigmas=[1.0])


def test_marginal_likelihood_scalar():
    data = Dataset(x=[[0.0]], y=[0.0])
    value = log_marginal_likelihood(data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), 1.0)
    assert value == pytest.approx(-0.5 * math.log(2.0) - 0.5 * math.log(2.0 * math.pi), abs=1e-12)
    assert value == pytest.approx(-1.26551, abs=1e-5)


def test_marginal_likelihood_zero_response(rng):
    A = rng.normal(size=(4, 4))
    decomp = eig_sym_psd(A @ A.T)
    lam = 0.2
    expected = -0.5 * np.sum(np.log(decomp.eigenvalues + lam)) - 2.0 * math.log(2.0 * math.pi)
    assert log_marginal_likelihood_spectral(decomp, np.zeros(4), lam) == pytest.approx(expected)


def test_marginal_likelihood_matches_dense_formula(small_data):
    spec = KernelSpec(family=KernelFamily.MATERN52, sigma=0.6)
    C = kernel_matrix(small_data.x, None, spec) + 0.1 * np.eye(small_data.n)
    _, logdet = np.linalg.slogdet(C)
    y = small_data.y
    expected = -0.5 * y @ np.linalg.solve(C, y) - 0.5 * logdet - 0.5 * small_data.n * math.log(2 * math.pi)
    assert log_marginal_likelihood(small_data, spec, 0.1) == pytest.approx(expected, rel=1e-9)


def test_default_seeds_span_three_decades():
    seeds = default_mml_seeds(10.0)
    assert len(seeds) == 9
    assert sorted({lam for lam, _ in seeds}) == [1e-3, 1e-1, 1e1]
    sigmas = sorted({s for _, s in seeds})
    assert_allclose(sigmas, [10.0 * 10 ** (-5 / 3), 1.0, 10.0 * 10 ** (-1 / 3)])


def test_mml_select_improves_on_every_seed(small_data):
    result = mml_select(small_data, KernelFamily.GAUSSIAN)
    assert result.method == SelectionMethod.MML
    assert 1e-10 <= result.lambda_ <= 1e6
    for lam, sigma in default_mml_seeds(max_pairwise_distance(small_data.x)):
        seed_value = log_marginal_likelihood(small_data, KernelSpec(family=KernelFamily.GAUSSIAN, sigma=sigma), lam)
        assert result.score >= seed_value - 1e-9


def test_mml_single_row_needs_seeds():
    data = Dataset(x=[[0.0]], y=[1.0])
    with pytest.raises(InvalidArgumentError):
        mml_select(data, KernelFamily.LAPLACE)
    result = mml_select(data, KernelFamily.LAPLACE, seeds=[(0.5, 1.0)])
    assert math.isfinite(result.score)


def test_mml_rejects_bad_seeds(small_data):
    with pytest.raises(InvalidArgumentError):
        mml_select(small_data, KernelFamily.LAPLACE, seeds=[(-1.0, 1.0)])
    with pytest.raises(InvalidArgumentError):
        mml_select(small_data, KernelFamily.LAPLACE, seeds=[])
