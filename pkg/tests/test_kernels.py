import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kgd_bandwidth.errors import InvalidArgumentError
from kgd_bandwidth.kernels import (
    kernel_derivative_bound,
    kernel_from_distances,
    kernel_matrix,
    kernel_value,
    length_scale,
    max_pairwise_distance,
    pairwise_distances,
    theta_spectral_norm,
)
from kgd_bandwidth.models.schema import KernelFamily, KernelSpec

FAMILIES = list(KernelFamily)


def spec(family, sigma=1.0, theta=None):
    return KernelSpec(family=family, sigma=sigma, theta=theta)


def test_laplace_at_zero_distance():
    assert kernel_value(spec(KernelFamily.LAPLACE), 0.0) == 1.0


def test_gaussian_uses_sigma_not_sigma_squared():
    assert kernel_value(spec(KernelFamily.GAUSSIAN, 2.0), 1.0) == pytest.approx(math.exp(-0.25), rel=1e-12)


def test_cauchy_at_unit_distance():
    assert kernel_value(spec(KernelFamily.CAUCHY), 1.0) == pytest.approx(0.5)


def test_matern32_vanishes_far_away():
    assert kernel_value(spec(KernelFamily.MATERN32), 1e8) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_profiles_are_normalized_bounded_and_decreasing(family):
    d = np.linspace(0.0, 20.0, 2001)
    for sigma in (0.3, 1.0, 4.0):
        values = kernel_from_distances(family, d, sigma)
        assert values[0] == pytest.approx(1.0)
        assert np.all(values <= 1.0 + 1e-15)
        assert np.all(values >= 0.0)
        assert np.all(np.diff(values) <= 1e-15)


def test_negative_distance_is_rejected():
    with pytest.raises(InvalidArgumentError):
        kernel_value(spec(KernelFamily.LAPLACE), -1.0)


def test_laplace_matrix_on_two_points():
    X = np.array([[0.0], [1.0]])
    K = kernel_matrix(X, X, spec(KernelFamily.LAPLACE))
    e = math.exp(-1.0)
    assert_allclose(K, [[1.0, e], [e, 1.0]], rtol=1e-14)


def test_single_row_matrix():
    assert_allclose(kernel_matrix([[2.5]], None, spec(KernelFamily.GAUSSIAN)), [[1.0]])


def test_cross_matrix_cauchy():
    K = kernel_matrix(np.array([[0.0]]), np.array([[0.0], [3.0]]), spec(KernelFamily.CAUCHY))
    assert_allclose(K, [[1.0, 0.1]], rtol=1e-14)


def test_column_mismatch_is_rejected():
    with pytest.raises(InvalidArgumentError):
        kernel_matrix(np.zeros((2, 2)), np.zeros((2, 3)), spec(KernelFamily.LAPLACE))


@pytest.mark.parametrize("family", FAMILIES)
def test_kernel_matrices_are_symmetric_psd(family, rng):
    X = rng.normal(size=(25, 2))
    for sigma in (0.1, 1.0, 10.0):
        K = kernel_matrix(X, None, spec(family, sigma))
        assert_allclose(K, K.T, atol=0)
        assert_allclose(np.diag(K), 1.0)
        assert np.linalg.eigvalsh(K).min() > -1e-10


def test_max_pairwise_distance_examples():
    assert max_pairwise_distance([[0.0], [1.0], [4.0]]) == pytest.approx(4.0)
    assert max_pairwise_distance([[0.0, 0.0], [3.0, 4.0]]) == pytest.approx(5.0)
    assert max_pairwise_distance([[0.0], [2.0]], theta=[[4.0]]) == pytest.approx(4.0)


def test_max_pairwise_distance_needs_two_rows():
    with pytest.raises(InvalidArgumentError):
        max_pairwise_distance([[1.0]])


def test_metric_scales_distances_consistently():
    X = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
    theta = np.diag([4.0, 1.0])
    d = pairwise_distances(X, None, theta)
    assert d[0, 1] == pytest.approx(math.sqrt(4.0 * 1.0 + 4.0))
    K = kernel_matrix(X, None, spec(KernelFamily.LAPLACE, theta=theta.tolist()))
    assert_allclose(K, np.exp(-d))
    assert theta_spectral_norm(theta) == pytest.approx(4.0)


def test_theta_must_be_positive_definite():
    with pytest.raises(ValueError):
        KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0, theta=[[1.0, 2.0], [2.0, 1.0]])


@pytest.mark.parametrize("family", FAMILIES)
def test_derivative_bound_dominates_profile_slope(family):
    sigma = 2.5
    u = np.linspace(0.0, 30.0, 300001)
    g = kernel_from_distances(family, u * sigma, sigma)
    slope = np.abs(np.diff(g) / np.diff(u)).max()
    bound = kernel_derivative_bound(family, sigma).k_prime_max
    assert slope <= bound * (1 + 1e-9)
    assert slope == pytest.approx(bound, rel=1e-3)


def test_gaussian_derivative_bound_needs_sigma():
    with pytest.raises(InvalidArgumentError):
        kernel_derivative_bound(KernelFamily.GAUSSIAN)


def test_kernel_value_rejects_non_positive_sigma():
    with pytest.raises(InvalidArgumentError, match="Invalid input"):
        kernel_value({"family": "gaussian", "sigma": 0.0}, 1.0)
    with pytest.raises(InvalidArgumentError):
        kernel_value({"family": "laplace", "sigma": -1.0}, 1.0)


def test_kernel_value_accepts_a_mapping():
    assert kernel_value({"family": "cauchy", "sigma": 1.0}, 1.0) == pytest.approx(0.5)


def test_kernel_value_is_warning_free():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        value = kernel_value(spec(KernelFamily.MATERN52, 0.5), 0.3)
    assert isinstance(value, float)
    assert 0.0 < value < 1.0


def test_length_scale_of_gaussian_is_root_sigma():
    assert length_scale(KernelFamily.GAUSSIAN, 0.0625) == pytest.approx(0.25)
    assert length_scale(KernelFamily.MATERN32, 0.0625) == pytest.approx(0.0625)
    assert_allclose(length_scale(KernelFamily.GAUSSIAN, np.array([4.0, 1.0])), [2.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        length_scale(KernelFamily.CAUCHY, 0.0)
