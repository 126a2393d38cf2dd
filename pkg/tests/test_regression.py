import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kgd_bandwidth.data import Dataset
from kgd_bandwidth.errors import InvalidArgumentError
from kgd_bandwidth.kernels import kernel_matrix, max_pairwise_distance
from kgd_bandwidth.models.schema import KernelFamily, KernelSpec
from kgd_bandwidth.regression import Estimator, Prior, kgf_fit, kgf_single_bound, krr_fit, krr_single_bound
from kgd_bandwidth.spectral import eig_sym_psd


def test_krr_matches_direct_solve(small_data):
    spec = KernelSpec(family=KernelFamily.MATERN32, sigma=0.5)
    fit = krr_fit(small_data, spec, 0.1)
    K = kernel_matrix(small_data.x, None, spec)
    alpha = np.linalg.solve(K + 0.1 * np.eye(small_data.n), small_data.y)
    assert_allclose(fit.f_train, K @ alpha, rtol=1e-9)
    assert_allclose(fit.f_test, kernel_matrix(small_data.x_test, small_data.x, spec) @ alpha, rtol=1e-9)
    assert fit.estimator == Estimator.KRR
    assert fit.parameter == 0.1


def test_krr_accepts_shared_decomposition(small_data):
    spec = KernelSpec(family=KernelFamily.LAPLACE, sigma=0.4)
    decomp = eig_sym_psd(kernel_matrix(small_data.x, None, spec))
    for lam in (1e-3, 1.0):
        assert_allclose(krr_fit(small_data, spec, lam, decomp=decomp).f_test, krr_fit(small_data, spec, lam).f_test)


def test_krr_rejects_nonpositive_lambda(small_data):
    with pytest.raises(InvalidArgumentError):
        krr_fit(small_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), 0.0)


def test_constant_prior_shifts_predictions(small_data):
    spec = KernelSpec(family=KernelFamily.GAUSSIAN, sigma=0.3)
    shifted = Dataset(x=small_data.x, y=small_data.y + 5.0, x_test=small_data.x_test)
    base = krr_fit(small_data, spec, 0.05)
    fit = krr_fit(shifted, spec, 0.05, prior=Prior.constant(5.0))
    assert_allclose(fit.f_train, base.f_train + 5.0, rtol=1e-12)
    assert_allclose(fit.f_test, base.f_test + 5.0, rtol=1e-12)


def test_wide_bandwidth_krr_predicts_shrunk_mean(small_data):
    lam = 0.5
    fit = krr_fit(small_data, KernelSpec(family=KernelFamily.CAUCHY, sigma=1e8), lam)
    target = small_data.n / (small_data.n + lam) * small_data.y.mean()
    assert_allclose(fit.f_train, target, atol=1e-4)
    assert_allclose(fit.f_test, target, atol=1e-4)


def test_narrow_bandwidth_krr(small_data):
    lam = 0.5
    fit = krr_fit(small_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1e-8), lam, prior=Prior.constant(1.0))
    assert_allclose(fit.f_train - 1.0, (small_data.y - 1.0) / (1.0 + lam), atol=1e-10)
    assert_allclose(fit.f_test, 1.0, atol=1e-10)


def test_kgf_narrow_bandwidth_on_training_rows(small_data):
    t = 2.0
    fit = kgf_fit(small_data, KernelSpec(family=KernelFamily.MATERN52, sigma=1e-8), t)
    assert_allclose(fit.f_train, -math.expm1(-t) * small_data.y, atol=1e-10)
    assert_allclose(fit.f_test, 0.0, atol=1e-10)


def test_kgf_wide_bandwidth_example():
    data = Dataset(x=[[0.0], [1.0], [2.0]], y=[1.0, 2.0, 3.0], x_test=[[0.5]])
    fit = kgf_fit(data, KernelSpec(family=KernelFamily.GAUSSIAN, sigma=1e8), 1.0)
    assert_allclose(fit.f_train, 1.9004258632642721, atol=1e-4)
    assert_allclose(fit.f_test, 1.9004258632642721, atol=1e-4)


def test_kgf_converges_to_interpolation():
    data = Dataset(x=[[0.0], [1.0], [2.0], [3.0]], y=[0.3, -1.0, 2.0, 0.5])
    spec = KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0)
    s_min = eig_sym_psd(kernel_matrix(data.x, None, spec)).s_min
    fit = kgf_fit(data, spec, 1e3 / s_min)
    assert_allclose(fit.f_train, data.y, atol=1e-6)


def test_kgf_and_krr_agree_within_thirty_percent(rng):
    x = rng.uniform(-2.0, 2.0, size=(15, 1))
    data = Dataset(x=x, y=np.sin(2.0 * x[:, 0]) + 0.2 * rng.standard_normal(15))
    spec = KernelSpec(family=KernelFamily.MATERN32, sigma=max_pairwise_distance(x) / 5.0)
    for lam in (1e-3, 1e-1, 1e1):
        kgf = kgf_fit(data, spec, 1.0 / lam).f_train
        krr = krr_fit(data, spec, lam).f_train
        assert np.linalg.norm(kgf - krr) <= 0.3 * np.linalg.norm(kgf)


def test_kgf_rejects_bad_time(small_data):
    with pytest.raises(InvalidArgumentError):
        kgf_fit(small_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), -1.0)


def test_single_point_bound_scalar_example():
    data = Dataset(x=[[0.0]], y=[2.0])
    bound = kgf_single_bound(data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), 1.0, None, [0.0])
    assert bound.prediction == pytest.approx(2.0 * (1.0 - math.exp(-1.0)))
    assert bound.bound == pytest.approx(2.0)
    assert bound.holds


def test_single_point_bound_zero_response():
    data = Dataset(x=[[0.0], [1.0]], y=[1.0, -1.0])
    prior = Prior(mu=lambda row: 1.0 - 2.0 * row[0], name="line")
    bound = kgf_single_bound(data, KernelSpec(family=KernelFamily.GAUSSIAN, sigma=1.0), 3.0, prior, [0.5])
    assert bound.prediction == 0.0
    assert bound.bound == 0.0
    assert bound.holds


@pytest.mark.parametrize("family", list(KernelFamily))
def test_single_point_bounds_hold(family, small_data, rng):
    spec = KernelSpec(family=family, sigma=0.4)
    for _ in range(5):
        x_star = rng.uniform(-1.5, 1.5, size=1)
        t = float(10.0 ** rng.uniform(-1.0, 2.0))
        assert kgf_single_bound(small_data, spec, t, None, x_star).holds
        assert krr_single_bound(small_data, spec, 1.0 / t, None, x_star).holds


def test_prior_rejects_non_finite_values():
    prior = Prior(mu=lambda row: math.inf, name="bad")
    with pytest.raises(InvalidArgumentError):
        prior(np.zeros((2, 1)))
