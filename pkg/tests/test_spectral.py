import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kgd_bandwidth.errors import InvalidArgumentError, NotPSDError
from kgd_bandwidth.spectral import (
    apply_phi_t,
    eig_sym_psd,
    matrix_exp_neg,
    phi,
    ridge_resolvent_apply,
)


def test_identity_eigenvalues():
    assert_allclose(eig_sym_psd(np.eye(2)).eigenvalues, [1.0, 1.0])


def test_rank_one_eigenvalues_are_ascending():
    decomp = eig_sym_psd(np.ones((2, 2)))
    assert_allclose(decomp.eigenvalues, [0.0, 2.0], atol=1e-15)
    assert decomp.s_min == 0.0
    assert decomp.s_max == pytest.approx(2.0)


def test_diagonal_eigenvectors_are_axis_aligned():
    decomp = eig_sym_psd(np.diag([3.0, 5.0]))
    assert_allclose(decomp.eigenvalues, [3.0, 5.0])
    assert_allclose(np.abs(decomp.eigenvectors), np.eye(2))


def test_reconstruction(rng):
    A = rng.normal(size=(6, 6))
    K = A @ A.T
    decomp = eig_sym_psd(K)
    assert_allclose(decomp.apply(decomp.eigenvalues), K, atol=1e-10)
    assert_allclose(decomp.eigenvectors.T @ decomp.eigenvectors, np.eye(6), atol=1e-12)


def test_indefinite_matrix_is_rejected():
    with pytest.raises(NotPSDError):
        eig_sym_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_rounding_noise_is_clamped():
    K = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-13]])
    assert eig_sym_psd(K).eigenvalues.min() >= 0.0


def test_asymmetric_matrix_is_rejected():
    with pytest.raises(InvalidArgumentError):
        eig_sym_psd(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_phi_at_zero_eigenvalue_is_t():
    assert_allclose(phi(np.array([0.0, 2.0]), 1.0), [1.0, (1.0 - math.exp(-2.0)) / 2.0])


def test_phi_t_on_diagonal():
    out = apply_phi_t(eig_sym_psd(np.diag([0.0, 2.0])), 1.0)
    assert_allclose(out, np.diag([1.0, 0.432332358381693654]), atol=1e-15)


def test_phi_t_on_identity():
    t = 0.7
    assert_allclose(apply_phi_t(eig_sym_psd(np.eye(3)), t), (1.0 - math.exp(-t)) * np.eye(3), atol=1e-15)


def test_phi_t_small_time_limit(rng):
    A = rng.normal(size=(4, 4))
    decomp = eig_sym_psd(A @ A.T)
    t = 1e-8
    assert_allclose(apply_phi_t(decomp, t), t * np.eye(4), atol=1e-12)


def test_phi_t_rejects_nonpositive_time():
    with pytest.raises(InvalidArgumentError):
        apply_phi_t(eig_sym_psd(np.eye(2)), 0.0)


def test_resolvent_examples():
    y = np.array([2.0, -4.0])
    assert_allclose(ridge_resolvent_apply(eig_sym_psd(np.eye(2)), 1.0, y), y / 2.0)
    assert_allclose(ridge_resolvent_apply(eig_sym_psd(np.diag([0.0, 2.0])), 1.0, np.ones(2)), [1.0, 1.0 / 3.0])


def test_resolvent_large_lambda(rng):
    A = rng.normal(size=(5, 5))
    v = rng.normal(size=5)
    lam = 1e8
    assert_allclose(ridge_resolvent_apply(eig_sym_psd(A @ A.T), lam, v), v / lam, rtol=1e-6)


def test_resolvent_matches_solve(rng):
    A = rng.normal(size=(5, 5))
    K = A @ A.T
    v = rng.normal(size=5)
    assert_allclose(ridge_resolvent_apply(eig_sym_psd(K), 0.3, v), np.linalg.solve(K + 0.3 * np.eye(5), v), rtol=1e-9)


def test_resolvent_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        ridge_resolvent_apply(eig_sym_psd(np.eye(2)), 1.0, np.ones(3))


def test_matrix_exponential_examples():
    assert_allclose(matrix_exp_neg(eig_sym_psd(np.zeros((3, 3))), 2.0), np.eye(3))
    assert_allclose(matrix_exp_neg(eig_sym_psd(np.array([[1.0]])), math.log(2.0)), [[0.5]])
