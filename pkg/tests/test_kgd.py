import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import smooth_instance
from kgd_bandwidth.data import Dataset, gen_two_freq
from kgd_bandwidth.errors import DegenerateResponseError, DivergenceError, InvalidArgumentError
from kgd_bandwidth.kernels import length_scale, max_pairwise_distance
from kgd_bandwidth.kgd import (
    PROFILE_COLUMNS,
    TRAJECTORY_COLUMNS,
    bandwidth_r2_profile,
    kgd_constant,
    kgd_decreasing_bandwidth,
    kgd_step,
    largest_r2_jump,
    r2,
    r2_rate,
    step_budget,
)
from kgd_bandwidth.models.schema import KernelFamily, KernelSpec, KGDConfig
from kgd_bandwidth.regression import Prior, kgf_fit


# ============================================================================
# PRIMITIVES
# ============================================================================

def test_step_on_identity_kernel():
    y = np.array([1.0, -2.0, 0.5])
    f, f_star = kgd_step(np.zeros(3), np.zeros(0), np.eye(3), np.zeros((0, 3)), y, 0.1)
    assert_allclose(f, 0.1 * y)
    assert f_star.shape == (0,)


def test_step_fixed_point():
    y = np.array([1.0, 2.0])
    f, f_star = kgd_step(y, np.array([7.0]), np.ones((2, 2)), np.ones((1, 2)), y, 0.5)
    assert_allclose(f, y)
    assert_allclose(f_star, [7.0])


def test_scalar_hand_iteration():
    K, y = np.array([[1.0]]), np.array([1.0])
    f, _ = kgd_step(np.array([0.0]), np.zeros(0), K, np.zeros((0, 1)), y, 0.5)
    assert_allclose(f, [0.5])
    f, _ = kgd_step(f, np.zeros(0), K, np.zeros((0, 1)), y, 0.5)
    assert_allclose(f, [0.75])


def test_step_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        kgd_step(np.zeros(2), np.zeros(0), np.eye(3), np.zeros((0, 3)), np.zeros(3), 0.1)


def test_r2_examples():
    y = np.array([0.0, 2.0])
    assert r2(y, y) == 1.0
    assert r2(y, np.full(2, y.mean())) == 0.0
    assert r2(y, np.zeros(2)) == pytest.approx(-1.0)


def test_r2_rate_examples():
    y = np.array([0.0, 2.0])
    assert r2_rate(y, y, np.eye(2)) == 0.0
    assert r2_rate(y, np.zeros(2), np.eye(2)) == pytest.approx(4.0)


def test_constant_response_is_degenerate():
    with pytest.raises(DegenerateResponseError):
        r2(np.ones(3), np.zeros(3))


def test_step_budget_tolerates_rounding():
    assert step_budget(1.0, 0.1) == 10
    assert step_budget(0.3, 0.1) == 3
    assert step_budget(0.05, 0.1) == 0


# ============================================================================
# CONSTANT KERNEL
# ============================================================================

def test_constant_run_records_every_step(grid_data):
    spec = KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0)
    traj = kgd_constant(grid_data, spec, 0.05, 1.0)
    assert traj.steps == 21
    assert_allclose(traj.times, 0.05 * np.arange(21))
    assert np.all(traj.sigmas == 1.0)
    assert np.all(np.diff(traj.r2s) >= -1e-12)
    assert list(traj.to_frame().columns) == TRAJECTORY_COLUMNS


def test_constant_run_converges(grid_data):
    traj = kgd_constant(grid_data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), 0.1, 300.0)
    assert_allclose(traj.final.f_train, grid_data.y, atol=1e-6)


def test_constant_run_diverges_for_large_step():
    data = Dataset(x=[[0.0], [100.0]], y=[1.0, -1.0])
    with pytest.raises(DivergenceError) as info:
        kgd_constant(data, KernelSpec(family=KernelFamily.LAPLACE, sigma=1.0), 3.0, 3.0 * 3000)
    assert info.value.step is not None


@pytest.mark.parametrize("family", list(KernelFamily))
def test_discrete_steps_approach_gradient_flow(family, rng):
    errors = []
    for trial in range(4):
        data = smooth_instance(rng, n=int(rng.integers(5, 20)), n_test=3)
        spec = KernelSpec(family=family, sigma=max_pairwise_distance(data.x) * float(rng.uniform(0.1, 1.0)))
        t = 2.0
        flow = kgf_fit(data, spec, t)
        per_dt = []
        for dt in (0.04, 0.02, 0.01):
            traj = kgd_constant(data, spec, dt, t)
            gap = max(
                np.abs(traj.final.f_train - flow.f_train).max(),
                np.abs(traj.final.f_test - flow.f_test).max(),
            )
            per_dt.append(gap)
        errors.append(per_dt)
        assert per_dt[2] <= 0.01 * np.linalg.norm(data.y)
        # first-order method: halving dt roughly halves the error
        assert per_dt[1] <= 0.75 * per_dt[0] + 1e-12
        assert per_dt[2] <= 0.75 * per_dt[1] + 1e-12


def test_trajectory_expansion_reproduces_test_predictions(small_data):
    traj = kgd_constant(small_data, KernelSpec(family=KernelFamily.MATERN52, sigma=0.5), 0.01, 3.0)
    assert_allclose(traj.predict(small_data.x_test), traj.final.f_test, rtol=1e-9, atol=1e-12)
    assert_allclose(traj.predict(small_data.x), traj.final.f_train, rtol=1e-9, atol=1e-12)


# ============================================================================
# DECREASING BANDWIDTH
# ============================================================================

def test_two_point_run_reaches_target():
    data = Dataset(x=[[0.0], [1.0]], y=[0.0, 1.0])
    traj = kgd_decreasing_bandwidth(data, KernelFamily.GAUSSIAN)
    assert traj.r2s[-1] >= 0.99
    assert traj.sigma_final <= traj.sigma_initial
    assert traj.sigma_initial == pytest.approx(1.0)
    assert np.all(np.diff(traj.r2s) >= -1e-12)


def test_bandwidth_never_increases(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.LAPLACE, KGDConfig(v_r2=0.5))
    assert np.all(np.diff(traj.sigmas) <= 0)
    assert traj.sigmas.min() >= 1e-4 * traj.sigma_initial * (1 - 1e-12)
    assert np.all(np.diff(traj.r2s) >= -1e-10)


def test_zero_rate_threshold_matches_plain_descent(small_data):
    cfg = KGDConfig(v_r2=0.0, r2_max=0.95, t_max=20.0)
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.CAUCHY, cfg)
    assert np.all(traj.sigmas == traj.sigma_initial)
    spec = KernelSpec(family=KernelFamily.CAUCHY, sigma=traj.sigma_initial)
    plain = kgd_constant(small_data, spec, cfg.dt, traj.t_final)
    assert plain.steps == traj.steps
    assert_allclose(traj.r2s, plain.r2s, rtol=1e-9, atol=1e-12)
    assert_allclose(traj.residual_norms, plain.residual_norms, rtol=1e-8, atol=1e-12)
    assert_allclose(traj.final.f_test, plain.final.f_test, rtol=1e-8, atol=1e-10)


def test_response_equal_to_prior_stays_at_prior():
    x = np.array([0.0, 0.4, 1.0])
    data = Dataset(x=x, y=2.0 * x, x_test=[[0.7]])
    prior = Prior(mu=lambda row: 2.0 * row[0], name="slope")
    traj = kgd_decreasing_bandwidth(data, KernelFamily.LAPLACE, prior=prior)
    assert_allclose(traj.final.f_train, data.y)
    assert_allclose(traj.final.f_test, [1.4])


def test_decreasing_run_diverges_for_large_step():
    data = Dataset(x=[[0.0], [100.0]], y=[1.0, -1.0])
    cfg = KGDConfig(dt=3.0, v_r2=0.0, sigma0=1e-3, sigma_min=1e-3, r2_max=1.0, t_max=3.0 * 3000)
    with pytest.raises(DivergenceError):
        kgd_decreasing_bandwidth(data, KernelFamily.LAPLACE, cfg)


def test_time_budget_stops_run(small_data):
    cfg = KGDConfig(r2_max=1.0, t_max=0.5)
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.MATERN32, cfg)
    assert traj.t_final == pytest.approx(0.5)
    assert traj.steps == 51


def test_decreasing_expansion_reproduces_predictions(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.GAUSSIAN, KGDConfig(t_max=200.0))
    assert len(traj.segments) >= 1
    assert_allclose(traj.predict(small_data.x_test), traj.final.f_test, rtol=1e-8, atol=1e-10)
    assert_allclose(traj.predict(small_data.x), traj.final.f_train, rtol=1e-8, atol=1e-10)


def test_sigma_min_above_sigma0_is_rejected():
    with pytest.raises(ValueError):
        KGDConfig(sigma0=1.0, sigma_min=2.0)


def test_single_row_needs_explicit_sigma0():
    data = Dataset(x=[[0.0]], y=[1.0])
    with pytest.raises((InvalidArgumentError, DegenerateResponseError)):
        kgd_decreasing_bandwidth(data, KernelFamily.LAPLACE)


# ============================================================================
# BANDWIDTH PROFILE
# ============================================================================

def test_profile_gains_add_up(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.GAUSSIAN, KGDConfig(t_max=100.0))
    profile = bandwidth_r2_profile(traj)
    assert list(profile.columns) == PROFILE_COLUMNS
    assert len(profile) == len(traj.segments)
    assert profile["r2_gain"].sum() == pytest.approx(traj.r2s[-1] - traj.r2s[0])
    jump = largest_r2_jump(traj)
    if len(profile) > 1:
        assert jump in set(profile["sigma"].iloc[1:])
    else:
        assert jump is None


def test_no_jump_without_decrease(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.GAUSSIAN, KGDConfig(v_r2=0.0, t_max=1.0))
    assert largest_r2_jump(traj) is None


def test_gaussian_profile_reports_root_sigma(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.GAUSSIAN, KGDConfig(t_max=50.0))
    profile = bandwidth_r2_profile(traj)
    assert_allclose(profile["length_scale"], np.sqrt(profile["sigma"]))


def test_jump_band_must_exceed_one(small_data):
    traj = kgd_decreasing_bandwidth(small_data, KernelFamily.GAUSSIAN, KGDConfig(t_max=50.0))
    with pytest.raises(InvalidArgumentError):
        largest_r2_jump(traj, band=1.0)


def _staircase():
    """Noiseless data with a step in the response and a flat stretch elsewhere."""
    x = np.linspace(-1.0, 1.0, 41)
    return Dataset(x=x, y=np.where(np.abs(x) < 0.1, 1.0, 0.0))


def test_jump_is_the_densest_band_of_gain():
    traj = kgd_decreasing_bandwidth(_staircase(), KernelFamily.LAPLACE, KGDConfig(t_max=200.0))
    profile = bandwidth_r2_profile(traj)
    jump = largest_r2_jump(traj)
    assert jump in set(profile["sigma"].iloc[1:])
    upper = profile.index[profile["sigma"] == jump][0]
    scales = profile["length_scale"]
    band_gain = profile["r2_gain"][(scales <= scales[upper]) & (scales > scales[upper] / 2.0)].sum()
    for i in range(1, len(profile)):
        other = profile["r2_gain"][(scales <= scales[i]) & (scales > scales[i] / 2.0)].sum()
        assert other <= band_gain + 1e-12


@pytest.mark.slow
def test_largest_jump_sits_near_a_two_freq_wavelength():
    hits = 0
    for seed in range(20):
        traj = kgd_decreasing_bandwidth(gen_two_freq(noise_sd=0.0, seed=seed), KernelFamily.GAUSSIAN)
        scale = length_scale(KernelFamily.GAUSSIAN, largest_r2_jump(traj))
        hits += any(0.5 * w <= scale <= 2.0 * w for w in (1.0, 0.125))
    assert hits >= 15
