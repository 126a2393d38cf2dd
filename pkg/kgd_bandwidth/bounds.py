# File Summary: Numerical checks of the a priori bounds on recorded trajectories.

"""
Bound checks for kernel gradient descent and its closed-form relatives.

Residual-weighted averages along a trajectory, with w(τ) = ‖y − f̂(τ)‖₂:

    k̄*      = ∫‖k*(τ)‖₂ w dτ / ∫w dτ
    σ̄⁻¹     = ∫σ(τ)⁻¹ w dτ / ∫w dτ
    s̄_min   = (1/t) ∫s_min(K(τ)) dτ

Integrals use the trapezoidal rule on the recorded steps. The contraction
envelope exp(−∫s_min) uses the left-endpoint sum, which is what one Euler
step per recorded kernel contracts by.
"""

import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial.distance import pdist

from .data import Dataset
from .errors import DegenerateTrajectoryError, InvalidArgumentError
from .kernels import ZERO_DISTANCE, kernel_derivative_bound, max_pairwise_distance, theta_spectral_norm
from .kgd import Trajectory
from .models.schema import (
    BoundCheck,
    Eq9Row,
    KernelFamily,
    KernelSpec,
    LimitsReport,
    Prop4Report,
    TrajectoryAverages,
)
from .regression import Prior, kgf_fit, krr_fit
from .spectral import PHI_SMALL

BOUND_SLACK = 1e-6
GRADIENT_SLACK = 1e-4
ZERO_TOL = 1e-12
LIMIT_SCALE = 1e8
FD_STEP = 1e-5
SANDWICH_MIN_GAP = 1e-6


# ============================================================================
# TRAJECTORY AVERAGES
# ============================================================================

def weighted_time_average(values, weights, times) -> float:
    """∫values·weights dτ / ∫weights dτ by the trapezoidal rule."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    times = np.asarray(times, dtype=float)
    if not (values.shape == weights.shape == times.shape) or times.ndim != 1:
        raise InvalidArgumentError("values, weights and times must be vectors of equal length")
    if times.shape[0] < 2:
        raise DegenerateTrajectoryError("averages need at least two recorded steps")
    total = trapezoid(weights, times)
    if not total > 0:
        raise DegenerateTrajectoryError("residual is zero along the whole trajectory")
    return float(trapezoid(values * weights, times) / total)


def trajectory_averages(traj: Trajectory, test_point_index: Optional[int] = None) -> TrajectoryAverages:
    """Compute k̄*, s̄_min and σ̄⁻¹ for one trajectory."""
    if traj.steps < 2:
        raise DegenerateTrajectoryError("averages need at least two recorded steps")
    w = traj.residual_norms
    kstar_bar = None
    if test_point_index is not None:
        kstar_bar = weighted_time_average(traj.kstar_norm(test_point_index), w, traj.times)
    inv_sigma_bar = weighted_time_average(1.0 / traj.sigmas, w, traj.times)
    smin_bar = float(trapezoid(traj.smins, traj.times) / traj.t_final)
    return TrajectoryAverages(kstar_bar=kstar_bar, smin_bar=max(smin_bar, 0.0), inv_sigma_bar=inv_sigma_bar)


def _time_factor(t: float, smin_bar: float) -> float:
    """min(t, 1/s̄_min), with 1/0 read as infinity."""
    return t if smin_bar <= 0 else min(t, 1.0 / smin_bar)


def _residual_vanishes(traj: Trajectory, y_mu_norm: float) -> bool:
    return y_mu_norm == 0 or not np.any(traj.residual_norms > 0)


# ============================================================================
# SINGLE-POINT BOUNDS
# ============================================================================

def check_prop2_bound(traj: Trajectory, test_point_index: int, y_mu_norm: Optional[float] = None) -> BoundCheck:
    """|f̂_μ(x*, t)| ≤ k̄*·min(t, 1/s̄_min)·‖y_μ‖₂ for one test point."""
    y_mu_norm = traj.y_mu_norm if y_mu_norm is None else float(y_mu_norm)
    lhs = abs(float(traj.shifted_test[test_point_index]))
    if _residual_vanishes(traj, y_mu_norm):
        return BoundCheck(lhs=lhs, rhs=0.0, holds=lhs <= ZERO_TOL)
    avg = trajectory_averages(traj, test_point_index)
    rhs = avg.kstar_bar * _time_factor(traj.t_final, avg.smin_bar) * y_mu_norm
    return BoundCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1 + BOUND_SLACK))


def _as_point(x_star, p: int) -> np.ndarray:
    x = np.asarray(x_star, dtype=float).reshape(-1)
    if x.shape[0] != p:
        raise InvalidArgumentError(f"x_star has {x.shape[0]} entries, expected {p}")
    return x


def furthest_row(x_train: np.ndarray, x_star: np.ndarray) -> np.ndarray:
    """The training row furthest from x_star in Euclidean distance."""
    distances = np.linalg.norm(x_train - x_star, axis=1)
    return x_train[int(np.argmax(distances))]


def _gradient_constant(traj: Trajectory) -> float:
    """k′_max·√(n‖Θ‖₂), with the Gaussian bound taken at the widest bandwidth."""
    family = traj.final.spec.family
    k_prime = kernel_derivative_bound(family, traj.sigma_initial).k_prime_max
    return k_prime * math.sqrt(traj.n * theta_spectral_norm(traj.final.spec.theta))


def finite_difference_gradient(traj: Trajectory, x_star) -> np.ndarray:
    """Central differences of the prior-shifted final predictor, step 1e−5·σ_final."""
    x = _as_point(x_star, traj.x_train.shape[1])
    h = FD_STEP * traj.sigma_final
    p = x.shape[0]
    shifts = np.eye(p) * h
    plus = traj.predict_shifted(x + shifts)
    minus = traj.predict_shifted(x - shifts)
    return (plus - minus) / (2.0 * h)


def check_prop4_bounds(traj: Trajectory, data: Dataset, x_star, y_mu_norm: Optional[float] = None) -> Prop4Report:
    """Gradient bound and localization bound at x_star.

    ‖∂f̂_μ/∂x*‖₂ ≤ σ̄⁻¹·min(t, 1/s̄_min)·‖y_μ‖₂·k′_max·√(n‖Θ‖₂) and
    |f̂_μ(x*)| ≤ (the same bound)·‖x* − x_m‖₂ with x_m the furthest training row.
    The data is expected to be centered so that ȳ_μ = 0.
    """
    x = _as_point(x_star, data.p)
    if data.n != traj.n:
        raise InvalidArgumentError(f"trajectory was trained on {traj.n} rows, data has {data.n}")
    family = traj.final.spec.family
    if family == KernelFamily.LAPLACE:
        nearest = float(np.min(np.linalg.norm(data.x - x, axis=1)))
        if nearest < ZERO_DISTANCE * max(1.0, float(np.abs(data.x).max())):
            return Prop4Report(
                grad_norm=0.0,
                grad_bound=0.0,
                pred_abs=0.0,
                pred_bound=0.0,
                holds=True,
                skipped=True,
                reason="laplace kernel is not differentiable at a training row",
            )

    y_mu_norm = traj.y_mu_norm if y_mu_norm is None else float(y_mu_norm)
    grad_norm = float(np.linalg.norm(finite_difference_gradient(traj, x)))
    pred_abs = abs(float(traj.predict_shifted(x)[0]))
    reach = float(np.linalg.norm(x - furthest_row(data.x, x)))

    if _residual_vanishes(traj, y_mu_norm):
        holds = grad_norm <= ZERO_TOL and pred_abs <= ZERO_TOL
        return Prop4Report(grad_norm=grad_norm, grad_bound=0.0, pred_abs=pred_abs, pred_bound=0.0, holds=holds)

    avg = trajectory_averages(traj)
    grad_bound = avg.inv_sigma_bar * _time_factor(traj.t_final, avg.smin_bar) * y_mu_norm * _gradient_constant(traj)
    pred_bound = grad_bound * reach
    # central differences carry O(h²) error relative to the gradient scale
    fd_tol = GRADIENT_SLACK * grad_bound + 1e-8
    holds = grad_norm <= grad_bound * (1 + GRADIENT_SLACK) + fd_tol and pred_abs <= pred_bound * (1 + GRADIENT_SLACK)
    return Prop4Report(
        grad_norm=grad_norm,
        grad_bound=grad_bound,
        pred_abs=pred_abs,
        pred_bound=pred_bound,
        holds=holds,
    )


# ============================================================================
# LIMITS
# ============================================================================

def off_sample_points(x: np.ndarray) -> np.ndarray:
    """Every training row moved by a quarter of the smallest pairwise distance along the first axis.

    Each point then lies at least that quarter away from every training row.
    """
    if x.shape[0] < 2:
        raise InvalidArgumentError("off-sample points need at least two training rows")
    gap = float(pdist(x).min())
    shifted = x.copy()
    shifted[:, 0] += 0.25 * gap
    return shifted


def check_limits_prop3(
    data: Dataset,
    family: KernelFamily,
    t: float,
    lam: float,
    prior: Optional[Prior] = None,
) -> LimitsReport:
    """Deviation from the wide- and narrow-bandwidth limits of KGF and KRR.

    At σ = 1e8·D every shifted prediction tends to (1 − e^{−tn})·ȳ_μ (KGF) or
    n/(n + λ)·ȳ_μ (KRR). At σ = 1e−8·D training predictions tend to
    (1 − e^{−t})·y_μ and y_μ/(1 + λ), and off-sample predictions to 0.
    Off-sample points are data.x_test or, when absent, off_sample_points(X).
    """
    prior = prior if prior is not None else Prior.zero()
    if data.n < 2:
        raise InvalidArgumentError("limit checks need at least two training rows")
    if np.unique(data.x, axis=0).shape[0] != data.n:
        raise InvalidArgumentError("limit checks need distinct training rows")
    x_test = data.x_test if data.x_test is not None else off_sample_points(data.x)
    data = data.with_test(x_test)
    D = max_pairwise_distance(data.x)
    wide, narrow = LIMIT_SCALE * D, D / LIMIT_SCALE

    n = data.n
    mu_train, mu_test = prior(data.x), prior(x_test)
    y_mu = data.y - mu_train
    y_bar = float(np.mean(y_mu))

    def shifted(fit):
        return fit.f_train - mu_train, fit.f_test - mu_test

    deviations = {}
    tr, te = shifted(kgf_fit(data, KernelSpec(family=family, sigma=wide), t, prior))
    target = -math.expm1(-t * n) * y_bar
    deviations["kgf_wide"] = float(max(np.abs(tr - target).max(), np.abs(te - target).max()))

    tr, te = shifted(krr_fit(data, KernelSpec(family=family, sigma=wide), lam, prior))
    target = n / (n + lam) * y_bar
    deviations["krr_wide"] = float(max(np.abs(tr - target).max(), np.abs(te - target).max()))

    tr, te = shifted(kgf_fit(data, KernelSpec(family=family, sigma=narrow), t, prior))
    deviations["kgf_narrow"] = float(max(np.abs(tr + math.expm1(-t) * y_mu).max(), np.abs(te).max()))

    tr, te = shifted(krr_fit(data, KernelSpec(family=family, sigma=narrow), lam, prior))
    deviations["krr_narrow"] = float(max(np.abs(tr - y_mu / (1.0 + lam)).max(), np.abs(te).max()))

    return LimitsReport(sigma_wide=wide, sigma_narrow=narrow, deviations=deviations)


# ============================================================================
# TRAJECTORY PROPERTIES
# ============================================================================

def contraction_envelope(traj: Trajectory, y_mu_norm: float) -> np.ndarray:
    """exp(−Σ_{j<k} Δt·s_min(K_j))·‖y_μ‖₂ at every recorded step."""
    steps = np.diff(traj.times)
    exponent = np.concatenate([[0.0], np.cumsum(steps * traj.smins[:-1])])
    return np.exp(-exponent) * y_mu_norm


def check_lemma8_contraction(traj: Trajectory, y_mu_norm: Optional[float] = None) -> BoundCheck:
    """‖y − f̂(t)‖₂ ≤ exp(−∫s_min)·‖y_μ‖₂ at every step; reports the tightest step."""
    y_mu_norm = traj.y_mu_norm if y_mu_norm is None else float(y_mu_norm)
    envelope = contraction_envelope(traj, y_mu_norm)
    limit = envelope * (1 + BOUND_SLACK) + ZERO_TOL
    worst = int(np.argmax(traj.residual_norms - limit))
    holds = bool(np.all(traj.residual_norms <= limit))
    return BoundCheck(lhs=float(traj.residual_norms[worst]), rhs=float(envelope[worst]), holds=holds)


def check_r2_monotone(traj: Trajectory, slack: float = 1e-10) -> BoundCheck:
    """Largest drop of train R² between consecutive steps (lhs) against the slack (rhs)."""
    drops = -np.diff(traj.r2s)
    worst = float(drops.max()) if drops.size else 0.0
    return BoundCheck(lhs=worst, rhs=slack, holds=worst <= slack)


def check_r2_concave(traj: Trajectory, slack: float = 1e-10) -> BoundCheck:
    """Largest second difference of train R² (lhs); only meaningful at constant σ."""
    second = np.diff(traj.r2s, n=2)
    worst = float(second.max()) if second.size else 0.0
    return BoundCheck(lhs=worst, rhs=slack, holds=worst <= slack)


def check_rate_sandwich(traj: Trajectory, rtol: float = 1e-8) -> BoundCheck:
    """s_min ≤ (dR²/dt)/(2(1 − R²)) ≤ s_max at every step with a nonzero residual.

    lhs is the largest relative excursion outside [s_min, s_max]; rhs the tolerance.
    """
    gap = 1.0 - traj.r2s
    # 1 − R² loses digits to cancellation once it gets this small
    live = gap > SANDWICH_MIN_GAP
    if not np.any(live):
        return BoundCheck(lhs=0.0, rhs=rtol, holds=True)
    quotient = traj.dr2dts[live] / (2.0 * gap[live])
    smin, smax = traj.smins[live], traj.smaxs[live]
    scale = np.maximum(smax, ZERO_TOL)
    excursion = np.maximum(smin - quotient, quotient - smax) / scale
    worst = float(excursion.max())
    return BoundCheck(lhs=worst, rhs=rtol, holds=worst <= rtol)


def check_lemma7(s, t) -> np.ndarray:
    """Elementwise (1 − e^{−ts})/s ≤ min(t, 1/s) for s, t > 0."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if s.shape != t.shape:
        raise InvalidArgumentError("s and t must have the same shape")
    if np.any(s <= 0) or np.any(t <= 0):
        raise InvalidArgumentError("s and t must be positive")
    ts = t * s
    lhs = np.where(ts >= PHI_SMALL, -np.expm1(-ts) / s, t)
    return lhs <= np.minimum(t, 1.0 / s) * (1 + 1e-12)


# ============================================================================
# DOUBLE-DESCENT BOUND CURVE
# ============================================================================

def eq9_row(traj: Trajectory, sigma_m: float, test_point_index: int = 0) -> Eq9Row:
    """Combined bound min(σ̄⁻¹C₁, k̄*)·min(t, 1/s̄_min)·C₂ at one test point.

    C₁ = k′_max·√(n‖Θ‖₂)·‖x* − x_m‖₂ and C₂ = ‖y_μ‖₂.
    """
    if traj.x_test.shape[0] == 0:
        raise InvalidArgumentError("the bound curve needs test points on the trajectory")
    x_star = traj.x_test[test_point_index]
    avg = trajectory_averages(traj, test_point_index)
    c1 = _gradient_constant(traj) * float(np.linalg.norm(x_star - furthest_row(traj.x_train, x_star)))
    gradient_branch = avg.inv_sigma_bar * c1
    if gradient_branch <= avg.kstar_bar:
        first, first_branch = gradient_branch, "sigma_inv"
    else:
        first, first_branch = avg.kstar_bar, "kstar"
    t = traj.t_final
    if avg.smin_bar <= 0 or t <= 1.0 / avg.smin_bar:
        second, second_branch = t, "t"
    else:
        second, second_branch = 1.0 / avg.smin_bar, "smin"
    return Eq9Row(
        sigma_m=sigma_m,
        bound=first * second * traj.y_mu_norm,
        first_branch=first_branch,
        second_branch=second_branch,
    )


def eq9_bound_curve(
    trajectories: Sequence[Trajectory],
    sigma_ms: Sequence[float],
    test_point_index: int = 0,
) -> List[Eq9Row]:
    """One bound row per minimum bandwidth of a σ_m sweep."""
    if len(trajectories) != len(sigma_ms):
        raise InvalidArgumentError("one trajectory is needed per sigma_m")
    return [eq9_row(traj, float(s), test_point_index) for traj, s in zip(trajectories, sigma_ms)]
