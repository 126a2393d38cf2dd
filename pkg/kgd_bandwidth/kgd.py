# File Summary: Kernel gradient descent, R² tracking and the decreasing-bandwidth schedule.

"""
Kernel gradient descent (explicit Euler on function values).

    f⁺  = f  + Δt·K (y − f)
    f*⁺ = f* + Δt·K*(y − f)

kgd_constant iterates this literally. kgd_decreasing_bandwidth lowers σ
geometrically whenever the train-R² rate 2(y−f)ᵀK(y−f)/‖y−ȳ‖² drops below
v_r2, and between two bandwidth changes advances in closed form in the
eigenbasis of K, where m Euler steps multiply each residual coordinate by
(1 − Δt·s)^m. The result is the step-by-step iteration up to rounding.

A Trajectory records one row per step and keeps, for every bandwidth it
visited, the coefficient vector α_s = Δt·Σ(y − f̂) accumulated under it,
so the final predictor μ(x) + Σ_s k(x, X; σ_s)ᵀα_s can be evaluated anywhere.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .data import Dataset
from .errors import DegenerateResponseError, DivergenceError, InvalidArgumentError
from .kernels import kernel_from_distances, kernel_matrix, length_scale, max_pairwise_distance, pairwise_distances
from .models.schema import KernelFamily, KernelSpec, KGDConfig
from .regression import Estimator, FitResult, Prior
from .spectral import SpectralDecomposition, eig_sym_psd

FIRST_CHUNK = 64
MAX_CHUNK = 4096

TRAJECTORY_COLUMNS = ["step", "t", "sigma", "r2", "dr2dt", "residual_norm", "smin"]


@dataclass(frozen=True)
class Segment:
    """A stretch of steps run at one bandwidth."""

    sigma: float
    start: int
    alpha: np.ndarray
    smin: float
    smax: float
    kstar_norms: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Per-step record of a KGD run plus the final fit."""

    times: np.ndarray
    sigmas: np.ndarray
    residual_norms: np.ndarray
    r2s: np.ndarray
    dr2dts: np.ndarray
    smins: np.ndarray
    smaxs: np.ndarray
    segment_ids: np.ndarray
    segments: Tuple[Segment, ...]
    final: FitResult
    x_train: np.ndarray
    x_test: np.ndarray
    prior: Prior
    y_mu_norm: float
    dt: float

    @property
    def steps(self) -> int:
        return self.times.shape[0]

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def sigma_initial(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_final(self) -> float:
        return float(self.sigmas[-1])

    @property
    def n(self) -> int:
        return self.x_train.shape[0]

    @property
    def kstar_norms(self) -> np.ndarray:
        """‖k*(x*_j, X, σ(τ))‖₂ as a (steps × n*) matrix."""
        per_segment = np.stack([seg.kstar_norms for seg in self.segments])
        return per_segment[self.segment_ids]

    def kstar_norm(self, test_index: int) -> np.ndarray:
        if not 0 <= test_index < self.x_test.shape[0]:
            raise InvalidArgumentError(f"test point index {test_index} out of range")
        per_segment = np.array([seg.kstar_norms[test_index] for seg in self.segments])
        return per_segment[self.segment_ids]

    @property
    def shifted_test(self) -> np.ndarray:
        """Final test predictions minus the prior."""
        return self.final.f_test - self.prior(self.x_test)

    def predict_shifted(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        out = np.zeros(X.shape[0])
        for seg in self.segments:
            if np.any(seg.alpha):
                out += kernel_matrix(X, self.x_train, self.final.spec.with_sigma(seg.sigma)) @ seg.alpha
        return out

    def predict(self, X) -> np.ndarray:
        """Evaluate the final KGD predictor at arbitrary covariates."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.predict_shifted(X) + self.prior(X)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": np.arange(self.steps),
                "t": self.times,
                "sigma": self.sigmas,
                "r2": self.r2s,
                "dr2dt": self.dr2dts,
                "residual_norm": self.residual_norms,
                "smin": self.smins,
            },
            columns=TRAJECTORY_COLUMNS,
        )


# ============================================================================
# PRIMITIVES
# ============================================================================

def _total_sum_of_squares(y: np.ndarray) -> float:
    if y.size == 0 or np.ptp(y) == 0:
        raise DegenerateResponseError("response is constant; R² is undefined")
    centered = y - y.mean()
    return float(centered @ centered)


def r2(y, f) -> float:
    """1 − ‖y − f‖²/‖y − ȳ‖²."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape or y.ndim != 1:
        raise InvalidArgumentError(f"shape mismatch: y {y.shape}, f {f.shape}")
    sst = _total_sum_of_squares(y)
    r = y - f
    return 1.0 - float(r @ r) / sst


def r2_rate(y, f, K) -> float:
    """dR²/dt = 2·(y − f)ᵀK(y − f)/‖y − ȳ‖²."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    K = np.asarray(K, dtype=float)
    if y.shape != f.shape or y.ndim != 1 or K.shape != (y.shape[0], y.shape[0]):
        raise InvalidArgumentError(f"shape mismatch: y {y.shape}, f {f.shape}, K {K.shape}")
    sst = _total_sum_of_squares(y)
    r = y - f
    return 2.0 * float(r @ (K @ r)) / sst


def kgd_step(f_train, f_test, K, K_star, y, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """One explicit Euler step on training and test predictions."""
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be positive and finite, got {dt}")
    f_train = np.asarray(f_train, dtype=float)
    f_test = np.asarray(f_test, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if f_train.shape != (n,) or np.shape(K) != (n, n):
        raise InvalidArgumentError(f"shape mismatch: y {y.shape}, f {f_train.shape}, K {np.shape(K)}")
    if np.shape(K_star) != (f_test.shape[0], n):
        raise InvalidArgumentError(f"K_star has shape {np.shape(K_star)}, expected ({f_test.shape[0]}, {n})")
    r = y - f_train
    return f_train + dt * (K @ r), f_test + dt * (K_star @ r)


def step_budget(t_end: float, dt: float) -> int:
    """Number of Euler steps that fit in [0, t_end]."""
    if not (math.isfinite(t_end) and t_end > 0):
        raise InvalidArgumentError(f"time budget must be positive and finite, got {t_end}")
    return int(math.floor(t_end / dt * (1.0 + 1e-9)))


# ============================================================================
# RECORDING
# ============================================================================

class _Recorder:
    """Collects per-step rows and per-bandwidth segments."""

    def __init__(self, dt: float):
        self.dt = dt
        self.rows: List[Tuple[np.ndarray, ...]] = []
        self.segments: List[Segment] = []

    def open_segment(self, sigma: float, start: int, decomp: SpectralDecomposition, K_star: np.ndarray, n: int):
        self.segments.append(
            Segment(
                sigma=sigma,
                start=start,
                alpha=np.zeros(n),
                smin=decomp.s_min,
                smax=decomp.s_max,
                kstar_norms=np.linalg.norm(K_star, axis=1),
            )
        )

    def add_alpha(self, alpha: np.ndarray):
        seg = self.segments[-1]
        self.segments[-1] = Segment(
            sigma=seg.sigma,
            start=seg.start,
            alpha=seg.alpha + alpha,
            smin=seg.smin,
            smax=seg.smax,
            kstar_norms=seg.kstar_norms,
        )

    def record(self, steps: np.ndarray, residual_norms, r2s, rates):
        seg = self.segments[-1]
        count = steps.shape[0]
        if count == 0:
            return
        self.rows.append(
            (
                steps.astype(int),
                np.full(count, seg.sigma),
                np.asarray(residual_norms, dtype=float),
                np.asarray(r2s, dtype=float),
                np.asarray(rates, dtype=float),
                np.full(count, seg.smin),
                np.full(count, seg.smax),
                np.full(count, len(self.segments) - 1),
            )
        )

    def build(self, final: FitResult, data: Dataset, x_test: np.ndarray, prior: Prior, y_mu_norm: float) -> Trajectory:
        cols = [np.concatenate(parts) for parts in zip(*self.rows)]
        steps, sigmas, res, r2s, rates, smins, smaxs, seg_ids = cols
        return Trajectory(
            times=steps * self.dt,
            sigmas=sigmas,
            residual_norms=res,
            r2s=r2s,
            dr2dts=rates,
            smins=smins,
            smaxs=smaxs,
            segment_ids=seg_ids.astype(int),
            segments=tuple(self.segments),
            final=final,
            x_train=data.x,
            x_test=x_test,
            prior=prior,
            y_mu_norm=y_mu_norm,
            dt=self.dt,
        )


def _record_point(rec: _Recorder, step: int, y, f, K, sst: float):
    r = y - f
    rr = float(r @ r)
    rec.record(np.array([step]), [math.sqrt(rr)], [1.0 - rr / sst], [2.0 * float(r @ (K @ r)) / sst])


def _check_finite(values: np.ndarray, step: int):
    if not np.all(np.isfinite(values)):
        raise DivergenceError(
            f"non-finite predictions at step {step}; reduce dt below 2/s_max(K)", step=step
        )


# ============================================================================
# CONSTANT KERNEL
# ============================================================================

def kgd_constant(
    data: Dataset,
    spec: KernelSpec,
    dt: float,
    t_end: float,
    prior: Optional[Prior] = None,
) -> Trajectory:
    """Plain KGD with a fixed kernel, iterated step by step up to t_end."""
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be positive and finite, got {dt}")
    prior = prior if prior is not None else Prior.zero()
    n_steps = step_budget(t_end, dt)
    y = data.y
    sst = _total_sum_of_squares(y)
    x_test = data.test_rows()
    mu_train = prior(data.x)
    mu_test = prior(x_test)

    K = kernel_matrix(data.x, data.x, spec)
    K_star = kernel_matrix(x_test, data.x, spec) if x_test.shape[0] else np.empty((0, data.n))
    decomp = eig_sym_psd(K)

    rec = _Recorder(dt)
    rec.open_segment(spec.sigma, 0, decomp, K_star, data.n)
    f, f_star = mu_train.copy(), mu_test.copy()
    alpha = np.zeros(data.n)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps + 1):
            _record_point(rec, k, y, f, K, sst)
            if k == n_steps:
                break
            alpha += dt * (y - f)
            f, f_star = kgd_step(f, f_star, K, K_star, y, dt)
            _check_finite(f, k + 1)
    rec.add_alpha(alpha)

    final = FitResult(f_train=f, f_test=f_star, estimator=Estimator.KGD, parameter=n_steps * dt, spec=spec)
    return rec.build(final, data, x_test, prior, float(np.linalg.norm(y - mu_train)))


# ============================================================================
# DECREASING BANDWIDTH
# ============================================================================

def _segment_weights(s: np.ndarray, dt: float, m: int) -> np.ndarray:
    """Δt·Σ_{j<m} (1 − Δt·s)^j for every eigenvalue s."""
    ds = dt * s
    w = np.full(s.shape, dt * m)
    mid = (s > 0) & (ds < 1.0)
    w[mid] = -np.expm1(m * np.log1p(-ds[mid])) / s[mid]
    big = ds >= 1.0
    w[big] = (1.0 - np.power(1.0 - ds[big], m)) / s[big]
    return w


class _DecreasingRun:
    """State of one run of the decreasing-bandwidth schedule."""

    def __init__(self, data: Dataset, family: KernelFamily, cfg: KGDConfig, prior: Prior, theta):
        self.data = data
        self.cfg = cfg
        self.prior = prior
        self.family = KernelFamily(family)
        self.theta = theta
        self.y = data.y
        self.sst = _total_sum_of_squares(self.y)
        self.x_test = data.test_rows()
        self.mu_train = prior(data.x)
        self.mu_test = prior(self.x_test)
        self.n_max = step_budget(cfg.t_max, cfg.dt)

        metric = None if theta is None else np.asarray(theta, dtype=float)
        self.d_train = pairwise_distances(data.x, None, metric)
        self.d_test = (
            pairwise_distances(self.x_test, data.x, metric) if self.x_test.shape[0] else np.empty((0, data.n))
        )
        if cfg.sigma0 is None:
            if data.n < 2:
                raise InvalidArgumentError("sigma0 is required when there is a single training row")
            max_distance = max_pairwise_distance(data.x, metric)
        else:
            max_distance = cfg.sigma0
        try:
            self.sigma0, self.sigma_min = cfg.resolve_bandwidths(max_distance)
        except ValueError as e:
            raise InvalidArgumentError(f"Invalid input: {e}")
        self.rec = _Recorder(cfg.dt)
        self._set_sigma(self.sigma0, start=0)

    def _kernel(self, sigma: float) -> np.ndarray:
        return kernel_from_distances(self.family, self.d_train, sigma)

    def _set_sigma(self, sigma: float, start: int, K: Optional[np.ndarray] = None):
        self.sigma = sigma
        self.K = K if K is not None else self._kernel(sigma)
        self.decomp = eig_sym_psd(self.K)
        self.K_star = kernel_from_distances(self.family, self.d_test, sigma)
        self.rec.open_segment(sigma, start, self.decomp, self.K_star, self.data.n)

    def _rate(self, r: np.ndarray, K: np.ndarray) -> float:
        return 2.0 * float(r @ (K @ r)) / self.sst

    def _decrease(self, r: np.ndarray, rate: float, step: int):
        """Shrink σ until the R² rate recovers or σ reaches sigma_min."""
        cfg = self.cfg
        sigma, K = self.sigma, self.K
        iterations = 0
        while rate < cfg.v_r2 and sigma > self.sigma_min:
            iterations += 1
            if iterations > cfg.max_decrease_iterations:
                raise InvalidArgumentError(
                    f"bandwidth decrease at step {step} exceeded {cfg.max_decrease_iterations} iterations; "
                    "check decay and sigma_min"
                )
            sigma = sigma * cfg.decay
            if sigma <= self.sigma_min:
                sigma = self.sigma_min
            K = self._kernel(sigma)
            rate = self._rate(r, K)
        if sigma != self.sigma:
            self._set_sigma(sigma, step, K)

    def _advance(self, k0: int, f: np.ndarray, f_star: np.ndarray):
        """Run Euler steps at the current σ until a stop or decrease event.

        Returns the step index reached, the predictions there and whether the
        run should stop.
        """
        cfg = self.cfg
        s = self.decomp.eigenvalues
        Q = self.decomp.eigenvectors
        c = Q.T @ (self.y - f)
        g = 1.0 - cfg.dt * s
        may_decrease = self.sigma > self.sigma_min

        m0, chunk = 0, FIRST_CHUNK
        while True:
            ms = np.arange(m0, m0 + chunk)
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                coef = np.power(g[None, :], ms[:, None]) * c[None, :]
                sq = coef * coef
                rr = sq.sum(axis=1)
                rates = 2.0 * (sq @ s) / self.sst
            r2s = 1.0 - rr / self.sst
            bad = ~(np.isfinite(rr) & np.isfinite(rates))
            stop = (r2s >= cfg.r2_max) | (k0 + ms >= self.n_max)
            guard = may_decrease & (rates < cfg.v_r2) & (ms > 0)
            events = np.flatnonzero(bad | stop | guard)
            if events.size:
                j = int(events[0])
                if bad[j]:
                    raise DivergenceError(
                        f"non-finite residual at step {k0 + ms[j]}; reduce dt below 2/s_max(K)",
                        step=int(k0 + ms[j]),
                    )
                self.rec.record(k0 + ms[:j], np.sqrt(rr[:j]), r2s[:j], rates[:j])
                m_end, stopped = int(ms[j]), bool(stop[j])
                break
            self.rec.record(k0 + ms, np.sqrt(rr), r2s, rates)
            m0 += chunk
            chunk = min(2 * chunk, MAX_CHUNK)

        if m_end == 0:
            return k0, f, f_star, stopped
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            residual = Q @ (np.power(g, m_end) * c)
            alpha = Q @ (_segment_weights(s, cfg.dt, m_end) * c)
        _check_finite(residual, k0 + m_end)
        self.rec.add_alpha(alpha)
        return k0 + m_end, self.y - residual, f_star + self.K_star @ alpha, stopped

    def run(self) -> Trajectory:
        cfg = self.cfg
        f, f_star = self.mu_train.copy(), self.mu_test.copy()
        k = 0
        while True:
            r = self.y - f
            if 1.0 - float(r @ r) / self.sst >= cfg.r2_max or k >= self.n_max:
                break
            rate = self._rate(r, self.K)
            if rate < cfg.v_r2 and self.sigma > self.sigma_min:
                self._decrease(r, rate, k)
            k, f, f_star, stopped = self._advance(k, f, f_star)
            if stopped:
                break
        _record_point(self.rec, k, self.y, f, self.K, self.sst)

        spec = KernelSpec(family=self.family, sigma=self.sigma, theta=self.theta)
        final = FitResult(f_train=f, f_test=f_star, estimator=Estimator.KGD, parameter=k * cfg.dt, spec=spec)
        return self.rec.build(final, self.data, self.x_test, self.prior, float(np.linalg.norm(self.y - self.mu_train)))


def kgd_decreasing_bandwidth(
    data: Dataset,
    family: KernelFamily,
    cfg: Optional[KGDConfig] = None,
    prior: Optional[Prior] = None,
    theta=None,
) -> Trajectory:
    """Kernel gradient descent with a decreasing bandwidth.

    Each step, while the train-R² rate is below cfg.v_r2 and σ is above the
    minimum, σ is multiplied by cfg.decay; K* is rebuilt only when σ changed.
    The run stops once train R² reaches cfg.r2_max or time reaches cfg.t_max.

    Args:
        data: training rows and optional test rows
        family: kernel family
        cfg: schedule parameters, library defaults when omitted
        prior: prior mean, zero by default
        theta: metric matrix, identity when omitted

    Returns:
        The recorded Trajectory; its final field holds both prediction vectors.
    """
    cfg = cfg if cfg is not None else KGDConfig()
    prior = prior if prior is not None else Prior.zero()
    if theta is not None:
        try:
            KernelSpec(family=family, sigma=1.0, theta=theta)
        except Exception as e:
            raise InvalidArgumentError(f"Invalid input: {e}")
    return _DecreasingRun(data, family, cfg, prior, theta).run()


# ============================================================================
# BANDWIDTH PROFILE
# ============================================================================

PROFILE_COLUMNS = ["sigma", "length_scale", "start_step", "end_step", "r2_start", "r2_end", "r2_gain"]


def bandwidth_r2_profile(traj: Trajectory) -> pd.DataFrame:
    """Train R² gained while each visited bandwidth was active."""
    rows = []
    last = traj.steps - 1
    family = traj.final.spec.family
    for idx, seg in enumerate(traj.segments):
        start = seg.start
        end = traj.segments[idx + 1].start if idx + 1 < len(traj.segments) else last
        rows.append(
            {
                "sigma": seg.sigma,
                "length_scale": length_scale(family, seg.sigma),
                "start_step": start,
                "end_step": end,
                "r2_start": float(traj.r2s[start]),
                "r2_end": float(traj.r2s[end]),
                "r2_gain": float(traj.r2s[end] - traj.r2s[start]),
            }
        )
    return pd.DataFrame(rows, columns=PROFILE_COLUMNS)


def largest_r2_jump(traj: Trajectory, band: float = 2.0) -> Optional[float]:
    """Bandwidth at which the steepest rise of train R² sets in.

    Train R² gained is summed over every band of length scales (ℓ/band, ℓ]
    whose upper edge ℓ was reached by a decrease; the σ at the upper edge of
    the best band is returned.
    """
    if not (math.isfinite(band) and band > 1.0):
        raise InvalidArgumentError(f"band must be a finite ratio above 1, got {band}")
    profile = bandwidth_r2_profile(traj)
    if len(profile) < 2:
        return None
    scales = profile["length_scale"].to_numpy()
    cumulative = np.concatenate([[0.0], np.cumsum(profile["r2_gain"].to_numpy())])
    # segments are visited in strictly decreasing σ, so each band is a contiguous run
    upper = np.arange(1, len(profile))
    ends = np.searchsorted(-scales, -scales[upper] / band, side="left")
    gains = cumulative[ends] - cumulative[upper]
    return float(profile["sigma"].iloc[upper[int(np.argmax(gains))]])
