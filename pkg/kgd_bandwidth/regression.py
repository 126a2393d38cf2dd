# File Summary: Closed-form kernel ridge regression and kernel gradient flow.

"""
Closed-form estimators with prior shifting.

Both estimators fit the shifted response y_μ = y − μ(X) and add μ back on
return, so predictions shrink toward the prior rather than toward zero.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .data import Dataset
from .errors import InvalidArgumentError
from .kernels import kernel_matrix
from .models.schema import KernelSpec, SingleBound
from .spectral import SpectralDecomposition, eig_sym_psd, phi, ridge_resolvent_apply


def _zero(row: np.ndarray) -> float:
    return 0.0


@dataclass(frozen=True)
class Prior:
    """Prior mean function μ evaluated row by row."""

    mu: Callable[[np.ndarray], float] = field(default=_zero)
    name: str = "zero"

    @classmethod
    def zero(cls) -> "Prior":
        return cls()

    @classmethod
    def constant(cls, value: float) -> "Prior":
        return cls(mu=lambda row: value, name=f"constant({value})")

    @property
    def is_zero(self) -> bool:
        return self.mu is _zero

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if self.is_zero:
            return np.zeros(X.shape[0])
        values = np.array([float(self.mu(row)) for row in X], dtype=float)
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError(f"prior {self.name} is not finite on all rows")
        return values


class Estimator(str, Enum):
    KRR = "krr"
    KGF = "kgf"
    KGD = "kgd"


@dataclass(frozen=True)
class FitResult:
    """Prior-restored predictions on the training and test rows."""

    f_train: np.ndarray
    f_test: np.ndarray
    estimator: Estimator
    parameter: float
    spec: KernelSpec

    def __post_init__(self):
        if not (np.all(np.isfinite(self.f_train)) and np.all(np.isfinite(self.f_test))):
            raise InvalidArgumentError(f"{self.estimator.value} produced non-finite predictions")


def _resolve_prior(prior: Optional[Prior]) -> Prior:
    return prior if prior is not None else Prior.zero()


def _decompose(data: Dataset, spec: KernelSpec, decomp: Optional[SpectralDecomposition]):
    K = kernel_matrix(data.x, data.x, spec)
    return K, decomp if decomp is not None else eig_sym_psd(K)


def krr_fit(
    data: Dataset,
    spec: KernelSpec,
    lam: float,
    prior: Optional[Prior] = None,
    decomp: Optional[SpectralDecomposition] = None,
) -> FitResult:
    """Kernel ridge regression, [K; K*](K + λI)⁻¹y_μ + μ.

    Args:
        data: training rows and optional test rows
        spec: kernel at a fixed bandwidth
        lam: ridge penalty λ > 0
        prior: prior mean, zero by default
        decomp: precomputed decomposition of K, shared across λ sweeps

    Returns:
        FitResult with prior-restored predictions.
    """
    prior = _resolve_prior(prior)
    K, decomp = _decompose(data, spec, decomp)
    mu_train = prior(data.x)
    alpha = ridge_resolvent_apply(decomp, lam, data.y - mu_train)
    f_train = K @ alpha + mu_train
    x_test = data.test_rows()
    if x_test.shape[0]:
        f_test = kernel_matrix(x_test, data.x, spec) @ alpha + prior(x_test)
    else:
        f_test = np.empty(0)
    return FitResult(f_train=f_train, f_test=f_test, estimator=Estimator.KRR, parameter=float(lam), spec=spec)


def kgf_fit(
    data: Dataset,
    spec: KernelSpec,
    t: float,
    prior: Optional[Prior] = None,
    decomp: Optional[SpectralDecomposition] = None,
) -> FitResult:
    """Kernel gradient flow at time t.

    Training rows get (I − exp(−tK))y_μ; test rows get K*·φ_t(K)·y_μ.
    """
    if not (math.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"t must be positive and finite, got {t}")
    prior = _resolve_prior(prior)
    _, decomp = _decompose(data, spec, decomp)
    mu_train = prior(data.x)
    y_mu = data.y - mu_train
    f_train = decomp.apply(-np.expm1(-t * decomp.eigenvalues), y_mu) + mu_train
    x_test = data.test_rows()
    if x_test.shape[0]:
        coef = decomp.apply(phi(decomp.eigenvalues, t), y_mu)
        f_test = kernel_matrix(x_test, data.x, spec) @ coef + prior(x_test)
    else:
        f_test = np.empty(0)
    return FitResult(f_train=f_train, f_test=f_test, estimator=Estimator.KGF, parameter=float(t), spec=spec)


def _single_point(data: Dataset, spec: KernelSpec, prior: Optional[Prior], x_star):
    prior = _resolve_prior(prior)
    x_star = np.asarray(x_star, dtype=float).reshape(1, -1)
    if x_star.shape[1] != data.p:
        raise InvalidArgumentError(f"x_star has {x_star.shape[1]} columns, expected {data.p}")
    kstar = kernel_matrix(x_star, data.x, spec)[0]
    _, decomp = _decompose(data, spec, None)
    y_mu = data.y - prior(data.x)
    return kstar, decomp, y_mu


def _min_inverse(cap: float, s_min: float) -> float:
    return cap if s_min <= 0 else min(cap, 1.0 / s_min)


def kgf_single_bound(data: Dataset, spec: KernelSpec, t: float, prior: Optional[Prior], x_star) -> SingleBound:
    """KGF prediction at x_star (prior-shifted) with ‖k*‖₂·min(t, 1/s_min)·‖y_μ‖₂."""
    if not (math.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"t must be positive and finite, got {t}")
    kstar, decomp, y_mu = _single_point(data, spec, prior, x_star)
    prediction = float(kstar @ decomp.apply(phi(decomp.eigenvalues, t), y_mu))
    bound = float(np.linalg.norm(kstar)) * _min_inverse(t, decomp.s_min) * float(np.linalg.norm(y_mu))
    return SingleBound(prediction=prediction, bound=bound)


def krr_single_bound(data: Dataset, spec: KernelSpec, lam: float, prior: Optional[Prior], x_star) -> SingleBound:
    """KRR prediction at x_star (prior-shifted) with ‖k*‖₂·min(1/λ, 1/s_min)·‖y_μ‖₂."""
    kstar, decomp, y_mu = _single_point(data, spec, prior, x_star)
    prediction = float(kstar @ ridge_resolvent_apply(decomp, lam, y_mu))
    bound = float(np.linalg.norm(kstar)) * _min_inverse(1.0 / lam, decomp.s_min) * float(np.linalg.norm(y_mu))
    return SingleBound(prediction=prediction, bound=bound)
