# File Summary: Kernel profiles, kernel matrices and derivative bounds.

"""
Translational-invariant kernels k(x, x', σ) = g(‖x − x'‖_Θ, σ).

Profiles, with d the Θ-weighted distance:

    laplace   exp(−d/σ)
    matern32  (1 + √3·d/σ)·exp(−√3·d/σ)
    matern52  (1 + √5·d/σ + 5d²/(3σ²))·exp(−√5·d/σ)
    gaussian  exp(−d²/(2σ))
    cauchy    (1 + d²/σ²)⁻¹

The Gaussian keeps σ (not σ²) in its denominator. The Matérn 5/2 quadratic
term uses the standard 5d²/(3σ²); the variant 5d²/σ exceeds 1 and loses
monotonicity and positive semi-definiteness for σ > 1/2.

A general metric Θ is handled by mapping rows through Θ^{1/2}, after which
every family only sees Euclidean distances.
"""

import math
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import InvalidArgumentError
from .models.schema import KernelDerivativeBound, KernelFamily, KernelSpec

ZERO_DISTANCE = 1e-14

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)

# sup |g'(u)| for u = d/σ; the Gaussian entry depends on σ and is handled separately.
_MATERN52_ARGMAX = (5.0 + SQRT5) / 10.0
K_PRIME_MAX = {
    KernelFamily.LAPLACE: 1.0,
    KernelFamily.MATERN32: SQRT3 / math.e,
    KernelFamily.MATERN52: (5.0 / 3.0)
    * _MATERN52_ARGMAX
    * (1.0 + SQRT5 * _MATERN52_ARGMAX)
    * math.exp(-SQRT5 * _MATERN52_ARGMAX),
    KernelFamily.CAUCHY: 9.0 / (8.0 * SQRT3),
}


def _profile(family: KernelFamily, d: np.ndarray, sigma: float) -> np.ndarray:
    if family == KernelFamily.LAPLACE:
        return np.exp(-d / sigma)
    if family == KernelFamily.MATERN32:
        u = SQRT3 * d / sigma
        return (1.0 + u) * np.exp(-u)
    if family == KernelFamily.MATERN52:
        u = SQRT5 * d / sigma
        return (1.0 + u + u * u / 3.0) * np.exp(-u)
    if family == KernelFamily.GAUSSIAN:
        return np.exp(-(d * d) / (2.0 * sigma))
    if family == KernelFamily.CAUCHY:
        r = d / sigma
        return 1.0 / (1.0 + r * r)
    raise InvalidArgumentError(f"Unknown kernel family: {family}")


def kernel_derivative_bound(family: KernelFamily, sigma: Optional[float] = None) -> KernelDerivativeBound:
    """Return sup |g'(u)|.

    The Gaussian profile written in u = d/σ is exp(−σu²/2), whose derivative
    peaks at √σ·e^{−1/2}; pass the largest bandwidth a trajectory visits.
    """
    family = KernelFamily(family)
    if family == KernelFamily.GAUSSIAN:
        if sigma is None or not sigma > 0:
            raise InvalidArgumentError("the gaussian derivative bound needs a positive sigma")
        return KernelDerivativeBound(family=family, k_prime_max=math.sqrt(sigma) * math.exp(-0.5))
    return KernelDerivativeBound(family=family, k_prime_max=K_PRIME_MAX[family])


def length_scale(family: KernelFamily, sigma):
    """Distance over which the kernel decays, in the units of the covariates.

    Every profile is a function of d/σ except the Gaussian, whose σ is a
    squared length; its length scale is √σ.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~np.isfinite(sigma)) or np.any(sigma <= 0):
        raise InvalidArgumentError("sigma must be positive and finite")
    if KernelFamily(family) == KernelFamily.GAUSSIAN:
        sigma = np.sqrt(sigma)
    return sigma.item() if sigma.ndim == 0 else sigma


def kernel_value(spec: Union[KernelSpec, dict], d: float) -> float:
    """Evaluate k at a single (already Θ-weighted) distance.

    spec may also be a plain mapping such as {"family": "gaussian", "sigma": 2.0}.
    """
    if not isinstance(spec, KernelSpec):
        try:
            spec = KernelSpec.model_validate(spec)
        except ValueError as e:
            raise InvalidArgumentError(f"Invalid input: {e}")
    if not (math.isfinite(spec.sigma) and spec.sigma > 0):
        raise InvalidArgumentError(f"sigma must be positive and finite, got {spec.sigma}")
    if not math.isfinite(d) or d < 0:
        raise InvalidArgumentError(f"distance must be finite and non-negative, got {d}")
    if d < ZERO_DISTANCE:
        d = 0.0
    return _profile(spec.family, np.array([d], dtype=float), spec.sigma).item()


def _as_rows(X, name: str) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def _metric_root(theta: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(theta)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _transform(X: np.ndarray, theta: Optional[np.ndarray]) -> np.ndarray:
    if theta is None:
        return X
    return X @ _metric_root(theta)


def pairwise_distances(X, Z=None, theta=None) -> np.ndarray:
    """Θ-weighted distances between rows; symmetric fill when Z is omitted."""
    Xa = _as_rows(X, "X")
    p = Xa.shape[1]
    metric = None if theta is None else np.asarray(theta, dtype=float)
    if metric is not None and metric.shape != (p, p):
        raise InvalidArgumentError(f"theta shape {metric.shape} does not match {p} columns")
    Xt = _transform(Xa, metric)
    if Z is None:
        if Xt.shape[0] == 1:
            return np.zeros((1, 1))
        d = squareform(pdist(Xt))
    else:
        Za = _as_rows(Z, "Z")
        if Za.shape[1] != p:
            raise InvalidArgumentError(f"column mismatch: X has {p}, Z has {Za.shape[1]}")
        d = cdist(Xt, _transform(Za, metric))
    d[d < ZERO_DISTANCE] = 0.0
    return d


def kernel_from_distances(family: KernelFamily, d: np.ndarray, sigma: float) -> np.ndarray:
    """Apply a profile to precomputed distances (reused across bandwidths)."""
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidArgumentError(f"sigma must be positive and finite, got {sigma}")
    return _profile(KernelFamily(family), d, sigma)


def kernel_matrix(X, Z, spec: KernelSpec) -> np.ndarray:
    """Return K with K[i, j] = k(‖X_i − Z_j‖_Θ).

    Passing Z=None (or Z is X) builds a symmetric matrix with unit diagonal.
    """
    Xa = _as_rows(X, "X")
    try:
        theta = None if spec.theta is None else spec.theta_matrix(Xa.shape[1])
    except ValueError as e:
        raise InvalidArgumentError(str(e))
    symmetric = Z is None or Z is X
    d = pairwise_distances(Xa, None if symmetric else Z, theta)
    return _profile(spec.family, d, spec.sigma)


def max_pairwise_distance(X, theta=None) -> float:
    """Largest Θ-weighted distance between two rows of X."""
    Xa = _as_rows(X, "X")
    if Xa.shape[0] < 2:
        raise InvalidArgumentError("max_pairwise_distance needs at least two rows")
    metric = None if theta is None else np.asarray(theta, dtype=float)
    if metric is not None and metric.shape != (Xa.shape[1], Xa.shape[1]):
        raise InvalidArgumentError(f"theta shape {metric.shape} does not match {Xa.shape[1]} columns")
    return float(pdist(_transform(Xa, metric)).max())


def theta_spectral_norm(theta) -> float:
    """‖Θ‖₂, the largest eigenvalue of the metric matrix."""
    if theta is None:
        return 1.0
    return float(np.linalg.eigvalsh(np.asarray(theta, dtype=float)).max())
