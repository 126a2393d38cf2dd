# File Summary: Constant-bandwidth KRR baselines selected by GCV grid search and MML.

"""
Hyper-parameter selection for kernel ridge regression.

GCV scores every (λ, σ) cell of a log grid; one eigendecomposition per σ
serves every λ. MML maximizes the Gaussian-process evidence with noise
variance λ by Nelder-Mead in (log λ, log σ) from several seeds.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .data import Dataset
from .errors import InvalidArgumentError, KernelRegressionError, SelectionFailedError
from .kernels import kernel_from_distances, kernel_matrix, max_pairwise_distance, pairwise_distances
from .models.schema import HyperGrid, KernelFamily, KernelSpec, SelectionMethod, SelectionResult
from .spectral import SpectralDecomposition, eig_sym_psd

LOG_2PI = math.log(2.0 * math.pi)

MML_LAMBDA_BOUNDS = (1e-10, 1e6)
MML_SIGMA_WIDEN = 1e3
MML_MAXITER = 500
MML_TOL = 1e-6


def _check_lambda(lam: float) -> float:
    try:
        value = float(lam)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"lambda must be a number, got {lam!r}")
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"lambda must be positive and finite, got {lam}")
    return value


def _check_response(decomp: SpectralDecomposition, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (decomp.n,):
        raise InvalidArgumentError(f"response has shape {y.shape}, expected ({decomp.n},)")
    return y


# ============================================================================
# GCV
# ============================================================================

def gcv_score_spectral(decomp: SpectralDecomposition, y, lam: float) -> float:
    """Craven-Wahba GCV from an existing decomposition of K.

    With H = K(K + λI)⁻¹ the residual operator I − H has eigenvalues
    λ/(s + λ), so score = (‖(I − H)y‖²/n) / (tr(I − H)/n)².
    """
    lam = _check_lambda(lam)
    y = _check_response(decomp, y)
    shrink = lam / (decomp.eigenvalues + lam)
    coef = shrink * (decomp.eigenvectors.T @ y)
    n = decomp.n
    return float(coef @ coef / n) / float(shrink.sum() / n) ** 2


def gcv_score(data: Dataset, spec: KernelSpec, lam: float) -> float:
    return gcv_score_spectral(eig_sym_psd(kernel_matrix(data.x, data.x, spec)), data.y, lam)


def _resolve_grid(data: Dataset, grid: Optional[HyperGrid], theta) -> HyperGrid:
    if grid is not None:
        return grid
    if data.n < 2:
        raise InvalidArgumentError("a default grid needs at least two training rows")
    return HyperGrid.default_for(max_pairwise_distance(data.x, theta))


def gcv_select(
    data: Dataset,
    family: KernelFamily,
    grid: Optional[HyperGrid] = None,
    theta=None,
) -> SelectionResult:
    """Grid search for the GCV minimum.

    Ties go to the larger λ, then the larger σ.

    Args:
        data: training rows
        family: kernel family
        grid: candidate values, HyperGrid.default_for(D) when omitted
        theta: metric matrix, identity when omitted

    Returns:
        SelectionResult with the minimizing cell and its score.
    """
    metric = None if theta is None else np.asarray(theta, dtype=float)
    grid = _resolve_grid(data, grid, metric)
    distances = pairwise_distances(data.x, None, metric)

    lambdas = sorted(grid.lambdas, reverse=True)
    sigmas = sorted(grid.sigmas, reverse=True)
    scores = np.full((len(lambdas), len(sigmas)), np.inf)
    for j, sigma in enumerate(sigmas):
        try:
            decomp = eig_sym_psd(kernel_from_distances(family, distances, sigma))
        except KernelRegressionError:
            continue
        for i, lam in enumerate(lambdas):
            with np.errstate(all="ignore"):
                scores[i, j] = gcv_score_spectral(decomp, data.y, lam)

    best: Optional[Tuple[int, int]] = None
    for i in range(len(lambdas)):
        for j in range(len(sigmas)):
            value = scores[i, j]
            if not math.isfinite(value):
                continue
            if best is None or value < scores[best]:
                best = (i, j)
    if best is None:
        raise SelectionFailedError(f"GCV score is non-finite on every cell of the {KernelFamily(family).value} grid")
    i, j = best
    return SelectionResult(method=SelectionMethod.GCV, lambda_=lambdas[i], sigma=sigmas[j], score=float(scores[i, j]))


# ============================================================================
# MARGINAL LIKELIHOOD
# ============================================================================

def log_marginal_likelihood_spectral(decomp: SpectralDecomposition, y, lam: float) -> float:
    """−½yᵀ(K + λI)⁻¹y − ½log det(K + λI) − (n/2)log 2π."""
    lam = _check_lambda(lam)
    y = _check_response(decomp, y)
    shifted = decomp.eigenvalues + lam
    coef = decomp.eigenvectors.T @ y
    quad = float(np.sum(coef * coef / shifted))
    return -0.5 * quad - 0.5 * float(np.sum(np.log(shifted))) - 0.5 * decomp.n * LOG_2PI


def log_marginal_likelihood(data: Dataset, spec: KernelSpec, lam: float) -> float:
    return log_marginal_likelihood_spectral(eig_sym_psd(kernel_matrix(data.x, data.x, spec)), data.y, lam)


def default_mml_seeds(max_distance: float) -> List[Tuple[float, float]]:
    """3×3 log-spaced (λ, σ) starting points tied to the data diameter."""
    lambdas = [1e-3, 1e-1, 1e1]
    sigmas = [max_distance * 10.0 ** e for e in (-5.0 / 3.0, -1.0, -1.0 / 3.0)]
    return [(lam, sigma) for lam in lambdas for sigma in sigmas]


def _validate_seeds(seeds: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out = []
    for pair in seeds:
        if len(pair) != 2:
            raise InvalidArgumentError(f"seed {pair!r} is not a (lambda, sigma) pair")
        lam, sigma = float(pair[0]), float(pair[1])
        if not (math.isfinite(lam) and math.isfinite(sigma) and lam > 0 and sigma > 0):
            raise InvalidArgumentError(f"seed {pair!r} must be positive and finite")
        out.append((lam, sigma))
    if not out:
        raise InvalidArgumentError("at least one MML seed is required")
    return out


def mml_select(
    data: Dataset,
    family: KernelFamily,
    seeds: Optional[Sequence[Tuple[float, float]]] = None,
    theta=None,
) -> SelectionResult:
    """Maximize the log marginal likelihood from every seed and keep the best end point.

    Searches log λ ∈ [log 1e−10, log 1e6] and log σ within three decades
    beyond the smallest and largest seed bandwidth.
    """
    metric = None if theta is None else np.asarray(theta, dtype=float)
    if seeds is None:
        if data.n < 2:
            raise InvalidArgumentError("MML seeds are required when there is a single training row")
        seeds = default_mml_seeds(max_pairwise_distance(data.x, metric))
    seeds = _validate_seeds(seeds)
    distances = pairwise_distances(data.x, None, metric)
    y = data.y

    seed_sigmas = [s for _, s in seeds]
    bounds = [
        (math.log(MML_LAMBDA_BOUNDS[0]), math.log(MML_LAMBDA_BOUNDS[1])),
        (math.log(min(seed_sigmas) / MML_SIGMA_WIDEN), math.log(max(seed_sigmas) * MML_SIGMA_WIDEN)),
    ]

    def objective(z: np.ndarray) -> float:
        lam, sigma = math.exp(z[0]), math.exp(z[1])
        try:
            with np.errstate(all="ignore"):
                decomp = eig_sym_psd(kernel_from_distances(family, distances, sigma))
                value = log_marginal_likelihood_spectral(decomp, y, lam)
        except KernelRegressionError:
            return np.inf
        return -value if math.isfinite(value) else np.inf

    best: Optional[Tuple[float, float, float]] = None
    for lam0, sigma0 in seeds:
        start = np.array([math.log(lam0), math.log(sigma0)])
        start = np.clip(start, [b[0] for b in bounds], [b[1] for b in bounds])
        try:
            res = minimize(
                objective,
                start,
                method="Nelder-Mead",
                bounds=bounds,
                options={"maxiter": MML_MAXITER, "xatol": MML_TOL, "fatol": MML_TOL},
            )
        except (ValueError, FloatingPointError):
            continue
        if not np.isfinite(res.fun):
            continue
        lml = -float(res.fun)
        if best is None or lml > best[0]:
            best = (lml, math.exp(res.x[0]), math.exp(res.x[1]))

    if best is None:
        raise SelectionFailedError(f"MML optimization failed from every seed for {KernelFamily(family).value}")
    lml, lam, sigma = best
    return SelectionResult(method=SelectionMethod.MML, lambda_=lam, sigma=sigma, score=lml)
