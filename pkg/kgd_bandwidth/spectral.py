# File Summary: Symmetric eigendecomposition and spectral matrix functions.

"""
Spectral helpers shared by every closed-form estimator.

One eigendecomposition K = QΛQᵀ yields the matrix exponential, the ridge
resolvent and the singular-safe (I − exp(−tK))K⁻¹.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh

from .errors import InvalidArgumentError, NotPSDError

SYMMETRY_RTOL = 1e-10
CLAMP_RTOL = 1e-8
PHI_SMALL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending, clamped at 0) and orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def s_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def s_max(self) -> float:
        return float(self.eigenvalues[-1])

    def apply(self, values: np.ndarray, v: Optional[np.ndarray] = None) -> np.ndarray:
        """Return Q·diag(values)·Qᵀ, or its product with v when v is given."""
        Q = self.eigenvectors
        if v is None:
            return (Q * values) @ Q.T
        return Q @ (values * (Q.T @ v))


def _check_time(t: float, name: str = "t") -> float:
    try:
        value = float(t)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"{name} must be a number, got {t!r}")
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be positive and finite, got {t}")
    return value


def eig_sym_psd(K) -> SpectralDecomposition:
    """Eigendecompose a symmetric positive semi-definite matrix.

    Eigenvalues in [−1e−8·s_max, 0) are rounding noise and are set to 0;
    anything more negative raises NotPSDError.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise InvalidArgumentError("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(K).max())) if K.size else 1.0
    if np.abs(K - K.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise InvalidArgumentError("matrix is not symmetric")

    vals, vecs = eigh(K)
    s_max = max(float(vals[-1]), 0.0) if vals.size else 0.0
    floor = -CLAMP_RTOL * s_max
    if vals.size and vals[0] < floor:
        raise NotPSDError(f"eigenvalue {vals[0]:.3e} below clamp threshold {floor:.3e}")
    vals = np.where(vals < 0.0, 0.0, vals)
    return SpectralDecomposition(eigenvalues=vals, eigenvectors=vecs)


def phi(s: np.ndarray, t: float) -> np.ndarray:
    """φ_t(s) = (1 − e^{−ts})/s, with φ_t(0) = t."""
    s = np.asarray(s, dtype=float)
    ts = t * s
    out = np.full(s.shape, float(t))
    big = ts >= PHI_SMALL
    out[big] = t * (-np.expm1(-ts[big])) / ts[big]
    return out


def apply_phi_t(decomp: SpectralDecomposition, t: float) -> np.ndarray:
    """Q·diag(φ_t(s))·Qᵀ, equal to (I − exp(−tK))K⁻¹ for invertible K."""
    t = _check_time(t)
    return decomp.apply(phi(decomp.eigenvalues, t))


def ridge_resolvent_apply(decomp: SpectralDecomposition, lam: float, v) -> np.ndarray:
    """(K + λI)⁻¹·v computed spectrally."""
    lam = _check_time(lam, "lambda")
    v = np.asarray(v, dtype=float)
    if v.shape != (decomp.n,):
        raise InvalidArgumentError(f"vector has shape {v.shape}, expected ({decomp.n},)")
    return decomp.apply(1.0 / (decomp.eigenvalues + lam), v)


def matrix_exp_neg(decomp: SpectralDecomposition, t: float) -> np.ndarray:
    """exp(−tK) = Q·diag(e^{−ts})·Qᵀ."""
    t = _check_time(t)
    return decomp.apply(np.exp(-t * decomp.eigenvalues))
