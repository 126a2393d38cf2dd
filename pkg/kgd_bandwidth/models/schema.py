# File Summary: Centralized pydantic models for configs, results and reports.

"""
Centralized schemas for kgd-bandwidth.

Configuration inputs and result records are pydantic models; array containers
(datasets, decompositions, trajectories) live next to the code that builds them.
"""

import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ============================================================================
# KERNELS
# ============================================================================

class KernelFamily(str, Enum):
    """Translational-invariant kernel families, keyed by their CLI id."""
    LAPLACE = "laplace"
    MATERN32 = "matern32"
    MATERN52 = "matern52"
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


class KernelSpec(BaseModel):
    """Kernel family, bandwidth and metric matrix Θ (identity when omitted)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    family: KernelFamily = Field(..., description="Kernel family")
    sigma: float = Field(..., gt=0, description="Bandwidth, in the units of the covariates")
    theta: Optional[List[List[float]]] = Field(
        None, description="Symmetric positive-definite metric matrix; None means identity"
    )

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v):
        if v is None:
            return v
        m = np.asarray(v, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("theta must be a non-empty square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("theta must be finite")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValueError("theta must be symmetric")
        if np.linalg.eigvalsh(m).min() <= 0:
            raise ValueError("theta must be positive definite")
        return v

    def with_sigma(self, sigma: float) -> "KernelSpec":
        """Return the same kernel at another bandwidth."""
        return KernelSpec(family=self.family, sigma=sigma, theta=self.theta)

    def theta_matrix(self, p: int) -> np.ndarray:
        if self.theta is None:
            return np.eye(p)
        m = np.asarray(self.theta, dtype=float)
        if m.shape != (p, p):
            raise ValueError(f"theta is {m.shape[0]}x{m.shape[1]} but the data has {p} columns")
        return m


class KernelDerivativeBound(BaseModel):
    """Upper bound on |k'(u)| for u = d/σ."""
    family: KernelFamily = Field(..., description="Kernel family")
    k_prime_max: float = Field(..., ge=0, description="Supremum of |k'(u)| over u >= 0")


# ============================================================================
# KERNEL GRADIENT DESCENT
# ============================================================================

class KGDConfig(BaseModel):
    """Inputs of kernel gradient descent with decreasing bandwidth."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    dt: float = Field(0.01, gt=0, description="Euler step size")
    v_r2: float = Field(0.05, ge=0, description="Minimum rate of train R² increase")
    sigma0: Optional[float] = Field(None, gt=0, description="Initial bandwidth; None means max pairwise distance")
    sigma_min: Optional[float] = Field(None, gt=0, description="Minimum allowed bandwidth")
    sigma_min_ratio: float = Field(
        1e-4, gt=0, le=1, description="sigma_min as a fraction of sigma0 when sigma_min is None"
    )
    r2_max: float = Field(0.99, gt=0, le=1, description="Stop once train R² reaches this value")
    t_max: float = Field(1e4, gt=0, description="Hard training-time budget")
    decay: float = Field(0.99, gt=0, lt=1, description="Geometric bandwidth decay factor")
    max_decrease_iterations: int = Field(10_000, ge=1, description="Cap on bandwidth decreases per step")

    @model_validator(mode="after")
    def check_bandwidth_order(self):
        if self.sigma0 is not None and self.sigma_min is not None and self.sigma_min > self.sigma0:
            raise ValueError("sigma_min must not exceed sigma0")
        return self

    def resolve_bandwidths(self, max_distance: float) -> Tuple[float, float]:
        """Return (sigma0, sigma_min) with defaults filled from the data scale."""
        sigma0 = self.sigma0 if self.sigma0 is not None else max_distance
        sigma_min = self.sigma_min if self.sigma_min is not None else self.sigma_min_ratio * sigma0
        if not (sigma0 > 0 and math.isfinite(sigma0)):
            raise ValueError(f"initial bandwidth must be positive and finite, got {sigma0}")
        if sigma_min > sigma0:
            raise ValueError(f"sigma_min={sigma_min} exceeds sigma0={sigma0}")
        return sigma0, sigma_min


# ============================================================================
# REGRESSION
# ============================================================================

class SingleBound(BaseModel):
    """Prior-shifted prediction at one covariate and its a priori bound."""
    prediction: float = Field(..., description="Prior-shifted prediction f̂_μ(x*)")
    bound: float = Field(..., ge=0, description="Right-hand side of the bound")

    @property
    def holds(self) -> bool:
        return abs(self.prediction) <= self.bound * (1 + 1e-10) + 1e-12


# ============================================================================
# SELECTION
# ============================================================================

class SelectionMethod(str, Enum):
    GCV = "gcv"
    MML = "mml"


class HyperGrid(BaseModel):
    """Log-spaced candidate values of λ and σ."""
    model_config = ConfigDict(allow_inf_nan=False)

    lambdas: List[float] = Field(..., min_length=1, description="Regularization candidates")
    sigmas: List[float] = Field(..., min_length=1, description="Bandwidth candidates")

    @field_validator("lambdas", "sigmas")
    @classmethod
    def validate_log_spacing(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("grid values must be positive")
        if len(v) >= 3:
            steps = np.diff(np.log(np.asarray(v, dtype=float)))
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-9):
                raise ValueError("grid values must be log-uniformly spaced")
        return v

    @classmethod
    def log_spaced(
        cls,
        lambda_range: Tuple[float, float],
        sigma_range: Tuple[float, float],
        n_lambda: int = 30,
        n_sigma: int = 30,
    ) -> "HyperGrid":
        return cls(
            lambdas=np.geomspace(lambda_range[0], lambda_range[1], n_lambda).tolist(),
            sigmas=np.geomspace(sigma_range[0], sigma_range[1], n_sigma).tolist(),
        )

    @classmethod
    def default_for(cls, max_distance: float) -> "HyperGrid":
        """30×30 grid over λ ∈ [1e-4, 1e2] and σ ∈ [1e-2·D, D]."""
        return cls.log_spaced((1e-4, 1e2), (1e-2 * max_distance, max_distance))


class SelectionResult(BaseModel):
    """Selected hyper-parameters and the criterion value at the selection."""
    model_config = ConfigDict(populate_by_name=True)

    method: SelectionMethod = Field(..., description="Selection criterion")
    lambda_: float = Field(..., alias="lambda", gt=0, description="Selected regularization")
    sigma: float = Field(..., gt=0, description="Selected bandwidth")
    score: float = Field(..., description="GCV value (minimized) or log marginal likelihood (maximized)")


# ============================================================================
# STATISTICS
# ============================================================================

class Alternative(str, Enum):
    GREATER = "greater"
    LESS = "less"
    TWO_SIDED = "two-sided"


class WilcoxonResult(BaseModel):
    """Outcome of a Wilcoxon signed-rank test."""
    statistic: float = Field(..., ge=0, description="W+, the rank sum of positive differences")
    p_value: float = Field(..., ge=0, le=1, description="p-value under the chosen alternative")
    n_effective: int = Field(..., ge=1, description="Number of nonzero differences")
    alternative: Alternative = Field(..., description="Alternative hypothesis")
    method: Literal["exact", "normal_approx"] = Field(..., description="Null distribution used")

    @model_validator(mode="after")
    def check_statistic_range(self):
        top = self.n_effective * (self.n_effective + 1) / 2
        if self.statistic > top + 1e-9:
            raise ValueError(f"statistic {self.statistic} exceeds n(n+1)/2 = {top}")
        return self


# ============================================================================
# BOUNDS
# ============================================================================

class TrajectoryAverages(BaseModel):
    """Residual-weighted and time averages along a trajectory."""
    kstar_bar: Optional[float] = Field(None, ge=0, description="Weighted average of ‖k*‖₂ (None without a test point)")
    smin_bar: float = Field(..., ge=0, description="Time average of the smallest kernel eigenvalue")
    inv_sigma_bar: float = Field(..., gt=0, description="Weighted average of 1/σ")


class BoundCheck(BaseModel):
    """One inequality lhs <= rhs evaluated numerically."""
    lhs: float = Field(..., description="Observed quantity")
    rhs: float = Field(..., description="Bound")
    holds: bool = Field(..., description="Whether lhs <= rhs within slack")


class Prop4Report(BaseModel):
    """Gradient and localization bounds at one test covariate."""
    grad_norm: float = Field(..., ge=0)
    grad_bound: float = Field(..., ge=0)
    pred_abs: float = Field(..., ge=0)
    pred_bound: float = Field(..., ge=0)
    holds: bool
    skipped: bool = Field(False, description="True when the kernel is not differentiable at x*")
    reason: Optional[str] = None


class LimitsReport(BaseModel):
    """Deviations from the wide- and narrow-bandwidth limit identities."""
    sigma_wide: float
    sigma_narrow: float
    deviations: Dict[str, float] = Field(..., description="Max absolute deviation per identity")
    tolerance: float = 1e-4

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    @property
    def holds(self) -> bool:
        return self.max_deviation <= self.tolerance


class Eq9Row(BaseModel):
    """One point of the double-descent bound curve."""
    sigma_m: float = Field(..., gt=0)
    bound: float = Field(..., ge=0)
    first_branch: Literal["sigma_inv", "kstar"]
    second_branch: Literal["t", "smin"]

    @property
    def active_branch(self) -> str:
        return f"{self.first_branch}|{self.second_branch}"


class VerificationRecord(BaseModel):
    """One randomized instance of a verification suite."""
    check: str
    seed: int
    lhs: float
    rhs: float
    holds: bool
    detail: Optional[str] = None


class SuiteReport(BaseModel):
    """All instances of one verification suite."""
    suite: str
    records: List[VerificationRecord] = Field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.records)

    @property
    def failures(self) -> List[VerificationRecord]:
        return [r for r in self.records if not r.holds]


# ============================================================================
# CLI / CONFIGURATION
# ============================================================================

class Settings(BaseModel):
    """Defaults resolved from the environment and .env files."""
    seed: int = Field(0, ge=0, lt=2**64, description="Default RNG seed")
    jobs: int = Field(1, ge=1, description="Default worker count")
    reps: int = Field(20, ge=1, description="Default repetition count")


class DataSource(BaseModel):
    """Parsed dataset URI (gen:<name> or csv:<path>?x=..&y=..&group=..)."""
    kind: Literal["gen", "csv"]
    name: Optional[Literal["linear-sine", "two-freq", "dd-sine"]] = None
    path: Optional[str] = None
    x_columns: List[str] = Field(default_factory=list)
    y_column: Optional[str] = None
    group_column: Optional[str] = None

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind == "gen" and self.name is None:
            raise ValueError("gen sources need a generator name")
        if self.kind == "csv" and (not self.path or not self.x_columns or not self.y_column):
            raise ValueError("csv sources need a path, x=<cols> and y=<col>")
        return self


class ExperimentConfig(BaseModel):
    """Global flags shared by all subcommands."""
    command: str
    seed: int = Field(..., ge=0, lt=2**64)
    out: Optional[str] = None
    kernels: List[KernelFamily] = Field(..., min_length=1)
    reps: int = Field(..., ge=1)
    jobs: int = Field(..., ge=1)
