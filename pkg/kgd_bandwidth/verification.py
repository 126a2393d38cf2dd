# File Summary: Randomized verification suites for the bound and monotonicity checks.

"""
Verification suites.

Each suite draws `trials` random instances. Instance i uses seed
(seed + i) mod 2⁶⁴ on a stream reserved for the suite, so any failing
instance can be replayed alone. Trajectory-based suites keep the trajectory
of every failing instance for dumping.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .bounds import (
    check_lemma7,
    check_lemma8_contraction,
    check_limits_prop3,
    check_prop2_bound,
    check_prop4_bounds,
    check_r2_concave,
    check_r2_monotone,
    check_rate_sandwich,
    eq9_row,
    trajectory_averages,
)
from .data import MAX_SEED, Dataset, gen_dd_sine, make_rng, standardize
from .errors import InvalidArgumentError
from .kernels import max_pairwise_distance
from .kgd import Trajectory, kgd_constant, kgd_decreasing_bandwidth
from .models.schema import KernelFamily, KernelSpec, KGDConfig, SuiteReport, VerificationRecord
from .regression import kgf_single_bound, krr_single_bound

SUITE_NAMES = ["lemma1", "prop2", "prop3", "prop4", "lemma5", "lemma7", "lemma8", "eq9"]

DEFAULT_TRIALS = {name: 100 for name in SUITE_NAMES}
DEFAULT_TRIALS["lemma5"] = 50
DEFAULT_TRIALS["prop3"] = 10
DEFAULT_TRIALS["lemma7"] = 100_000
DEFAULT_TRIALS["eq9"] = 10

# trajectory suites stay short; the checks do not need converged runs
SUITE_CONFIG = KGDConfig(t_max=50.0)

TrialResult = Tuple[List[VerificationRecord], Optional[Trajectory]]


@dataclass
class SuiteRun:
    """Report of one suite plus trajectories of its failing instances."""

    report: SuiteReport
    dumps: Dict[int, pd.DataFrame] = field(default_factory=dict)


# ============================================================================
# RANDOM INSTANCES
# ============================================================================

def instance_seed(seed: int, trial: int) -> int:
    return (int(seed) + int(trial)) % MAX_SEED


def random_family(rng: np.random.Generator) -> KernelFamily:
    families = list(KernelFamily)
    return families[int(rng.integers(len(families)))]


def random_instance(rng: np.random.Generator, n_min: int = 5, n_max: int = 30, n_test: int = 3) -> Dataset:
    """Smooth response plus noise on a random 1-D or 2-D design."""
    n = int(rng.integers(n_min, n_max + 1))
    p = int(rng.integers(1, 3))
    scale = 10.0 ** rng.uniform(-0.5, 0.5)
    x = rng.uniform(-1.0, 1.0, size=(n, p)) * scale
    freq = rng.uniform(0.5, 2.0, size=p)
    y = np.sin(2.0 * math.pi * (x / scale) @ freq) + 0.2 * rng.standard_normal(n)
    x_test = rng.uniform(-1.0, 1.0, size=(n_test, p)) * scale if n_test else None
    return Dataset(x=x, y=y, x_test=x_test)


def separated_instance(rng: np.random.Generator) -> Dataset:
    """Jittered grid design whose rows stay at least half a cell apart."""
    p = int(rng.integers(1, 3))
    per_axis = int(rng.integers(5, 21)) if p == 1 else int(rng.integers(2, 5))
    scale = 10.0 ** rng.uniform(-0.5, 0.5)
    h = 2.0 * scale / per_axis
    cells = np.stack(np.meshgrid(*[np.arange(per_axis)] * p, indexing="ij"), axis=-1).reshape(-1, p)
    x = (cells + 0.5 + rng.uniform(-0.25, 0.25, size=cells.shape)) * h - scale
    y = np.sin(2.0 * math.pi * x[:, 0] / scale) + 0.2 * rng.standard_normal(x.shape[0])
    return Dataset(x=x, y=y)


def _record(check: str, seed: int, lhs: float, rhs: float, holds: bool, detail: Optional[str] = None):
    return VerificationRecord(check=check, seed=seed, lhs=lhs, rhs=rhs, holds=bool(holds), detail=detail)


# ============================================================================
# SUITES
# ============================================================================

def _lemma1(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data = random_instance(rng, n_test=0)
    family = random_family(rng)
    D = max_pairwise_distance(data.x)
    spec = KernelSpec(family=family, sigma=D * 10.0 ** rng.uniform(-1.5, 0.0))
    t = 10.0 ** rng.uniform(-1.0, 2.0)
    x_star = rng.uniform(data.x.min(axis=0), data.x.max(axis=0))
    kgf = kgf_single_bound(data, spec, t, None, x_star)
    krr = krr_single_bound(data, spec, 1.0 / t, None, x_star)
    detail = f"{family.value} n={data.n} sigma={spec.sigma:.4g} t={t:.4g}"
    return [
        _record("lemma1-kgf", seed, abs(kgf.prediction), kgf.bound, kgf.holds, detail),
        _record("lemma1-krr", seed, abs(krr.prediction), krr.bound, krr.holds, detail),
    ], None


def _prop2(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data = random_instance(rng)
    family = random_family(rng)
    traj = kgd_decreasing_bandwidth(data, family, SUITE_CONFIG)
    records = []
    for j in range(data.n_test):
        check = check_prop2_bound(traj, j)
        records.append(_record("prop2", seed, check.lhs, check.rhs, check.holds, f"{family.value} test_point={j}"))
    if traj.steps >= 2 and np.any(traj.residual_norms > 0):
        avg = trajectory_averages(traj, 0)
        root_n = math.sqrt(data.n)
        records.append(_record("prop2-kstar-bar", seed, avg.kstar_bar, root_n, avg.kstar_bar <= root_n + 1e-9))
        smin_cap = min(1.0, float(traj.smaxs.max()))
        records.append(_record("prop2-smin-bar", seed, avg.smin_bar, smin_cap, avg.smin_bar <= smin_cap + 1e-12))
    return records, traj


def _prop3(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data = separated_instance(rng)
    family = random_family(rng)
    t = 10.0 ** rng.uniform(-1.0, 1.0)
    lam = 10.0 ** rng.uniform(-1.0, 1.0)
    report = check_limits_prop3(data, family, t, lam)
    detail = f"{family.value} n={data.n} t={t:.4g} lambda={lam:.4g}"
    return [
        _record(f"prop3-{name}", seed, dev, report.tolerance, dev <= report.tolerance, detail)
        for name, dev in report.deviations.items()
    ], None


def _prop4(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data, _ = standardize(random_instance(rng, n_test=0))
    traj = kgd_decreasing_bandwidth(data, KernelFamily.GAUSSIAN, SUITE_CONFIG)
    x_star = rng.uniform(data.x.min(axis=0), data.x.max(axis=0))
    report = check_prop4_bounds(traj, data, x_star)
    detail = f"n={data.n} pred={report.pred_abs:.6g} pred_bound={report.pred_bound:.6g}"
    return [
        _record("prop4-gradient", seed, report.grad_norm, report.grad_bound, report.holds, detail),
    ], traj


def _lemma5(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data = random_instance(rng, n_test=0)
    family = random_family(rng)
    spec = KernelSpec(family=family, sigma=max_pairwise_distance(data.x) * 10.0 ** rng.uniform(-1.0, 0.0))
    constant = kgd_constant(data, spec, 0.01, 10.0)
    decreasing = kgd_decreasing_bandwidth(data, family, SUITE_CONFIG)
    records = []
    for label, traj in (("constant", constant), ("decreasing", decreasing)):
        mono = check_r2_monotone(traj)
        records.append(_record(f"lemma5-monotone-{label}", seed, mono.lhs, mono.rhs, mono.holds, family.value))
        sandwich = check_rate_sandwich(traj)
        records.append(_record(f"lemma5-sandwich-{label}", seed, sandwich.lhs, sandwich.rhs, sandwich.holds, family.value))
    concave = check_r2_concave(constant)
    records.append(_record("lemma5-concave-constant", seed, concave.lhs, concave.rhs, concave.holds, family.value))
    failing = decreasing if not all(r.holds for r in records[2:4]) else constant
    return records, failing


def _lemma7(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    s = 100.0 * (1.0 - rng.random())
    t = 100.0 * (1.0 - rng.random())
    holds = bool(check_lemma7(np.array([s]), np.array([t]))[0])
    lhs = -math.expm1(-t * s) / s
    return [_record("lemma7", seed, lhs, min(t, 1.0 / s), holds)], None


def _lemma8(seed: int, stream: int) -> TrialResult:
    rng = make_rng(seed, stream)
    data = random_instance(rng, n_test=0)
    family = random_family(rng)
    traj = kgd_decreasing_bandwidth(data, family, SUITE_CONFIG)
    check = check_lemma8_contraction(traj)
    return [_record("lemma8", seed, check.lhs, check.rhs, check.holds, family.value)], traj


def _eq9(seed: int, stream: int) -> TrialResult:
    data, _ = standardize(gen_dd_sine(n=20, seed=seed, stream=stream, n_test=1))
    D = max_pairwise_distance(data.x)
    records = []
    failing = None
    for sigma_m in np.geomspace(1e-3 * D, D, 5):
        cfg = KGDConfig(sigma0=D, sigma_min=float(sigma_m), t_max=SUITE_CONFIG.t_max)
        traj = kgd_decreasing_bandwidth(data, KernelFamily.GAUSSIAN, cfg)
        row = eq9_row(traj, float(sigma_m))
        lhs = abs(float(traj.shifted_test[0]))
        holds = lhs <= row.bound * (1 + 1e-4)
        records.append(_record("eq9", seed, lhs, row.bound, holds, f"sigma_m={sigma_m:.4g} branch={row.active_branch}"))
        if not holds and failing is None:
            failing = traj
    return records, failing


SUITES: Dict[str, Callable[[int, int], TrialResult]] = {
    "lemma1": _lemma1,
    "prop2": _prop2,
    "prop3": _prop3,
    "prop4": _prop4,
    "lemma5": _lemma5,
    "lemma7": _lemma7,
    "lemma8": _lemma8,
    "eq9": _eq9,
}


def run_suite(name: str, trials: Optional[int] = None, seed: int = 0, jobs: int = 1) -> SuiteRun:
    """Run one suite; instances are evaluated in order, optionally on a thread pool."""
    if name not in SUITES:
        raise InvalidArgumentError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    trials = DEFAULT_TRIALS[name] if trials is None else int(trials)
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    fn = SUITES[name]
    stream = SUITE_NAMES.index(name) + 1
    seeds = [instance_seed(seed, i) for i in range(trials)]

    def one(s: int) -> TrialResult:
        return fn(s, stream)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    run = SuiteRun(report=SuiteReport(suite=name))
    for s, (records, traj) in zip(seeds, results):
        run.report.records.extend(records)
        if traj is not None and not all(r.holds for r in records):
            run.dumps[s] = traj.to_frame()
    return run


def report_frame(report: SuiteReport) -> pd.DataFrame:
    """check, seed, lhs, rhs, holds, detail in record order."""
    return pd.DataFrame(
        [r.model_dump() for r in report.records],
        columns=["check", "seed", "lhs", "rhs", "holds", "detail"],
    )
