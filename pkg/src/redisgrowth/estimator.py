"""Trajectory ensembles and growth-factor estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .econ import FiscalPolicy, InvalidInput
from .eta import EtaSpec, derive_seed, sample
from .kernels import simulate_totals


@dataclass(frozen=True)
class Trajectory:
    totals: np.ndarray  # Y(t), t = 0..T-1
    human_capital: np.ndarray  # H(t), pre-redistribution
    n: int
    policy: FiscalPolicy
    spec: EtaSpec
    seed: int

    @property
    def T(self) -> int:
        return self.totals.size


@dataclass(frozen=True)
class GrowthEstimate:
    log_g: Optional[float]
    finite: bool

    @property
    def g(self) -> Optional[float]:
        return None if self.log_g is None else math.exp(self.log_g)


@dataclass(frozen=True)
class EnsembleSummary:
    sample_count: int
    finite_count: int
    mean_log_g: Optional[float]
    # standard error of mean_log_g; 0 when fewer than two finite runs
    log_g_stderr: Optional[float]
    log_g: np.ndarray = field(repr=False, compare=False)  # per run, nan if excluded

    @property
    def avg_g(self) -> Optional[float]:
        return None if self.mean_log_g is None else math.exp(self.mean_log_g)

    @property
    def degenerate(self) -> bool:
        return self.finite_count == 0


def _check(n: int, T: int):
    if n < 1:
        raise InvalidInput("N must be at least 1")
    if T < 2:
        raise InvalidInput("T must be at least 2")


def fit_log_growth(totals, n: float) -> np.ndarray:
    """Fixed-intercept least-squares slope of log Y(t) on t, per row.

    The intercept is pinned at log N, so the slope is
    sum(t * (log Y_t - log N)) / sum(t^2). Rows containing a non-positive
    or non-finite total give nan.
    """
    Y = np.atleast_2d(np.asarray(totals, dtype=np.float64))
    T = Y.shape[1]
    if T < 2:
        raise InvalidInput("need at least two time points")
    t = np.arange(T, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ly = np.log(Y)
    ok = np.all(np.isfinite(ly), axis=1)
    dev = np.where(ok[:, None], ly - math.log(n), 0.0)
    # row-wise reduction: independent of batch size and BLAS threading
    slope = (dev * t).sum(axis=1) / (t @ t)
    return np.where(ok, slope, np.nan)


def estimate_growth(traj: Trajectory) -> GrowthEstimate:
    s = float(fit_log_growth(traj.totals, traj.n)[0])
    if math.isnan(s):
        return GrowthEstimate(None, False)
    return GrowthEstimate(s, True)


def summarize(log_g: np.ndarray) -> EnsembleSummary:
    log_g = np.asarray(log_g, dtype=np.float64)
    fin = log_g[np.isfinite(log_g)]
    k = fin.size
    if k == 0:
        return EnsembleSummary(log_g.size, 0, None, None, log_g)
    mean = float(fin.mean())
    se = float(fin.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return EnsembleSummary(log_g.size, k, mean, se, log_g)


def run_trajectory(n: int, T: int, policy: FiscalPolicy, spec: EtaSpec, seed: int) -> Trajectory:
    _check(n, T)
    draws = sample(spec, seed, n, T).draws
    Y, H = simulate_totals(draws[None], policy.code, policy.tax_rate, policy.admin_rate)
    return Trajectory(Y[0], H[0], n, policy, spec, int(seed))


def run_common_random(
    n: int, T: int, schemes: Sequence[str], a: float, b: float, spec: EtaSpec, seed: int
) -> list[Trajectory]:
    """One trajectory per scheme, all driven by the same draws."""
    return [run_trajectory(n, T, FiscalPolicy(s, a, b), spec, seed) for s in schemes]


def sample_seed(base_seed: int, index: int) -> int:
    return derive_seed(base_seed, "ensemble", index)


@lru_cache(maxsize=4)
def ensemble_draws(spec: EtaSpec, n: int, T: int, base_seed: int, samples: int) -> np.ndarray:
    """Stacked (samples, N, T) draws; shared by every policy at this seed."""
    out = np.empty((samples, n, T))
    for i in range(samples):
        out[i] = sample(spec, sample_seed(base_seed, i), n, T).draws
    out.flags.writeable = False
    return out


def run_ensemble(
    n: int, T: int, policy: FiscalPolicy, spec: EtaSpec, base_seed: int, samples: int
) -> EnsembleSummary:
    """Independent runs aggregated by the geometric mean of their growth factors.

    Draws depend on (base_seed, sample index) only, so two policies run
    with the same base seed see common random numbers.
    """
    _check(n, T)
    if samples < 1:
        raise InvalidInput("samples must be at least 1")
    draws = ensemble_draws(spec, n, T, int(base_seed), samples)
    Y, _ = simulate_totals(draws, policy.code, policy.tax_rate, policy.admin_rate)
    return summarize(fit_log_growth(Y, n))
