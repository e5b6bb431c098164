"""Log-normal growth factors: parameterisation, seeded draws, tail statistics."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .econ import FiscalPolicy, InvalidInput


@dataclass(frozen=True)
class EtaSpec:
    """Growth-factor distribution pinned by its arithmetic and geometric means.

    ``scale`` multiplies every draw; it stands in for constant production
    factors that only rescale eta.
    """

    mean: float
    geomean: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.mean > 0 and self.geomean > 0 and self.scale > 0):
            raise InvalidInput("mean, geomean and scale must be positive")
        if self.mean < self.geomean:
            raise InvalidInput(
                f"mean {self.mean} is below geomean {self.geomean}; no log-normal fits"
            )

    @property
    def degenerate(self) -> bool:
        return self.mean == self.geomean


@dataclass(frozen=True)
class LogNormalParams:
    mu: float
    sigma: float

    @property
    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    @property
    def geomean(self) -> float:
        return math.exp(self.mu)


PRESETS = {
    "less_risky": EtaSpec(1.25, 0.8),
    "intermediate": EtaSpec(1.5, 2.0 / 3.0),
    "more_risky": EtaSpec(3.0, 1.0 / 3.0),
}


def presets() -> dict[str, EtaSpec]:
    return dict(PRESETS)


def lognormal_params(spec: EtaSpec) -> LogNormalParams:
    mu = math.log(spec.geomean)
    # clamp tiny negative rounding when mean == geomean
    sigma = math.sqrt(max(2.0 * (math.log(spec.mean) - mu), 0.0))
    return LogNormalParams(mu, sigma)


# -- seeded streams -------------------------------------------------------

def _words(key) -> list[int]:
    if isinstance(key, (bool, np.bool_)):
        return [int(key)]
    if isinstance(key, (int, np.integer)):
        v = int(key)
        if v < 0:
            raise ValueError("integer stream keys must be non-negative")
        out = []
        while True:
            out.append(v & 0xFFFFFFFF)
            v >>= 32
            if not v:
                return out
    if isinstance(key, float):
        (bits,) = struct.unpack("<Q", struct.pack("<d", key))
        return [bits & 0xFFFFFFFF, bits >> 32]
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode()).digest()
        return list(struct.unpack("<4I", digest[:16]))
    if isinstance(key, EtaSpec):
        return _words(key.mean) + _words(key.geomean) + _words(key.scale)
    raise TypeError(f"unsupported stream key {key!r}")


def derive_seed(base_seed: int, *keys) -> int:
    """64-bit seed for the stream (base_seed, *keys).

    Depends only on the key values, never on call order, so any cell of a
    sweep can be regenerated on its own.
    """
    spawn = []
    for k in keys:
        w = _words(k)
        # length-prefix so (1, 2) and (4294967298,) stay distinct
        spawn.append(len(w))
        spawn.extend(w)
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(spawn))
    return int(ss.generate_state(1, np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class DrawMatrix:
    draws: np.ndarray  # shape (N, T)
    seed: int
    spec: EtaSpec


def sample(spec: EtaSpec, seed: int, n: int, t: int) -> DrawMatrix:
    if n < 1 or t < 1:
        raise InvalidInput("need N >= 1 and T >= 1")
    p = lognormal_params(spec)
    z = generator(seed).standard_normal((n, t))
    if p.sigma == 0.0:
        draws = np.full((n, t), spec.geomean * spec.scale)
    else:
        draws = np.exp(p.mu + p.sigma * z) * spec.scale
    draws.flags.writeable = False
    return DrawMatrix(draws, int(seed), spec)


# -- analytic properties --------------------------------------------------

@dataclass(frozen=True)
class TailStats:
    p_decline: float
    p_double: float
    p_tenfold: float


def tail_stats(spec: EtaSpec) -> TailStats:
    """P(eta < 1), P(eta >= 2), P(eta > 10) for the unscaled distribution."""
    p = lognormal_params(spec)
    if p.sigma == 0.0:
        v = spec.geomean
        return TailStats(float(v < 1), float(v >= 2), float(v > 10))
    return TailStats(
        p_decline=float(norm.cdf(-p.mu / p.sigma)),
        p_double=float(norm.sf((math.log(2.0) - p.mu) / p.sigma)),
        p_tenfold=float(norm.sf((math.log(10.0) - p.mu) / p.sigma)),
    )


@dataclass(frozen=True)
class GrowthCondition:
    individual_decline: bool  # mu_log < 0
    aggregate_growth: bool  # log mean > 0
    holds: bool
    variance_form: bool  # sigma^2 > -2 mu, with mu < 0

    @property
    def consistent(self) -> bool:
        return self.holds == self.variance_form


def growth_condition(spec: EtaSpec) -> GrowthCondition:
    p = lognormal_params(spec)
    decline = p.mu < 0.0
    growth = math.log(spec.mean) > 0.0
    var_form = decline and p.sigma**2 > -2.0 * p.mu
    return GrowthCondition(decline, growth, decline and growth, var_form)


def clt_params(params: LogNormalParams, t: float) -> tuple[float, float]:
    """Mean and variance of log eta summed over t independent periods."""
    if t < 0:
        raise InvalidInput("t must be non-negative")
    return t * params.mu, t * params.sigma**2


def border_growth(policy: FiscalPolicy, spec: EtaSpec, case: int) -> float:
    """Closed-form growth factor in the three limiting regimes.

    1: no production risk (eta == 1), 2: no taxation (a == 0),
    3: full taxation with infinitely many agents (a == 1).
    """
    a, b = policy.tax_rate, policy.admin_rate
    if case == 1:
        if not (spec.mean == 1.0 and spec.geomean == 1.0 and spec.scale == 1.0):
            raise InvalidInput("case 1 needs the degenerate distribution eta == 1")
        return 1.0 - a * b
    if case == 2:
        if a != 0.0:
            raise InvalidInput("case 2 needs a == 0")
        return spec.geomean * spec.scale
    if case == 3:
        if a != 1.0:
            raise InvalidInput("case 3 needs a == 1")
        return (1.0 - a * b) * spec.mean * spec.scale
    raise InvalidInput(f"unknown border case {case}")


def upper_guide(a: float, b: float, spec: EtaSpec) -> float:
    """(1 - ab) <eta>: the infinite-society growth ceiling at any tax rate."""
    return (1.0 - a * b) * spec.mean * spec.scale
