"""Single-period economics: production, taxation, redistribution.

Income vectors are plain 1-D float arrays. Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SCHEMES = ("regressive", "proportional", "progressive")

# integer codes shared with the compiled kernel
SCHEME_CODES = {"proportional": 0, "regressive": 1, "progressive": 2}


class InvalidInput(ValueError):
    """Raised for malformed incomes, draws or policies."""


def as_income(y) -> np.ndarray:
    """Validate and convert to a float64 income vector."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInput("income vector must be 1-D with at least one agent")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInput("incomes must be finite and non-negative")
    return arr


@dataclass(frozen=True)
class FiscalPolicy:
    scheme: str
    tax_rate: float
    admin_rate: float

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidInput(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        for name in ("tax_rate", "admin_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidInput(f"{name} must lie in [0, 1], got {v}")

    @property
    def code(self) -> int:
        return SCHEME_CODES[self.scheme]


@dataclass(frozen=True)
class TaxAssessment:
    taxes: np.ndarray
    public_good: float
    government_income: float
    threshold: Optional[float] = None
    degenerate: bool = False

    @property
    def total(self) -> float:
        return float(self.taxes.sum())


def production(h) -> np.ndarray:
    # wage is one: income equals human capital
    return as_income(h)


def human_capital_production(y, eta) -> np.ndarray:
    y = as_income(y)
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape != y.shape:
        raise InvalidInput(f"eta has shape {eta.shape}, incomes {y.shape}")
    if not np.all(np.isfinite(eta)) or np.any(eta <= 0):
        raise InvalidInput("eta entries must be positive and finite")
    return eta * y


def solve_fee(y, a: float) -> float:
    """Smallest fee f with sum(min(y_i, f)) == a * sum(y).

    Walks the ascending order statistics: once k agents pay their whole
    income, the remaining N - k pay f each.
    """
    y = as_income(y)
    total = y.sum()
    target = a * total
    if a == 0.0 or total == 0.0:
        return 0.0
    s = np.sort(y)
    n = s.size
    prefix = 0.0
    for k in range(n):
        f = (target - prefix) / (n - k)
        if f <= s[k]:
            return float(f)
        prefix += s[k]
    # rounding pushed target past the total; every agent pays everything
    return float(s[-1])


def solve_max(y, a: float) -> float:
    """Largest threshold m with sum(max(y_i - m, 0)) == a * sum(y)."""
    y = as_income(y)
    total = y.sum()
    if total == 0.0:
        return 0.0
    target = a * total
    d = np.sort(y)[::-1]
    n = d.size
    prefix = 0.0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        m = (prefix - target) / k
        nxt = d[k] if k < n else 0.0
        if m >= nxt:
            return float(max(m, 0.0))
    return 0.0


def assess(y, policy: FiscalPolicy) -> TaxAssessment:
    y = as_income(y)
    a, b = policy.tax_rate, policy.admin_rate
    total = y.sum()
    threshold = None
    degenerate = total == 0.0 and a > 0.0

    if policy.scheme == "proportional":
        taxes = a * y
    elif policy.scheme == "regressive":
        threshold = solve_fee(y, a)
        taxes = np.minimum(y, threshold)
    else:
        threshold = solve_max(y, a)
        taxes = np.maximum(y - threshold, 0.0)

    collected = taxes.sum()
    return TaxAssessment(
        taxes=taxes,
        public_good=float((1.0 - b) * collected),
        government_income=float(b * collected),
        threshold=None if threshold is None else float(threshold),
        degenerate=bool(degenerate),
    )


def redistribute(y, policy: FiscalPolicy) -> np.ndarray:
    y = as_income(y)
    t = assess(y, policy)
    return y - t.taxes + t.public_good / y.size


@dataclass(frozen=True)
class StepResult:
    income: np.ndarray
    human_capital: np.ndarray


def step(y, eta, policy: FiscalPolicy) -> StepResult:
    """Advance one period; also returns the pre-redistribution vector."""
    h = human_capital_production(y, eta)
    return StepResult(income=redistribute(production(h), policy), human_capital=h)
