"""Parameter sweep over (scheme, eta distribution, N, b, a) and derived curves."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .econ import SCHEMES, FiscalPolicy, InvalidInput
from .estimator import EnsembleSummary, run_ensemble
from .eta import PRESETS, EtaSpec, derive_seed

# |log g| below this counts as exactly on the boundary
ZERO_LOG_G = 1e-12


def grid_values(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid, rounded so 0.1 * 3 prints as 0.3."""
    if step <= 0:
        raise InvalidInput("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 12) for k in range(count))


@dataclass(frozen=True)
class SweepGrid:
    a_values: tuple[float, ...]
    b_values: tuple[float, ...]
    schemes: tuple[str, ...]
    specs: tuple[EtaSpec, ...]
    N_values: tuple[int, ...]
    T: int
    samples: int
    base_seed: int

    def __post_init__(self):
        for name, vals, hi in (("a", self.a_values, 1.0), ("b", self.b_values, 1.0)):
            if not vals or any(not (0.0 <= v <= hi) for v in vals):
                raise InvalidInput(f"{name} values must be non-empty and lie in [0, {hi}]")
            if any(x >= y for x, y in zip(vals, vals[1:])):
                raise InvalidInput(f"{name} values must be strictly ascending")
        for s in self.schemes:
            if s not in SCHEMES:
                raise InvalidInput(f"unknown scheme {s!r}")
        if not self.specs or not self.N_values or not self.schemes:
            raise InvalidInput("grid needs at least one scheme, spec and N")
        if any(n < 1 for n in self.N_values) or self.T < 2 or self.samples < 1:
            raise InvalidInput("need N >= 1, T >= 2, samples >= 1")

    @classmethod
    def full(cls, base_seed: int = 0) -> "SweepGrid":
        return cls(
            a_values=grid_values(0.0, 1.0, 0.02),
            b_values=grid_values(0.0, 0.8, 0.02),
            schemes=("regressive", "proportional", "progressive"),
            specs=tuple(PRESETS.values()),
            N_values=(10, 100),
            T=500,
            samples=100,
            base_seed=base_seed,
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return (len(self.schemes), len(self.specs), len(self.N_values),
                len(self.b_values), len(self.a_values))

    @property
    def cell_count(self) -> int:
        return math.prod(self.shape)

    def cells(self) -> Iterator["CellKey"]:
        # spec and N outermost so cells sharing draws run back to back
        for j in range(len(self.specs)):
            for k in range(len(self.N_values)):
                for i in range(len(self.schemes)):
                    for bi in range(len(self.b_values)):
                        for ai in range(len(self.a_values)):
                            yield CellKey(i, j, k, bi, ai)


class CellKey(NamedTuple):
    scheme: int
    spec: int
    n: int
    b: int
    a: int


def cell_seed(grid: SweepGrid, key: CellKey) -> int:
    """Ensemble seed for a cell.

    Keyed by distribution and N only: every scheme, a and b at the same
    (spec, N) replays identical draws, so neighbouring cells differ only by
    policy.
    """
    return derive_seed(grid.base_seed, "sweep", grid.specs[key.spec], grid.N_values[key.n])


def compute_cell(grid: SweepGrid, key: CellKey) -> EnsembleSummary:
    policy = FiscalPolicy(grid.schemes[key.scheme], grid.a_values[key.a], grid.b_values[key.b])
    return run_ensemble(
        grid.N_values[key.n], grid.T, policy, grid.specs[key.spec],
        cell_seed(grid, key), grid.samples,
    )


@dataclass
class GrowthSurface:
    """Average growth factors on the (b, a) grid for one scheme, spec and N.

    Arrays are indexed [b index, a index]; missing cells hold nan.
    """

    scheme: str
    spec: EtaSpec
    N: int
    a_values: np.ndarray
    b_values: np.ndarray
    mean_log_g: np.ndarray
    log_g_stderr: np.ndarray
    finite_counts: np.ndarray
    T: int = 0
    samples: int = 0
    base_seed: int = 0

    @classmethod
    def empty(cls, grid: SweepGrid, i: int, j: int, k: int) -> "GrowthSurface":
        shape = (len(grid.b_values), len(grid.a_values))
        return cls(
            scheme=grid.schemes[i], spec=grid.specs[j], N=grid.N_values[k],
            a_values=np.array(grid.a_values), b_values=np.array(grid.b_values),
            mean_log_g=np.full(shape, np.nan), log_g_stderr=np.full(shape, np.nan),
            finite_counts=np.zeros(shape, dtype=np.int64),
            T=grid.T, samples=grid.samples, base_seed=grid.base_seed,
        )

    @property
    def g(self) -> np.ndarray:
        return np.exp(self.mean_log_g)

    @property
    def missing(self) -> np.ndarray:
        return self.finite_counts == 0

    def put(self, b: int, a: int, summary: EnsembleSummary):
        self.finite_counts[b, a] = summary.finite_count
        if summary.finite_count:
            self.mean_log_g[b, a] = summary.mean_log_g
            self.log_g_stderr[b, a] = summary.log_g_stderr

    def gov(self) -> np.ndarray:
        """Government income rate b * a * g(b, a) on every cell."""
        return self.b_values[:, None] * self.a_values[None, :] * self.g


SurfaceKey = tuple[str, EtaSpec, int]


def run_sweep(
    grid: SweepGrid,
    threads: int = 1,
    done: Optional[dict[CellKey, EnsembleSummary]] = None,
    on_cell: Optional[Callable[[CellKey, EnsembleSummary], None]] = None,
    limit: Optional[int] = None,
) -> dict[SurfaceKey, GrowthSurface]:
    """Compute every cell not already in ``done``.

    ``on_cell`` runs on the calling thread as each cell finishes (in
    completion order); the returned surfaces are assembled by position, so
    they do not depend on scheduling. ``limit`` stops after that many new
    cells, leaving the rest missing.
    """
    done = dict(done or {})
    todo = [key for key in grid.cells() if key not in done]
    if limit is not None:
        todo = todo[:limit]

    if threads <= 1:
        for key in todo:
            done[key] = s = compute_cell(grid, key)
            if on_cell:
                on_cell(key, s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(compute_cell, grid, key): key for key in todo}
            for fut in as_completed(futures):
                key = futures[fut]
                done[key] = s = fut.result()
                if on_cell:
                    on_cell(key, s)

    return assemble(grid, done)


def assemble(grid: SweepGrid, done: dict[CellKey, EnsembleSummary]) -> dict[SurfaceKey, GrowthSurface]:
    surfaces = {}
    for i, scheme in enumerate(grid.schemes):
        for j, spec in enumerate(grid.specs):
            for k, n in enumerate(grid.N_values):
                surfaces[(scheme, spec, n)] = GrowthSurface.empty(grid, i, j, k)
    for key, s in done.items():
        surf = surfaces[(grid.schemes[key.scheme], grid.specs[key.spec], grid.N_values[key.n])]
        surf.put(key.b, key.a, s)
    return surfaces


# -- derived quantities ---------------------------------------------------

def optimal_tax(surface: GrowthSurface, b_index: int) -> Optional[float]:
    """Growth-maximising tax rate in one b row; ties go to the smaller a."""
    row = surface.g[b_index]
    if np.all(np.isnan(row)):
        return None
    return float(surface.a_values[int(np.nanargmax(row))])


def max_growth(surface: GrowthSurface, b_index: int) -> Optional[float]:
    row = surface.g[b_index]
    if np.all(np.isnan(row)):
        return None
    return float(np.nanmax(row))


def smooth(values: np.ndarray, window: int = 5) -> np.ndarray:
    """Centred moving average; windows shrink symmetrically at the edges."""
    v = np.asarray(values, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise InvalidInput("smoothing window must be a positive odd integer")
    n = v.size
    out = np.empty(n)
    for i in range(n):
        half = min(window // 2, i, n - 1 - i)
        seg = v[i - half:i + half + 1]
        seg = seg[~np.isnan(seg)]
        out[i] = seg.mean() if seg.size else np.nan
    return out


@dataclass
class PolicyCurves:
    b_values: np.ndarray
    a_opt: np.ndarray
    a_opt_smooth: np.ndarray
    g_max: np.ndarray
    gov_opttax: np.ndarray  # b * smoothed a_opt * g_max
    gov_opttax_raw: np.ndarray  # b * a_opt * g_max
    b_star: Optional[float]
    window: int = 5
    meta: dict = field(default_factory=dict)

    @property
    def b_star_index(self) -> Optional[int]:
        if self.b_star is None:
            return None
        return int(np.flatnonzero(self.b_values == self.b_star)[0])


def government_curves(surface: GrowthSurface, window: int = 5) -> PolicyCurves:
    nb = surface.b_values.size
    a_opt = np.array([np.nan if (x := optimal_tax(surface, i)) is None else x for i in range(nb)])
    g_max = np.array([np.nan if (x := max_growth(surface, i)) is None else x for i in range(nb)])
    a_smooth = smooth(a_opt, window)
    gov = surface.b_values * a_smooth * g_max
    gov_raw = surface.b_values * a_opt * g_max
    b_star = None
    if not np.all(np.isnan(gov)):
        b_star = float(surface.b_values[int(np.nanargmax(gov))])
    return PolicyCurves(
        b_values=surface.b_values.copy(), a_opt=a_opt, a_opt_smooth=a_smooth, g_max=g_max,
        gov_opttax=gov, gov_opttax_raw=gov_raw, b_star=b_star, window=window,
        meta={"scheme": surface.scheme, "spec": surface.spec, "N": surface.N},
    )


@dataclass
class ZoneBoundary:
    points: list[tuple[float, float]]  # (b, a) where g crosses 1
    trivial_bound: list[tuple[float, float]]  # (b, a) on (1 - ba) <eta> = 1


def trivial_bound(b: float, spec: EtaSpec) -> float:
    """Tax rate above which even an infinite society cannot grow."""
    m = spec.mean * spec.scale
    if b == 0.0:
        return math.inf
    return (1.0 - 1.0 / m) / b


def zone_boundary(surface: GrowthSurface) -> ZoneBoundary:
    """Per b column, linear interpolation of g - 1 = 0 along a."""
    points = []
    a = surface.a_values
    for bi, b in enumerate(surface.b_values):
        d = surface.g[bi] - 1.0
        zero = np.abs(surface.mean_log_g[bi]) <= ZERO_LOG_G
        idx = [i for i in range(a.size) if not np.isnan(d[i])]
        for i in idx:
            if zero[i]:
                points.append((float(b), float(a[i])))
        for i, j in zip(idx, idx[1:]):
            if zero[i] or zero[j]:
                continue
            if (d[i] > 0) != (d[j] > 0):
                frac = d[i] / (d[i] - d[j])
                points.append((float(b), float(a[i] + frac * (a[j] - a[i]))))
    amax = float(a.max())
    bound = []
    for b in surface.b_values:
        v = trivial_bound(float(b), surface.spec)
        if v <= amax:
            bound.append((float(b), max(v, 0.0)))
    return ZoneBoundary(points, bound)


def growth_cells(surface: GrowthSurface, k: float = 2.0) -> np.ndarray:
    """Cells whose log growth exceeds zero by more than k standard errors."""
    with np.errstate(invalid="ignore"):
        return surface.mean_log_g > k * surface.log_g_stderr


def decline_cells(surface: GrowthSurface, k: float = 2.0) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return surface.mean_log_g < -k * surface.log_g_stderr


@dataclass
class ZoneComparison:
    violations: list[tuple[float, float]]  # (b, a): A grows, B declines, both beyond slack
    marginal: list[tuple[float, float]]  # A grows beyond slack, B not clearly growing
    slack: float

    @property
    def included(self) -> bool:
        return not self.violations


def compare_zones(a: GrowthSurface, b: GrowthSurface, slack: float = 2.0) -> ZoneComparison:
    """Check that A's zone of growth lies inside B's.

    A cell only counts against inclusion when A grows and B declines, each
    by more than ``slack`` standard errors of its log growth estimate.
    """
    if not (np.array_equal(a.a_values, b.a_values) and np.array_equal(a.b_values, b.b_values)):
        raise InvalidInput("surfaces are on different grids")
    grows = growth_cells(a, slack)
    hard = grows & decline_cells(b, slack)
    soft = grows & ~growth_cells(b, slack) & ~hard
    coords = lambda m: [(float(a.b_values[i]), float(a.a_values[j])) for i, j in zip(*np.nonzero(m))]
    return ZoneComparison(coords(hard), coords(soft), slack)


def bound_violations(surface: GrowthSurface, slack: float = 2.0) -> list[tuple[float, float]]:
    """Cells beyond the trivial bound that still grow by more than ``slack`` s.e."""
    m = surface.spec.mean * surface.spec.scale
    above = (1.0 - surface.b_values[:, None] * surface.a_values[None, :]) * m < 1.0
    bad = above & growth_cells(surface, slack)
    return [(float(surface.b_values[i]), float(surface.a_values[j])) for i, j in zip(*np.nonzero(bad))]


def surfaces_for(surfaces: dict[SurfaceKey, GrowthSurface], *, scheme=None, spec=None, N=None) -> list[GrowthSurface]:
    out = []
    for (s, e, n), surf in surfaces.items():
        if (scheme is None or s == scheme) and (spec is None or e == spec) and (N is None or n == N):
            out.append(surf)
    return out
