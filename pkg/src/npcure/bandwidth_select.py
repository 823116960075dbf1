"""Bootstrap bandwidth selection for the cure-probability estimator.

The selector minimizes a Monte Carlo estimate of

    MSE*(h) = E* (p*_h(x) - p_g(x))^2

where resamples keep the covariates fixed and redraw each ``(T_i, delta_i)``
from the kernel-weighted empirical law at ``X_i`` with an oversmoothing
pilot bandwidth ``g``.  Minimization uses a coarse-to-fine grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._random import STREAM_BOOTSTRAP, as_generator, substream
from .beran import SurvivalSample, canonical_order, hazard_increments
from .cure_estimators import incidence
from .exceptions import DegenerateCovariate, EmptyNeighborhood, GridTooSmall
from .kernel_weights import Kernel, kernel_eval, kernel_matrix

__all__ = [
    "BandwidthGrid",
    "PilotRule",
    "BootstrapConfig",
    "StageResult",
    "BandwidthSearch",
    "pilot_global",
    "pilot_local",
    "pilot_bandwidth",
    "bootstrap_resample",
    "bootstrap_mse",
    "select_bandwidth",
    "smooth_bandwidths",
]


@dataclass(frozen=True)
class BandwidthGrid:
    values: np.ndarray
    spacing: str = "explicit"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("grid must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)) or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("grid values must be finite, positive and strictly increasing")
        if self.spacing not in ("log", "explicit"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        object.__setattr__(self, "values", v)

    @classmethod
    def log(cls, low: float, high: float, num: int) -> "BandwidthGrid":
        return cls(np.geomspace(low, high, num), "log")

    @property
    def ratio(self) -> float:
        """Ratio between adjacent points (log grids only)."""
        return float(self.values[1] / self.values[0])

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


# -- pilot bandwidths ----------------------------------------------------------


def pilot_global(sample: SurvivalSample) -> float:
    """Global pilot ``g = range(X) / 10**(7/9) * n**(-1/9)``."""
    n = sample.n
    rng = sample.covariate_range
    if n < 2 or rng <= 0:
        raise DegenerateCovariate("global pilot needs at least two distinct covariate values")
    return rng / 10 ** (7 / 9) * n ** (-1 / 9)


def default_k(n: int) -> int:
    return max(1, int(math.floor(n / 4 + 0.5)))


def pilot_local(sample: SurvivalSample, x: float, k: Optional[int] = None) -> float:
    """Local pilot from the ``k``-th nearest covariates strictly right and left of ``x``.

    ``g_x = (d_k+ + d_k-) / 2 * 100**(1/9) * n**(-1/9)``; a side with
    fewer than ``k`` neighbours borrows the other side's distance.
    """
    n = sample.n
    if n < 2:
        raise DegenerateCovariate("local pilot needs at least two observations")
    k = default_k(n) if k is None else int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    xs = np.sort(sample.x)
    right = xs[xs > x]
    left = xs[xs < x][::-1]
    d_plus = right[k - 1] - x if right.size >= k else None
    d_minus = x - left[k - 1] if left.size >= k else None
    if d_plus is None and d_minus is None:
        raise DegenerateCovariate(f"fewer than k={k} neighbours on both sides of x={x}")
    if d_plus is None:
        d_plus = d_minus
    if d_minus is None:
        d_minus = d_plus
    return 0.5 * (d_plus + d_minus) * 100 ** (1 / 9) * n ** (-1 / 9)


@dataclass(frozen=True)
class PilotRule:
    """``kind`` is ``"global"`` or ``"local"``; ``k`` defaults to round(n/4)."""

    kind: str = "global"
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("global", "local"):
            raise ValueError(f"unknown pilot rule {self.kind!r}")


def pilot_bandwidth(rule: PilotRule, sample: SurvivalSample, x: float) -> float:
    if rule.kind == "global":
        return pilot_global(sample)
    return pilot_local(sample, x, rule.k)


# -- weighted bootstrap --------------------------------------------------------


def _resample_arrays(sample: SurvivalSample, g: float, rng: np.random.Generator, B: int, spec=Kernel.EPANECHNIKOV):
    """``B`` resamples as ``(T*, delta*)`` arrays of shape ``(B, n)``.

    Column ``i`` is drawn from the weighted empirical law at ``X_i``.
    """
    x = sample.x
    W = kernel_matrix(x, x, g, spec)  # row i: weights centred at X_i
    rowsum = W.sum(axis=1)
    bad = np.flatnonzero(rowsum <= 0)
    if bad.size:
        raise EmptyNeighborhood(float(x[bad[0]]), g, f"no pilot-bandwidth neighbours at X[{bad[0]}]={x[bad[0]]!r}")
    cdf = np.cumsum(W, axis=1) / rowsum[:, None]
    cdf[:, -1] = 1.0
    u = rng.random((B, x.size))
    idx = np.empty((B, x.size), dtype=np.intp)
    for i in range(x.size):
        idx[:, i] = np.searchsorted(cdf[i], u[:, i], side="right")
    return sample.t[idx], sample.delta[idx]


def bootstrap_resample(sample: SurvivalSample, g: float, seed=None, spec: Kernel = Kernel.EPANECHNIKOV) -> SurvivalSample:
    """One weighted-bootstrap resample with pilot bandwidth ``g``.

    Covariates are kept; ``(T_i*, delta_i*)`` is drawn from the kernel
    weighted empirical law at ``X_i``.
    """
    T, D = _resample_arrays(sample, g, as_generator(seed), 1, spec)
    return SurvivalSample(x=sample.x, t=T[0], delta=D[0])


def _resampled_cure(x_cov, T, D, x, hs, spec):
    """Cure-probability estimates at ``x`` for each bandwidth and resample.

    Returns an ``(L, B)`` array with NaN rows where ``h`` leaves ``x``
    without neighbours.  Only observations with positive weight enter the
    product, and the covariates are shared by all resamples, so the active
    set is computed once per bandwidth.
    """
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    out = np.full((hs.size, T.shape[0]), np.nan)
    for l, h in enumerate(hs):
        k = kernel_eval(spec, (x - x_cov) / h)
        active = np.flatnonzero(k > 0)
        if active.size == 0:
            continue
        Ta, Da, Xa = T[:, active], D[:, active], x_cov[active]
        order = canonical_order(np.broadcast_to(Xa, Ta.shape), Ta, Da)
        ds = np.take_along_axis(Da, order, axis=-1)
        ws = k[active][order]
        out[l] = np.prod(1.0 - hazard_increments(ds, ws), axis=-1)
    return out


def _mse_from_cure(cure, reference):
    mse = np.mean((cure - reference) ** 2, axis=-1)
    return np.where(np.isnan(mse), np.inf, mse)


def bootstrap_mse(
    sample: SurvivalSample,
    x: float,
    h,
    g: float,
    B: int,
    seed=None,
    spec: Kernel = Kernel.EPANECHNIKOV,
):
    """Monte Carlo bootstrap MSE of the cure-probability estimator at ``x``.

    ``h`` may be an array; the same ``B`` resamples serve every bandwidth.
    Bandwidths leaving ``x`` without neighbours get ``inf``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    reference = incidence(sample, x, g, spec)
    T, D = _resample_arrays(sample, g, as_generator(seed), B, spec)
    mse = _mse_from_cure(_resampled_cure(sample.x, T, D, x, h, spec), reference)
    return mse if np.ndim(h) else float(mse[0])


# -- two-stage search ----------------------------------------------------------


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings of the coarse-to-fine bootstrap search.

    Stage 1 uses ``stage1_resamples`` resamples on a log grid of
    ``stage1_grid_size`` points over ``stage1_range`` and then on a grid
    of the same size around the minimizer.  Stage 2 (skipped when
    ``two_stage`` is false) repeats the double search with
    ``stage2_resamples`` resamples and ``stage2_grid_size`` points.  A
    refined grid spans ``[h / r, h * r]`` where ``r`` is the point ratio of
    the previous grid.  ``stage1_range=None`` means ``(0.2, range(X))``.
    """

    stage1_resamples: int = 80
    stage2_resamples: int = 1000
    stage1_grid_size: int = 21
    stage2_grid_size: int = 5
    stage1_range: Optional[tuple] = (0.2, 50.0)
    pilot: PilotRule = field(default_factory=PilotRule)
    master_seed: int = 0
    two_stage: bool = True

    def __post_init__(self):
        if self.stage1_resamples < 1 or self.stage2_resamples < 1:
            raise ValueError("resample counts must be >= 1")
        if self.stage1_grid_size < 2 or self.stage2_grid_size < 2:
            raise ValueError("grid sizes must be >= 2")
        if self.stage1_range is not None:
            lo, hi = self.stage1_range
            if not (0 < lo < hi and math.isfinite(hi)):
                raise ValueError("stage1_range must satisfy 0 < low < high < inf")

    @classmethod
    def for_data(cls, **kwargs) -> "BootstrapConfig":
        """Data-analysis defaults: one stage, B=1000, range (0.2, range(X)), local pilot."""
        base = dict(
            stage1_resamples=1000, stage1_range=None, pilot=PilotRule("local"), two_stage=False
        )
        base.update(kwargs)
        return cls(**base)

    def with_seed(self, seed: int) -> "BootstrapConfig":
        return replace(self, master_seed=int(seed))


@dataclass(frozen=True)
class StageResult:
    grid: np.ndarray
    mse: np.ndarray
    resamples: int
    n_infeasible: int

    @property
    def argmin(self) -> int:
        """Index of the minimal MSE; ties go to the largest bandwidth.

        The bootstrap MSE is flat wherever enlarging ``h`` adds no
        informative observation, and among equal errors the smoother
        estimate is preferred.
        """
        mse = self.mse
        return int(np.flatnonzero(mse <= mse.min() * (1 + 1e-12))[-1])

    @property
    def best(self) -> float:
        return float(self.grid[self.argmin])


@dataclass(frozen=True)
class BandwidthSearch:
    """Outcome of :func:`select_bandwidth` at one covariate value.

    ``searches`` lists every grid evaluated, in order.  ``at_boundary`` is
    true when the minimizer is an endpoint of the final grid;
    ``coarse_at_boundary`` does the same for the very first grid.
    Bandwidths leaving ``x`` without neighbours are counted in
    ``n_infeasible`` and never selected.
    """

    center: float
    selected: float
    pilot: float
    reference_cure: float
    searches: tuple
    at_boundary: bool
    coarse_at_boundary: bool
    common_random_numbers: bool = True


def _search(sample, x, grid, T, D, reference, spec):
    cure = _resampled_cure(sample.x, T, D, x, grid, spec)
    mse = _mse_from_cure(cure, reference)
    if not np.any(np.isfinite(mse)):
        raise EmptyNeighborhood(x, float(grid[-1]), f"every bandwidth in the grid leaves x={x} without neighbours")
    return StageResult(np.asarray(grid), mse, T.shape[0], int(np.sum(~np.isfinite(mse))))


def _refine(grid: np.ndarray, best: float, num: int) -> np.ndarray:
    r = grid[1] / grid[0]
    return np.geomspace(best / r, best * r, num)


def select_bandwidth(
    sample: SurvivalSample,
    x: float,
    config: BootstrapConfig = BootstrapConfig(),
    key: Sequence[int] = (),
    spec: Kernel = Kernel.EPANECHNIKOV,
) -> BandwidthSearch:
    """Bootstrap bandwidth for the cure-probability estimator at ``x``.

    Resamples of stage ``s`` come from ``substream(config.master_seed,
    STREAM_BOOTSTRAP, *key, s)``; callers pass a distinct ``key`` per work
    item (e.g. replication and grid index).  Within a stage the same
    resamples serve both grid searches.
    """
    g = pilot_bandwidth(config.pilot, sample, x)
    reference = incidence(sample, x, g, spec)
    lo, hi = config.stage1_range or (0.2, sample.covariate_range)
    if not hi > lo:
        raise ValueError(f"empty stage-1 range ({lo}, {hi})")

    rng = substream(config.master_seed, STREAM_BOOTSTRAP, *key, 1)
    T, D = _resample_arrays(sample, g, rng, config.stage1_resamples, spec)
    grid = np.geomspace(lo, hi, config.stage1_grid_size)
    first = _search(sample, x, grid, T, D, reference, spec)
    second = _search(sample, x, _refine(grid, first.best, config.stage1_grid_size), T, D, reference, spec)
    searches = [first, second]

    if config.two_stage:
        rng = substream(config.master_seed, STREAM_BOOTSTRAP, *key, 2)
        T, D = _resample_arrays(sample, g, rng, config.stage2_resamples, spec)
        prev = searches[-1]
        for _ in range(2):
            grid = _refine(prev.grid, prev.best, config.stage2_grid_size)
            prev = _search(sample, x, grid, T, D, reference, spec)
            searches.append(prev)

    final = searches[-1]
    return BandwidthSearch(
        center=float(x),
        selected=final.best,
        pilot=float(g),
        reference_cure=float(reference),
        searches=tuple(searches),
        at_boundary=final.argmin in (0, final.grid.size - 1),
        coarse_at_boundary=first.argmin in (0, first.grid.size - 1),
    )


# -- smoothing across the covariate grid ---------------------------------------


def smooth_bandwidths(hs) -> np.ndarray:
    """Moving average of local bandwidths over an equispaced covariate grid.

    Point ``l`` of ``x_0 < ... < x_m`` averages ``h_j`` for
    ``max(0, l-5) <= j <= min(m, l+5)``: 11 terms inside, ``l+6`` or
    ``m-l+6`` terms near the ends.
    """
    hs = np.asarray(hs, dtype=float)
    m = hs.size - 1
    if m < 10:
        raise GridTooSmall(f"need at least 11 grid points, got {hs.size}")
    if np.any(hs <= 0):
        raise ValueError("bandwidths must be positive")
    out = np.empty_like(hs)
    for l in range(m + 1):
        lo, hi = max(0, l - 5), min(m, l + 5)
        out[l] = math.fsum(hs[lo : hi + 1]) / (hi - lo + 1)
    return out
