"""Sample generation for the benchmark models and Monte Carlo error studies.

Replication ``r`` at sample size ``n`` always uses the sample drawn from
``substream(plan.seed, STREAM_SAMPLE, n, r)``, so the incidence, latency
and bootstrap studies of one plan share their samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import ordered_map
from ._random import STREAM_SAMPLE, as_generator, substream
from .bandwidth_select import BootstrapConfig, select_bandwidth
from .beran import SurvivalSample, hazard_increments
from .exceptions import NpcureError
from .kernel_weights import Kernel, kernel_matrix
from .cure_estimators import CURED_TOLERANCE
from .truth_oracle import ModelTruth, get_model

__all__ = [
    "ExperimentPlan",
    "MonteCarloReport",
    "gen_sample",
    "draw_cohort",
    "replication_sample",
    "mc_incidence_mse",
    "mc_latency_mise",
    "mc_bootstrap_bandwidth_study",
    "incidence_mse_at",
]


def draw_cohort(truth: ModelTruth, n: int, seed=None, x=None) -> dict:
    """Draw ``n`` subjects with their latent variables.

    Returns a dict with ``x``, ``cured``, ``y`` (``inf`` when cured),
    ``c``, ``t`` and ``delta``.  Passing ``x`` (scalar or length ``n``)
    fixes the covariates instead of drawing them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    if x is None:
        x = rng.uniform(truth.x_low, truth.x_high, n)
    else:
        x = np.broadcast_to(np.asarray(x, dtype=float), (n,)).copy()
    cured = rng.random(n) >= truth.p(x)
    if truth.name == "model1":
        tau = truth.params["tau0"]
        lam = np.exp((x + 20.0) / 40.0)
        s = rng.random(n)
        tail = np.exp(-lam * tau)
        y = -np.log(s * (1.0 - tail) + tail) / lam
    elif truth.name == "model2":
        slow = rng.random(n) < 0.5
        u = rng.random(n)
        rate = np.where(slow, 0.2 * np.exp((x + 20.0) / 40.0), truth.params["fast_rate"])
        y = (-np.log1p(-u) / rate) ** 0.2
    else:  # pragma: no cover
        raise ValueError(f"no sampler for {truth.name}")
    y = np.where(cured, np.inf, y)
    c = rng.exponential(1.0 / truth.censoring_rate, n)
    t = np.minimum(y, c)
    delta = (y <= c).astype(np.int64)
    assert np.all(np.isfinite(t))
    return dict(x=x, cured=cured, y=y, c=c, t=t, delta=delta)


def gen_sample(truth: ModelTruth, n: int, seed=None) -> SurvivalSample:
    """Simulate a right-censored sample of size ``n`` from ``truth``."""
    d = draw_cohort(truth, n, seed)
    return SurvivalSample(x=d["x"], t=d["t"], delta=d["delta"])


def _log_grid(lo, hi, num):
    return tuple(float(v) for v in np.geomspace(lo, hi, num))


@dataclass(frozen=True)
class ExperimentPlan:
    """A Monte Carlo study over sample sizes, covariate points and bandwidths.

    ``estimator="oracle"`` replaces every estimate with the truth, which
    checks the bookkeeping (all errors must vanish).
    """

    model: int = 1
    sample_sizes: tuple = (100,)
    replications: int = 1000
    x_grid: tuple = tuple(np.linspace(-20.0, 20.0, 81).tolist())
    h_grid: tuple = _log_grid(1.2, 20.0, 100)
    b_grid: tuple = _log_grid(10.0, 40.0, 100)
    time_points: int = 512
    seed: int = 0
    estimator: str = "kernel"
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in np.atleast_1d(self.sample_sizes)))
        for name in ("x_grid", "h_grid", "b_grid"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ValueError("sample sizes must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.x_grid:
            raise ValueError("x_grid must be non-empty")
        for name in ("h_grid", "b_grid"):
            g = getattr(self, name)
            if not g or min(g) <= 0:
                raise ValueError(f"{name} must be non-empty and positive")
        if self.time_points < 2:
            raise ValueError("time_points must be >= 2")
        if self.estimator not in ("kernel", "oracle"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        get_model(self.model)

    @property
    def truth(self) -> ModelTruth:
        return get_model(self.model)

    @property
    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.truth.tau0, self.time_points)


@dataclass
class MonteCarloReport:
    """Tables produced by the Monte Carlo studies.

    ``mse``: rows ``(n, x, h, mse, used, failed)``.
    ``mise``: rows ``(n, x, b, mise, used, failed)``.
    ``bootstrap``: rows ``(n, x, q25, median, q75, mse_q25, mse_median,
    mse_q75, h_mse, mse_oracle, boundary_hits)``.
    """

    mse: Optional[np.ndarray] = None
    mise: Optional[np.ndarray] = None
    bootstrap: Optional[np.ndarray] = None

    MSE_COLUMNS = ("n", "x", "h", "mse", "used", "failed")
    MISE_COLUMNS = ("n", "x", "b", "mise", "used", "failed")
    BOOTSTRAP_COLUMNS = (
        "n", "x", "q25", "median", "q75", "mse_q25", "mse_median", "mse_q75",
        "h_mse", "mse_oracle", "boundary_hits",
    )

    def oracle_bandwidths(self, n: int) -> dict:
        """``{x: h}`` minimizing the Monte Carlo MSE over the plan's grid."""
        rows = self.mse[self.mse[:, 0] == n]
        out = {}
        for x in np.unique(rows[:, 1]):
            r = rows[rows[:, 1] == x]
            out[float(x)] = float(r[np.nanargmin(r[:, 3]), 2])
        return out


def replication_sample(plan: ExperimentPlan, n: int, r: int) -> SurvivalSample:
    return gen_sample(plan.truth, n, substream(plan.seed, STREAM_SAMPLE, n, r))


# -- vectorized per-sample evaluation ------------------------------------------


def _paths(sample: SurvivalSample, xs, bws, spec):
    """Beran paths for every (x, bandwidth) pair: shape (X, L, n), plus feasibility."""
    k = kernel_matrix(sample.x_sorted, np.asarray(xs)[:, None], np.asarray(bws)[None, :], spec)
    ok = k.sum(axis=-1) > 0
    path = np.cumprod(1.0 - hazard_increments(sample.delta_sorted, k), axis=-1)
    return path, ok


def _cure_table(sample, xs, hs, spec):
    path, ok = _paths(sample, xs, hs, spec)
    return np.where(ok, path[..., -1], np.nan)


def _incidence_task(args):
    plan, n, r = args
    truth = plan.truth
    xs = np.asarray(plan.x_grid)
    target = 1.0 - truth.p(xs)[:, None]
    if plan.estimator == "oracle":
        est = np.broadcast_to(target, (xs.size, len(plan.h_grid)))
    else:
        est = _cure_table(replication_sample(plan, n, r), xs, plan.h_grid, Kernel.EPANECHNIKOV)
    return (est - target) ** 2


def _reduce(errors):
    """Sum and count finite entries in a fixed order."""
    stack = np.stack(errors)
    ok = np.isfinite(stack)
    total = np.where(ok, stack, 0.0).sum(axis=0)
    used = ok.sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.where(used > 0, total / np.maximum(used, 1), np.nan)
    return mean, used, stack.shape[0] - used


def _table(n, xs, bws, mean, used, failed):
    X, Bw = np.meshgrid(xs, bws, indexing="ij")
    return np.column_stack([
        np.full(X.size, n, dtype=float), X.ravel(), Bw.ravel(), mean.ravel(),
        used.ravel().astype(float), failed.ravel().astype(float),
    ])


def mc_incidence_mse(plan: ExperimentPlan) -> MonteCarloReport:
    """Monte Carlo MSE of the cure-probability estimator on the (x, h) grid.

    Cells where a replication has no neighbours at ``x`` are excluded from
    that cell's mean and counted in ``failed``.
    """
    blocks = []
    for n in plan.sample_sizes:
        tasks = [(plan, n, r) for r in range(plan.replications)]
        mean, used, failed = _reduce(ordered_map(_incidence_task, tasks, plan.workers))
        blocks.append(_table(n, plan.x_grid, plan.h_grid, mean, used, failed))
    return MonteCarloReport(mse=np.vstack(blocks))


def _latency_task(args):
    plan, n, r = args
    truth = plan.truth
    xs = np.asarray(plan.x_grid)
    tg = plan.time_grid
    true_s0 = truth.latency(tg[None, :], xs[:, None])  # (X, tp)
    if plan.estimator == "oracle":
        est = np.broadcast_to(true_s0[:, None, :], (xs.size, len(plan.b_grid), tg.size))
        ok = np.ones((xs.size, len(plan.b_grid)), dtype=bool)
    else:
        sample = replication_sample(plan, n, r)
        path, ok = _paths(sample, xs, plan.b_grid, Kernel.EPANECHNIKOV)
        s_end = path[..., -1:]
        p_hat = 1.0 - s_end
        ok = ok & (p_hat[..., 0] >= CURED_TOLERANCE)
        idx = np.searchsorted(sample.t_sorted, tg, side="right") - 1
        s_t = np.where(idx >= 0, path[..., np.maximum(idx, 0)], 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            est = np.clip((s_t - s_end) / p_hat, 0.0, 1.0)
    ise = np.trapezoid((est - true_s0[:, None, :]) ** 2, tg, axis=-1)
    return np.where(ok, ise, np.nan)


def mc_latency_mise(plan: ExperimentPlan) -> MonteCarloReport:
    """Monte Carlo MISE of the latency estimator on the (x, b) grid.

    The squared error is integrated by the trapezoid rule over
    ``plan.time_grid``.  Cells with an empty neighbourhood or an estimated
    uncure probability below tolerance are excluded and counted.
    """
    blocks = []
    for n in plan.sample_sizes:
        tasks = [(plan, n, r) for r in range(plan.replications)]
        mean, used, failed = _reduce(ordered_map(_latency_task, tasks, plan.workers))
        blocks.append(_table(n, plan.x_grid, plan.b_grid, mean, used, failed))
    return MonteCarloReport(mise=np.vstack(blocks))


def incidence_mse_at(plan: ExperimentPlan, n: int, x: float, h: float) -> float:
    """Monte Carlo MSE at a single ``(x, h)`` using the plan's replications."""
    truth = plan.truth
    target = 1.0 - float(truth.p(x))
    errs = []
    for r in range(plan.replications):
        est = _cure_table(replication_sample(plan, n, r), [x], [h], Kernel.EPANECHNIKOV)[0, 0]
        errs.append((est - target) ** 2)
    errs = np.asarray(errs)
    return float(np.mean(errs[np.isfinite(errs)]))


def _bootstrap_task(args):
    plan, config, n, r = args
    sample = replication_sample(plan, n, r)
    out = np.full((len(plan.x_grid), 2), np.nan)
    for j, x in enumerate(plan.x_grid):
        try:
            res = select_bandwidth(sample, x, config, key=(n, r, j))
        except NpcureError:
            continue
        out[j] = res.selected, float(res.at_boundary)
    return out


def _mse_at_bandwidths(plan, n, xs, hs):
    """MSE at per-x bandwidths ``hs`` (shape (X, K)) over the plan's samples."""
    truth = plan.truth
    target = (1.0 - truth.p(np.asarray(xs)))[:, None]
    errs = []
    for r in range(plan.replications):
        sample = replication_sample(plan, n, r)
        est = np.empty(hs.shape)
        for j, x in enumerate(xs):
            est[j] = _cure_table(sample, [x], hs[j], Kernel.EPANECHNIKOV)[0]
        errs.append((est - target) ** 2)
    mean, _, _ = _reduce(errs)
    return mean


def mc_bootstrap_bandwidth_study(plan: ExperimentPlan, config: BootstrapConfig, mse_report: Optional[MonteCarloReport] = None) -> MonteCarloReport:
    """Distribution of bootstrap bandwidths and their Monte Carlo MSE.

    For each sample size and covariate point the bootstrap bandwidth is
    selected in every replication; the 25th, 50th and 75th percentiles
    are reported with the Monte Carlo MSE at each of them and at the grid
    minimizer ``h_mse`` of the plan's incidence study (computed here
    unless ``mse_report`` is given).
    """
    if mse_report is None:
        mse_report = mc_incidence_mse(plan)
    rows = []
    xs = np.asarray(plan.x_grid)
    for n in plan.sample_sizes:
        tasks = [(plan, config, n, r) for r in range(plan.replications)]
        sel = np.stack(ordered_map(_bootstrap_task, tasks, plan.workers))  # (m, X, 2)
        hstar = sel[..., 0]
        q = np.nanpercentile(hstar, [25, 50, 75], axis=0).T  # (X, 3)
        oracle = mse_report.oracle_bandwidths(n)
        h_mse = np.array([oracle[float(x)] for x in xs])
        mse = _mse_at_bandwidths(plan, n, xs, np.column_stack([q, h_mse]))
        hits = np.nansum(sel[..., 1], axis=0)
        for j, x in enumerate(xs):
            rows.append([n, x, *q[j], *mse[j, :3], h_mse[j], mse[j, 3], hits[j]])
    return MonteCarloReport(bootstrap=np.asarray(rows, dtype=float))
