"""Beran's conditional product-limit estimator and related quantities.

Observations are kept in a canonical order: by time, uncensored before
censored at tied times, then by covariate.  All sums ``sum_{r >= i}``
below refer to that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import EmptyNeighborhood
from .kernel_weights import Kernel, kernel_eval, nw_weights

__all__ = [
    "Observation",
    "SurvivalSample",
    "BeranCurve",
    "DiscreteLaw",
    "beran_fit",
    "cumulative_hazard",
    "conditional_empirical",
    "subdistribution_estimates",
    "canonical_order",
]


class Observation(NamedTuple):
    x: float
    t: float
    delta: int


def canonical_order(x, t, delta, axis=-1):
    """Sort permutation: time ascending, uncensored first, covariate ascending.

    Works along ``axis`` for stacked samples (e.g. bootstrap resamples).
    """
    x, t, delta = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(t, float), np.asarray(delta)
    )
    return np.lexsort((x, -delta.astype(np.int8), t), axis=axis)


def _freeze(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SurvivalSample:
    """Immutable right-censored sample ``(X_i, T_i, delta_i)``.

    ``x``, ``t`` and ``delta`` keep the input order; ``order`` is the
    canonical permutation and the ``*_sorted`` attributes are the data
    rearranged by it.
    """

    x: np.ndarray
    t: np.ndarray
    delta: np.ndarray
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        d = np.asarray(self.delta).ravel()
        if not (x.shape == t.shape == d.shape):
            raise ValueError("x, t and delta must have the same length")
        if x.size == 0:
            raise ValueError("sample must contain at least one observation")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("times must be finite and non-negative")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        if not np.all((d == 0) | (d == 1)):
            raise ValueError("status must be 0 (censored) or 1 (uncensored)")
        d = d.astype(np.int64)
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "t", _freeze(t))
        object.__setattr__(self, "delta", _freeze(d))
        object.__setattr__(self, "order", _freeze(canonical_order(x, t, d)))

    @classmethod
    def from_observations(cls, observations: Iterable[Observation]):
        obs = [Observation(*o) for o in observations]
        return cls(
            x=[o.x for o in obs], t=[o.t for o in obs], delta=[o.delta for o in obs]
        )

    def observations(self):
        return [Observation(float(a), float(b), int(c)) for a, b, c in zip(self.x, self.t, self.delta)]

    def __len__(self):
        return self.x.size

    @property
    def n(self):
        return self.x.size

    @property
    def x_sorted(self):
        return self.x[self.order]

    @property
    def t_sorted(self):
        return self.t[self.order]

    @property
    def delta_sorted(self):
        return self.delta[self.order]

    @property
    def largest_uncensored_time(self):
        """``T1max``, or ``None`` when every observation is censored."""
        if not self.delta.any():
            return None
        return float(self.t[self.delta == 1].max())

    @property
    def covariate_range(self):
        return float(self.x.max() - self.x.min())

    def __eq__(self, other):
        if not isinstance(other, SurvivalSample):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.delta, other.delta)
        )

    __hash__ = None


# -- vectorized kernels --------------------------------------------------------


def hazard_increments(delta_sorted, w_sorted):
    """Increments ``delta_i w_i / sum_{r >= i} w_r`` along the last axis.

    ``w_sorted`` may be unnormalized; a zero tail sum yields a zero
    increment (no information, no jump).
    """
    w = np.asarray(w_sorted, dtype=float)
    tail = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    num = delta_sorted * w
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tail > 0.0, num / np.where(tail > 0.0, tail, 1.0), 0.0)


def survival_path(delta_sorted, w_sorted):
    """Beran survival after each sorted observation (running product)."""
    return np.cumprod(1.0 - hazard_increments(delta_sorted, w_sorted), axis=-1)


def _sorted_kernel(sample: SurvivalSample, x, h, spec):
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h!r}")
    k = kernel_eval(spec, (x - sample.x_sorted) / h)
    if k.sum() <= 0.0:
        raise EmptyNeighborhood(x, h)
    return k / k.sum()


# -- public estimators ---------------------------------------------------------


@dataclass(frozen=True)
class BeranCurve:
    """Right-continuous step function, 1 before the first jump."""

    center: float
    bandwidth: float
    jump_times: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.values.size == 0:
            vals = np.ones_like(t)
        else:
            idx = np.searchsorted(self.jump_times, t, side="right") - 1
            vals = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 1.0)
        return vals if vals.ndim else float(vals)


def _step_from_path(t_sorted, path, keep):
    """Collapse a per-observation path into a step function.

    ``keep`` marks observations that produce a jump; tied times are merged
    keeping the value after the last tied observation.
    """
    last_of_time = np.r_[t_sorted[1:] != t_sorted[:-1], True]
    # value after all observations sharing a time
    grp_end = np.flatnonzero(last_of_time)
    grp_id = np.cumsum(np.r_[0, last_of_time[:-1]])
    grp_has_jump = np.zeros(grp_end.size, dtype=bool)
    np.logical_or.at(grp_has_jump, grp_id, keep)
    ends = grp_end[grp_has_jump]
    return _freeze(t_sorted[ends]), _freeze(path[ends])


def beran_fit(sample: SurvivalSample, x: float, h: float, spec: Kernel = Kernel.EPANECHNIKOV) -> BeranCurve:
    """Beran estimate of the conditional survival ``S(t | x)``."""
    w = _sorted_kernel(sample, x, h, spec)
    d = sample.delta_sorted
    path = survival_path(d, w)
    keep = (d == 1) & (w > 0)
    jt, vals = _step_from_path(sample.t_sorted, path, keep)
    return BeranCurve(center=float(x), bandwidth=float(h), jump_times=jt, values=vals)


def cumulative_hazard(sample: SurvivalSample, x: float, h: float, t, spec: Kernel = Kernel.EPANECHNIKOV):
    """Conditional cumulative hazard estimate at time(s) ``t``."""
    w = _sorted_kernel(sample, x, h, spec)
    cum = np.cumsum(hazard_increments(sample.delta_sorted, w))
    idx = np.searchsorted(sample.t_sorted, np.asarray(t, dtype=float), side="right") - 1
    out = np.where(idx >= 0, cum[np.maximum(idx, 0)], 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite law putting mass ``probs[i]`` on ``(times[i], deltas[i])``."""

    times: np.ndarray
    deltas: np.ndarray
    probs: np.ndarray

    def sample(self, rng: np.random.Generator, size):
        idx = rng.choice(self.probs.size, size=size, p=self.probs)
        return self.times[idx], self.deltas[idx]


def conditional_empirical(sample: SurvivalSample, x: float, g: float, spec: Kernel = Kernel.EPANECHNIKOV) -> DiscreteLaw:
    """Kernel-weighted empirical law of ``(T, delta)`` given ``X = x``.

    Atoms follow the input order of ``sample``.
    """
    w = nw_weights(sample.x, x, g, spec).weights
    return DiscreteLaw(times=sample.t, deltas=sample.delta, probs=w)


def subdistribution_estimates(sample: SurvivalSample, x: float, h: float, t, spec: Kernel = Kernel.EPANECHNIKOV):
    """Weighted estimates of ``H(t|x) = P(T <= t | x)`` and ``H1(t|x) = P(T <= t, delta = 1 | x)``."""
    w = nw_weights(sample.x, x, h, spec).weights
    t = np.asarray(t, dtype=float)
    below = sample.t[:, None] <= t.ravel()[None, :]
    H = (w[:, None] * below).sum(axis=0).reshape(t.shape)
    H1 = ((w * sample.delta)[:, None] * below).sum(axis=0).reshape(t.shape)
    if t.ndim == 0:
        return float(H), float(H1)
    return H, H1
