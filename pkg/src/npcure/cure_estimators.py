"""Nonparametric incidence and latency estimators for mixture cure models.

Under the mixture cure model ``S(t|x) = 1 - p(x) + p(x) S0(t|x)``, the
cure probability ``1 - p(x)`` is estimated by the Beran survival curve
evaluated at the largest uncensored time, and the latency ``S0`` by
rearranging the mixture identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beran import (
    BeranCurve,
    SurvivalSample,
    _sorted_kernel,
    _step_from_path,
    hazard_increments,
    survival_path,
)
from .exceptions import CuredSlice, DomainError
from .kernel_weights import Kernel

__all__ = [
    "CureFit",
    "IdentifiabilityReport",
    "CURED_TOLERANCE",
    "incidence",
    "latency",
    "cure_fit",
    "hazard_jumps",
    "local_loglikelihood",
    "identifiability_diagnostic",
]

CURED_TOLERANCE = 1e-10


def incidence(sample: SurvivalSample, x: float, h: float, spec: Kernel = Kernel.EPANECHNIKOV) -> float:
    """Estimated cure probability ``1 - p_h(x)``.

    Equal to the Beran curve at ``T1max``; 1 when nothing is uncensored.
    """
    w = _sorted_kernel(sample, x, h, spec)
    return float(np.prod(1.0 - hazard_increments(sample.delta_sorted, w)))


def _latency_parts(sample, x, b, spec):
    w = _sorted_kernel(sample, x, b, spec)
    d = sample.delta_sorted
    path = survival_path(d, w)
    p_hat = 1.0 - path[-1]
    if p_hat < CURED_TOLERANCE:
        raise CuredSlice(
            f"estimated uncure probability {p_hat:.3g} at x={x!r}, b={b!r}; latency undefined"
        )
    return w, d, path, p_hat


def latency(sample: SurvivalSample, x: float, b: float, t, spec: Kernel = Kernel.EPANECHNIKOV):
    """Latency estimate ``S0_b(t|x)``, clipped to [0, 1].

    Raises
    ------
    CuredSlice
        If the estimated probability of being uncured is below
        ``CURED_TOLERANCE``.
    """
    _, _, path, p_hat = _latency_parts(sample, x, b, spec)
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(sample.t_sorted, t, side="right") - 1
    s = np.where(idx >= 0, path[np.maximum(idx, 0)], 1.0)
    out = np.clip((s - path[-1]) / p_hat, 0.0, 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CureFit:
    """Incidence and latency estimates at one covariate value.

    ``latency_preclip`` holds the latency values before clipping to
    [0, 1]; they differ from ``latency_curve.values`` only when the
    rearranged mixture identity leaves the unit interval.
    """

    center: float
    incidence_bandwidth: float
    latency_bandwidth: Optional[float]
    cure_probability: float
    latency_curve: Optional[BeranCurve]
    latency_preclip: Optional[np.ndarray] = None


def cure_fit(
    sample: SurvivalSample,
    x: float,
    h: float,
    b: Optional[float] = None,
    spec: Kernel = Kernel.EPANECHNIKOV,
) -> CureFit:
    """Estimate the cure probability with bandwidth ``h`` and, if ``b`` is
    given, the latency curve with bandwidth ``b``."""
    cure = incidence(sample, x, h, spec)
    if b is None:
        return CureFit(float(x), float(h), None, cure, None)
    w, d, path, p_hat = _latency_parts(sample, x, b, spec)
    raw = (path - path[-1]) / p_hat
    jt, pre = _step_from_path(sample.t_sorted, raw, (d == 1) & (w > 0))
    curve = BeranCurve(float(x), float(b), jt, np.clip(pre, 0.0, 1.0))
    return CureFit(float(x), float(h), float(b), cure, curve, pre)


def _likelihood_weights(sample, x, h, spec):
    w = _sorted_kernel(sample, x, h, spec)
    D = sample.delta_sorted * w
    # sum_{r > i} B_r
    after = np.r_[np.cumsum(w[::-1])[::-1][1:], 0.0]
    return D, after


def hazard_jumps(sample: SurvivalSample, x: float, h: float, spec: Kernel = Kernel.EPANECHNIKOV) -> np.ndarray:
    """Maximizers of the local log-likelihood, in the canonical sample order.

    ``lambda_i = D_i / (sum_{r > i} B_r + D_i)`` with ``D_i = delta_i B_i``;
    zero where the denominator vanishes.
    """
    D, after = _likelihood_weights(sample, x, h, spec)
    den = after + D
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, D / np.where(den > 0, den, 1.0), 0.0)


def local_loglikelihood(sample: SurvivalSample, x: float, h: float, lambdas, spec: Kernel = Kernel.EPANECHNIKOV) -> float:
    """Local log-likelihood of the discrete hazards ``lambdas`` around ``x``.

    ``lambdas`` is aligned with the canonical sample order.  Terms with a
    zero coefficient are dropped (``0 log 0 = 0``).

    Raises
    ------
    DomainError
        If a lambda lies outside [0, 1] or a logarithm with a positive
        coefficient would be taken of zero.
    """
    lam = np.asarray(lambdas, dtype=float)
    D, after = _likelihood_weights(sample, x, h, spec)
    if lam.shape != D.shape:
        raise ValueError(f"expected {D.size} hazards, got shape {lam.shape}")
    if np.any((lam < 0) | (lam > 1)) or not np.all(np.isfinite(lam)):
        raise DomainError("hazards must lie in [0, 1]")
    if np.any((D > 0) & (lam == 0)):
        raise DomainError("zero hazard at an index with positive uncensored weight")
    if np.any((after > 0) & (lam == 1)):
        raise DomainError("unit hazard at an index with positive remaining weight")
    pos = D > 0
    rest = after > 0
    return float(np.sum(D[pos] * np.log(lam[pos])) + np.sum(after[rest] * np.log1p(-lam[rest])))


@dataclass(frozen=True)
class IdentifiabilityReport:
    largest_uncensored_time: Optional[float]
    largest_time: float
    n_censored_beyond: int
    warning: bool
    note: str


def identifiability_diagnostic(sample: SurvivalSample) -> IdentifiabilityReport:
    """Check whether censored observations follow the largest uncensored time.

    With none of them, the data give no support to a censoring range that
    extends past the latency support, and the estimated cure probability
    is 0 wherever the last uncensored observation has weight.
    """
    t1 = sample.largest_uncensored_time
    tmax = float(sample.t.max())
    if t1 is None:
        return IdentifiabilityReport(
            None, tmax, int(sample.n), False,
            "no uncensored observations: T1max undefined, cure probability is 1 everywhere",
        )
    beyond = int(np.sum((sample.delta == 0) & (sample.t > t1)))
    if beyond == 0:
        return IdentifiabilityReport(
            t1, tmax, 0, True,
            "largest observed time is uncensored: cure probability estimate is 0 "
            "wherever that observation has positive weight",
        )
    return IdentifiabilityReport(t1, tmax, beyond, False, "ok")
