"""Closed-form truth for the two benchmark cure models and the AMSE oracle.

Both models share the design: ``X ~ U(-20, 20)`` and exponential
censoring with rate 0.3 independent of ``(X, Y)``.

* Model 1: logistic uncure probability, truncated exponential latency
  with support ``[0, 4.605]``.
* Model 2: cubic-logistic uncure probability, latency an equal mixture
  of two ``exp(-a t^5)`` survival functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .exceptions import DegenerateCurvature, QuadratureFailure
from .kernel_weights import Kernel, kernel_constants

__all__ = [
    "ModelTruth",
    "AmseReport",
    "model1",
    "model2",
    "get_model",
    "true_incidence",
    "true_latency",
    "true_subdistributions",
    "amse",
    "amse_report",
    "amse_optimal_bandwidth",
    "QUAD_TOL",
]

QUAD_TOL = 1e-9
CENSORING_RATE = 0.3
X_LOW, X_HIGH = -20.0, 20.0


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class ModelTruth:
    """Population quantities of a simulation model.

    ``latency`` and ``latency_density`` are vectorized in ``t`` and ``x``.
    ``tau0`` is the right end of the latency support (for Model 2 the
    point beyond which ``S0(t | -20) < 1e-12``).
    """

    name: str
    params: dict
    linear_predictor: Callable
    latency: Callable
    latency_density: Callable
    tau0: float
    censoring_rate: float = CENSORING_RATE
    x_low: float = X_LOW
    x_high: float = X_HIGH

    def p(self, x):
        """Probability of being uncured given ``X = x``."""
        return _logistic(self.linear_predictor(np.asarray(x, dtype=float)))

    def survival(self, t, x):
        p = self.p(x)
        return 1.0 - p + p * self.latency(t, x)

    def censoring_survival(self, t):
        return np.exp(-self.censoring_rate * np.asarray(t, dtype=float))

    def covariate_density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x_low) & (x <= self.x_high)
        return np.where(inside, 1.0 / (self.x_high - self.x_low), 0.0)

    def covariate_density_derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


# -- Model 1 -------------------------------------------------------------------

_M1 = dict(beta0=0.476, beta1=0.358, tau0=4.605)


def _m1_rate(x):
    return np.exp((np.asarray(x, dtype=float) + 20.0) / 40.0)


def _m1_latency(t, x):
    t, lam = np.broadcast_arrays(np.asarray(t, float), _m1_rate(x))
    tau = _M1["tau0"]
    tail = np.exp(-lam * tau)
    s = (np.exp(-lam * t) - tail) / (1.0 - tail)
    return np.where(t <= tau, np.clip(s, 0.0, 1.0), 0.0)


def _m1_density(t, x):
    t, lam = np.broadcast_arrays(np.asarray(t, float), _m1_rate(x))
    tau = _M1["tau0"]
    f = lam * np.exp(-lam * t) / (1.0 - np.exp(-lam * tau))
    return np.where((t >= 0) & (t <= tau), f, 0.0)


def model1() -> ModelTruth:
    b0, b1 = _M1["beta0"], _M1["beta1"]
    return ModelTruth(
        name="model1",
        params=dict(_M1, rate="exp((x+20)/40)"),
        linear_predictor=lambda x: b0 + b1 * x,
        latency=_m1_latency,
        latency_density=_m1_density,
        tau0=_M1["tau0"],
    )


# -- Model 2 -------------------------------------------------------------------

_M2 = dict(beta0=0.0476, beta1=-0.2558, beta2=-0.0027, beta3=0.0020, fast_rate=100.0)


def _m2_alpha(x):
    return 0.2 * np.exp((np.asarray(x, dtype=float) + 20.0) / 40.0)


def _m2_latency(t, x):
    t = np.asarray(t, dtype=float)
    t5 = t**5
    return 0.5 * (np.exp(-_m2_alpha(x) * t5) + np.exp(-_M2["fast_rate"] * t5))


def _m2_density(t, x):
    t = np.asarray(t, dtype=float)
    a = _m2_alpha(x)
    c = _M2["fast_rate"]
    t4 = t**4
    t5 = t4 * t
    return 0.5 * (5 * a * t4 * np.exp(-a * t5) + 5 * c * t4 * np.exp(-c * t5))


def _m2_tau0():
    # S0(t|-20) < 1e-12, slow component dominates
    a = float(_m2_alpha(X_LOW))
    return (math.log(0.5e12) / a) ** 0.2


def model2() -> ModelTruth:
    b0, b1, b2, b3 = (_M2[k] for k in ("beta0", "beta1", "beta2", "beta3"))
    return ModelTruth(
        name="model2",
        params=dict(_M2, alpha="0.2*exp((x+20)/40)"),
        linear_predictor=lambda x: b0 + x * (b1 + x * (b2 + x * b3)),
        latency=_m2_latency,
        latency_density=_m2_density,
        tau0=_m2_tau0(),
    )


def get_model(model) -> ModelTruth:
    """Look up a model by id (``1``, ``2``, ``"model1"`` ...)."""
    key = str(model).lower().removeprefix("model")
    if key == "1":
        return model1()
    if key == "2":
        return model2()
    raise ValueError(f"unknown model {model!r}; expected 1 or 2")


# -- pointwise truth -----------------------------------------------------------


def true_incidence(truth: ModelTruth, x):
    """True cure probability ``1 - p(x)``."""
    return 1.0 - truth.p(x)


def true_latency(truth: ModelTruth, x, t):
    return truth.latency(t, x)


def _quad(f, a, b, tol=QUAD_TOL):
    if b <= a:
        return 0.0
    val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=500)
    if not err <= tol:
        raise QuadratureFailure(f"quadrature error {err:.2e} exceeds {tol:.0e} on [{a}, {b}]")
    return val


def true_subdistributions(truth: ModelTruth, x: float, t: float):
    """``(H(t|x), H1(t|x), G(t))`` for the observed time and the censoring law."""
    gbar = float(truth.censoring_survival(t))
    H = 1.0 - float(truth.survival(t, x)) * gbar
    p = float(truth.p(x))
    upper = min(float(t), truth.tau0)
    H1 = _quad(
        lambda u: float(truth.censoring_survival(u) * p * truth.latency_density(u, x)),
        0.0,
        upper,
    )
    return H, H1, 1.0 - gbar


# -- AMSE ----------------------------------------------------------------------


@dataclass(frozen=True)
class AmseReport:
    """Asymptotic MSE ingredients at ``x`` for sample size ``n``.

    ``AMSE(h) = variance_coef / (n h) + bias_coef * h**4``.
    """

    x: float
    n: int
    mu: float
    sigma2: float
    variance_coef: float
    bias_coef: float
    h_amse: float

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        return self.variance_coef / (self.n * h) + self.bias_coef * h**4


def _sigma2(truth, x):
    p = float(truth.p(x))

    def integrand(t):
        s = float(truth.survival(t, x))
        return float(p * truth.latency_density(t, x) / (s * s * truth.censoring_survival(t)))

    return _quad(integrand, 0.0, truth.tau0) / float(truth.covariate_density(x))


def _phi_diff(truth, x, coeffs, step):
    """``sum_k c_k Phi(x + k step, x)`` with the difference taken inside one integral.

    Censoring cancels from both terms of Phi, leaving

        Phi(u, x) = int p(u) f0(t|u) / S(t|x) dt
                    - int S(t|u) p(x) f0(t|x) / S(t|x)^2 dt.
    """
    shifts = [(k, c) for k, c in coeffs if c != 0.0]
    px = float(truth.p(x))

    def integrand(t):
        sx = float(truth.survival(t, x))
        fx = float(truth.latency_density(t, x))
        acc = 0.0
        for k, c in shifts:
            u = x + k * step
            pu = float(truth.p(u))
            acc += c * (pu * float(truth.latency_density(t, u)) / sx - float(truth.survival(t, u)) * px * fx / (sx * sx))
        return acc

    # pieces of the difference are O(step^2); scale the tolerance accordingly
    return _quad(integrand, 0.0, truth.tau0, tol=QUAD_TOL * step * step)


def _phi_derivatives(truth, x, step):
    """Central differences with one Richardson step for Phi' and Phi''."""

    def d1(s):
        return _phi_diff(truth, x, [(1, 1.0), (-1, -1.0)], s) / (2 * s)

    def d2(s):
        return _phi_diff(truth, x, [(1, 1.0), (0, -2.0), (-1, 1.0)], s) / (s * s)

    r1 = (4 * d1(step / 2) - d1(step)) / 3
    r2 = (4 * d2(step / 2) - d2(step)) / 3
    return r1, r2


def amse_report(
    truth: ModelTruth,
    x: float,
    n: int,
    spec: Kernel = Kernel.EPANECHNIKOV,
    curvature_tol: float = 1e-8,
) -> AmseReport:
    """Compute the AMSE coefficients and the AMSE-optimal bandwidth at ``x``.

    Raises
    ------
    DegenerateCurvature
        If ``|mu(x)| < curvature_tol``, where the optimal bandwidth is
        unbounded.
    """
    c_k, d_k = kernel_constants(spec)
    step = 1e-3 * (truth.x_high - truth.x_low)
    dphi, d2phi = _phi_derivatives(truth, x, step)
    m = float(truth.covariate_density(x))
    dm = float(truth.covariate_density_derivative(x))
    mu = (2.0 * dphi * dm + d2phi * m) / m
    sigma2 = _sigma2(truth, x)
    cure = 1.0 - float(truth.p(x))
    var_coef = cure**2 * c_k * sigma2
    bias_coef = (0.5 * d_k * cure * mu) ** 2
    if abs(mu) < curvature_tol:
        raise DegenerateCurvature(f"mu({x}) = {mu:.3g}: AMSE bandwidth is unbounded")
    h_opt = (c_k * sigma2 / (d_k**2 * mu**2)) ** 0.2 * n**-0.2
    return AmseReport(float(x), int(n), mu, sigma2, var_coef, bias_coef, h_opt)


def amse(truth: ModelTruth, x: float, h, n: int, spec: Kernel = Kernel.EPANECHNIKOV):
    """Asymptotic mean squared error of the cure-probability estimator."""
    c_k, d_k = kernel_constants(spec)
    step = 1e-3 * (truth.x_high - truth.x_low)
    dphi, d2phi = _phi_derivatives(truth, x, step)
    m = float(truth.covariate_density(x))
    mu = (2.0 * dphi * float(truth.covariate_density_derivative(x)) + d2phi * m) / m
    cure = 1.0 - float(truth.p(x))
    h = np.asarray(h, dtype=float)
    out = cure**2 * c_k * _sigma2(truth, x) / (n * h) + (h**2 * 0.5 * d_k * cure * mu) ** 2
    return out if out.ndim else float(out)


def amse_optimal_bandwidth(truth: ModelTruth, x: float, n: int, spec: Kernel = Kernel.EPANECHNIKOV) -> float:
    return amse_report(truth, x, n, spec).h_amse
