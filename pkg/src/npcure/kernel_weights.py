"""Kernels and Nadaraya-Watson weights.

Every estimator in the package localizes the sample around a covariate
value ``x`` with the weights

    B_i(x) = K((x - X_i) / h) / sum_j K((x - X_j) / h)

where ``K`` is a compactly supported symmetric density.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyNeighborhood

__all__ = [
    "Kernel",
    "WeightVector",
    "kernel_eval",
    "kernel_constants",
    "kernel_matrix",
    "nw_weights",
]


class Kernel(enum.Enum):
    """Supported kernels. All vanish outside the open interval (-1, 1)."""

    EPANECHNIKOV = "epanechnikov"

    def __call__(self, u):
        return kernel_eval(self, u)


# (int K^2, int v^2 K) in closed form
_CONSTANTS = {
    Kernel.EPANECHNIKOV: (0.6, 0.2),
}


def kernel_eval(spec: Kernel, u):
    """Evaluate the kernel density ``K(u)``; scalar in, scalar out."""
    u = np.asarray(u, dtype=float)
    if spec is Kernel.EPANECHNIKOV:
        out = np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown kernel {spec!r}")
    return out if out.ndim else float(out)


def kernel_constants(spec: Kernel = Kernel.EPANECHNIKOV) -> tuple[float, float]:
    """Return ``(c_K, d_K) = (int K^2(v) dv, int v^2 K(v) dv)``."""
    return _CONSTANTS[spec]


@dataclass(frozen=True)
class WeightVector:
    """Normalized kernel weights aligned with the sample order."""

    weights: np.ndarray
    center: float
    bandwidth: float

    def __len__(self):
        return len(self.weights)


def kernel_matrix(xs, centers, h, spec: Kernel = Kernel.EPANECHNIKOV):
    """Unnormalized kernel values ``K((c - X_j) / h)``.

    ``h`` may be a scalar or an array broadcasting against ``centers``;
    the result has shape ``broadcast(centers, h).shape + (len(xs),)``.
    Ratios of these values equal ratios of NW weights, which is all the
    product-limit estimators need.
    """
    xs = np.asarray(xs, dtype=float)
    centers = np.asarray(centers, dtype=float)
    h = np.asarray(h, dtype=float)
    c, hh = np.broadcast_arrays(centers, h)
    u = (c[..., None] - xs) / hh[..., None]
    return kernel_eval(spec, u)


def nw_weights(xs, x: float, h: float, spec: Kernel = Kernel.EPANECHNIKOV) -> WeightVector:
    """Nadaraya-Watson weights of the covariates ``xs`` at ``x``.

    Raises
    ------
    EmptyNeighborhood
        If no covariate lies strictly within ``h`` of ``x``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("xs must be non-empty")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h!r}")
    k = kernel_eval(spec, (x - xs) / h)
    total = k.sum()
    if total <= 0.0:
        raise EmptyNeighborhood(x, h)
    return WeightVector(weights=k / total, center=float(x), bandwidth=float(h))
