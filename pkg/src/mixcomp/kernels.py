"""Kernel cross-products and Hilbert-Schmidt distances between rank-one operators.

For a smoothing kernel ``K`` with bandwidth ``h`` (``K_h(x) = K(x/h)/h``) the
cross-product

    phi_h(a, b) = integral of K_h(a - u) K_h(b - u) du

has a closed form for the two supported families:

* gaussian: ``exp(-(a-b)^2 / (4 h^2)) / (2 h sqrt(pi))``
* uniform:  ``max(2h - |a-b|, 0) / (4 h^2)``

Multivariate components use the d-fold product kernel, whose cross-product is
the coordinatewise product of the univariate ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .exceptions import DimensionMismatch, InputError

Family = Literal["gaussian", "uniform"]
FAMILIES: tuple[str, ...] = ("gaussian", "uniform")

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, bandwidth and dimension of the component it smooths."""

    family: Family = "gaussian"
    h: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not (np.isfinite(self.h) and self.h > 0):
            raise InputError(f"bandwidth must be positive and finite, got {self.h!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")


def phi_absdiff(family: str, h: float, absdiff):
    """Univariate cross-product as a function of ``|a - b|`` (scalar or array).

    Every other routine in the package funnels through here so that scalar and
    Gram-matrix evaluations agree bit for bit.
    """
    absdiff = np.asarray(absdiff, dtype=float)
    if family == "gaussian":
        return np.exp(-(absdiff * absdiff) / (4.0 * h * h)) / (2.0 * h * _SQRT_PI)
    if family == "uniform":
        two_h = 2.0 * h
        return np.where(absdiff <= two_h, (two_h - np.minimum(absdiff, two_h)) / (4.0 * h * h), 0.0)
    raise InputError(f"unknown kernel family {family!r}")


def phi(spec: KernelSpec, a: float, b: float) -> float:
    """Closed-form ``phi_h(a, b)`` for a one-dimensional kernel."""
    if spec.dim != 1:
        raise DimensionMismatch(f"phi expects a 1-d kernel spec, got dim={spec.dim}")
    return float(phi_absdiff(spec.family, spec.h, abs(float(a) - float(b))))


def _as_vector(x, dim: int, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({dim},)")
    return v


def phi_vec(spec: KernelSpec, a: Sequence[float], b: Sequence[float]) -> float:
    """Product-kernel cross-product: the product of ``phi`` over coordinates."""
    a = _as_vector(a, spec.dim, "a")
    b = _as_vector(b, spec.dim, "b")
    out = 1.0
    for ai, bi in zip(a, b):
        out *= float(phi_absdiff(spec.family, spec.h, abs(ai - bi)))
    return out


def phi_diag(spec: KernelSpec) -> float:
    """``phi^d_h(a, a)``, the same for every ``a``."""
    return float(phi_absdiff(spec.family, spec.h, 0.0)) ** spec.dim


def hs_dist_sq(k1: KernelSpec, k2: KernelSpec, x, x_prime) -> float:
    """Squared Hilbert-Schmidt distance between the rank-one operators of two observations.

    ``x`` and ``x_prime`` are pairs ``(x1, x2)`` holding one vector per component.
    Negative roundoff is clamped to zero.
    """
    x1, x2 = x
    y1, y2 = x_prime
    val = (
        phi_vec(k1, x1, x1) * phi_vec(k2, x2, x2)
        + phi_vec(k1, y1, y1) * phi_vec(k2, y2, y2)
        - 2.0 * phi_vec(k1, x1, y1) * phi_vec(k2, x2, y2)
    )
    return max(val, 0.0)


def analytic_L(k1: KernelSpec, k2: KernelSpec) -> float:
    """Distribution-free supremum of the pairwise Hilbert-Schmidt distance.

    The cross term vanishes as the two observations separate, for both
    families, so the supremum is ``sqrt(2 * phi1(a,a) * phi2(a,a))``.
    """
    return math.sqrt(2.0 * phi_diag(k1) * phi_diag(k2))


def kernel_density(family: str, h: float, x):
    """``K_h(x)`` for the standard gaussian or the uniform density on [-1, 1]."""
    z = np.asarray(x, dtype=float) / h
    if family == "gaussian":
        return np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * h)
    if family == "uniform":
        return np.where(np.abs(z) <= 1.0, 0.5 / h, 0.0)
    raise InputError(f"unknown kernel family {family!r}")


def phi_quadrature(spec: KernelSpec, a: float, b: float, grid_step: float = 1e-3,
                   grid_halfwidth: float = 10.0) -> float:
    """Midpoint-rule approximation of ``phi_h(a, b)``; a test oracle for :func:`phi`."""
    if not grid_step > 0:
        raise InputError("grid_step must be positive")
    lo = min(a, b) - grid_halfwidth
    hi = max(a, b) + grid_halfwidth
    n = max(int(math.ceil((hi - lo) / grid_step)), 1)
    step = (hi - lo) / n
    u = lo + step * (np.arange(n) + 0.5)
    vals = kernel_density(spec.family, spec.h, a - u) * kernel_density(spec.family, spec.h, b - u)
    return float(step * vals.sum())
