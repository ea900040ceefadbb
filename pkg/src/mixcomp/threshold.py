"""Concentration statistics and the data-driven threshold on the estimation error.

The Hilbert-Schmidt error of the operator estimate obeys a Bennett/Pinelis type
tail bound

    P(err > tau) <= 2 exp{-(tau N / L) ln(1 + tau L / s2)}
                    * (1 + tau / L - (s2 / L^2) ln(1 + tau L / s2))^N

where ``L`` bounds the pairwise distance between rank-one observation operators
and ``s2`` is their variance.  Plugging in sample analogues and setting the
bound equal to ``delta`` gives the solved threshold; :func:`closed_form_threshold`
is the looser explicit version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import PairData
from .exceptions import BadDelta, DegenerateSample, DegenerateStats, InputError, NoBracket
from .kernels import KernelSpec
from .operator import build_gram

RESIDUAL_TOL = 1e-10
TAU_ATOL = 1e-12
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class ConcentrationStats:
    """Sample sup ``L_hat`` and half-mean ``sigma2_hat`` of squared pairwise HS distances."""

    L_hat: float
    sigma2_hat: float
    n: int
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise BadDelta(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.n < 2:
            raise InputError("need at least two observations")

    @property
    def mean_sq_dist(self) -> float:
        """Unhalved mean squared pairwise distance (``2 * sigma2_hat``)."""
        return 2.0 * self.sigma2_hat


def pairwise_hs_dist_sq(W1: np.ndarray, W2: np.ndarray) -> np.ndarray:
    """Matrix of squared HS distances ``||T_{X_i} - T_{X_j}||^2`` from two Gram matrices."""
    d = np.diag(W1) * np.diag(W2)
    D = d[:, None] + d[None, :] - 2.0 * (W1 * W2)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def pairwise_spread(W1: np.ndarray, W2: np.ndarray) -> tuple[float, float]:
    """``(L_hat, sigma2_hat)`` from the two Gram matrices of a pair."""
    n = W1.shape[0]
    if n < 2:
        raise InputError("need at least two observations")
    D = pairwise_hs_dist_sq(W1, W2)
    max_sq = float(D.max())
    if max_sq <= 0.0:
        raise DegenerateSample("all observations coincide; the threshold is undefined")
    # row sums then total: fixed reduction order
    total = float(np.sum(np.sum(D, axis=1)))
    return math.sqrt(max_sq), total / (2.0 * n * (n - 1))


def stats_from_grams(W1: np.ndarray, W2: np.ndarray, delta: float) -> ConcentrationStats:
    L_hat, sigma2_hat = pairwise_spread(W1, W2)
    return ConcentrationStats(L_hat, sigma2_hat, W1.shape[0], delta)


def concentration_stats(pair: PairData, k1: KernelSpec, k2: KernelSpec,
                        delta: float) -> ConcentrationStats:
    """``L_hat`` and ``sigma2_hat`` for a pair of components under the given kernels."""
    if pair.n < 2:
        raise InputError("need at least two observations")
    return stats_from_grams(build_gram(pair.left, k1), build_gram(pair.right, k2), delta)


def _u_minus_log1p(u: float) -> float:
    if u < 1e-4:
        # series keeps relative precision where u - log1p(u) cancels
        return u * u * (0.5 - u * (1.0 / 3.0 - u * (0.25 - u / 5.0)))
    return u - math.log1p(u)


def bound_log_rhs(tau: float, L: float, s2: float, n: int) -> float:
    """Log of the tail bound without the leading factor 2, at ``tau``."""
    if tau <= 0.0:
        return 0.0
    c = s2 / (L * L)
    u = tau * L / s2
    return n * (-c * u * math.log1p(u) + math.log1p(c * _u_minus_log1p(u)))


def _variance_term(stats: ConcentrationStats, undropped: bool) -> float:
    s2 = stats.sigma2_hat
    if undropped:
        s2 += 0.5 * stats.L_hat ** 2 * math.sqrt(math.log(1.0 / stats.delta) / stats.n)
    return s2


def threshold_residual(tau: float, stats: ConcentrationStats, undropped: bool = False) -> float:
    """``RHS(tau) - ln(delta / 2)`` for the solved-threshold equation."""
    s2 = _variance_term(stats, undropped)
    return bound_log_rhs(tau, stats.L_hat, s2, stats.n) - math.log(stats.delta / 2.0)


def solve_threshold(stats: ConcentrationStats, undropped: bool = False) -> float:
    """Solve ``RHS(tau) = ln(delta/2)`` for ``tau > 0`` by doubling then bisection.

    With ``undropped=True`` the variance term keeps the lower-order correction
    ``L_hat^2 / 2 * sqrt(ln(1/delta) / N)``.
    """
    if not (stats.L_hat > 0 and stats.sigma2_hat > 0):
        raise DegenerateStats("L_hat and sigma2_hat must both be positive")
    L = stats.L_hat
    s2 = _variance_term(stats, undropped)
    target = math.log(stats.delta / 2.0)

    def f(t):
        return bound_log_rhs(t, L, s2, stats.n) - target

    lo, hi = 0.0, s2 / L
    for _ in range(MAX_DOUBLINGS):
        if f(hi) < 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoBracket("tail bound never fell below delta/2")

    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= TAU_ATOL and min(abs(f(lo)), abs(f(hi))) <= RESIDUAL_TOL:
            break
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def closed_form_threshold(L: float, S: float, n: int, delta: float) -> float:
    """Explicit threshold holding with probability above ``1 - 2 delta``.

    ``S`` is the unhalved mean of squared pairwise HS distances over ``i != j``.
    """
    if not 0.0 < delta < 0.5:
        raise BadDelta(f"closed-form threshold needs delta in (0, 1/2), got {delta!r}")
    if n < 2:
        raise InputError("need at least two observations")
    l2 = math.log(2.0 / delta) / n
    return 2.0 * L * l2 + math.sqrt(l2 * (S + L * L * math.sqrt(math.log(1.0 / delta) / n)))
