"""Dense PSD square roots, singular values and tail norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NonFinite, NotPSD, NotSorted, NotSymmetric

_EPS = np.finfo(float).eps
SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Singular values (descending) and their tail norms ``r_j = sqrt(sum_{i>=j} s_i^2)``."""

    sigmas: np.ndarray
    tail_norms: np.ndarray

    @classmethod
    def from_sigmas(cls, sigmas) -> "Spectrum":
        s = np.asarray(sigmas, dtype=float)
        return cls(sigmas=s, tail_norms=tail_norms(s))

    def __len__(self):
        return len(self.sigmas)

    def count_at_least(self, tau: float) -> int:
        """Number of tail norms ``>= tau``; ties count."""
        return int(np.count_nonzero(self.tail_norms >= tau))


def psd_eigh(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a numerically PSD matrix with roundoff clamped.

    Returns ``(w, U)`` with ``w`` ascending and every eigenvalue below
    ``n * lambda_max * eps`` set to exactly zero.

    Raises
    ------
    NotSymmetric
        If ``S`` is asymmetric beyond a relative tolerance of 1e-10.
    NotPSD
        If an eigenvalue is below ``-10 * n * ||S|| * eps``.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NonFinite("matrix has NaN or infinite entries")
    n = S.shape[0]
    scale = np.max(np.abs(S)) if S.size else 0.0
    if np.max(np.abs(S - S.T), initial=0.0) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    w, U = np.linalg.eigh(0.5 * (S + S.T))
    norm = max(abs(w[0]), abs(w[-1])) if n else 0.0
    if n and w[0] < -10.0 * n * norm * _EPS:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is below the PSD tolerance")
    cutoff = n * max(w[-1], 0.0) * _EPS if n else 0.0
    w = np.where(w < cutoff, 0.0, w)
    return w, U


def psd_sqrt(S) -> np.ndarray:
    """Symmetric PSD square root ``R`` with ``R @ R ~= S``."""
    w, U = psd_eigh(S)
    R = (U * np.sqrt(w)) @ U.T
    return 0.5 * (R + R.T)


def singular_values(A) -> np.ndarray:
    """All ``min(n, m)`` singular values of ``A`` in descending order."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or infinite entries")
    if A.size == 0:
        return np.zeros(0)
    s = np.linalg.svd(A, compute_uv=False)
    return np.maximum(s, 0.0)


def tail_norms(sigmas) -> np.ndarray:
    """Tail norms of a descending, nonnegative sequence.

    Accumulates from the smallest value upward so small tails keep full
    relative precision.
    """
    s = np.asarray(sigmas, dtype=float)
    if s.ndim != 1:
        raise NotSorted("sigmas must be one-dimensional")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise NotSorted("sigmas must be nonnegative and sorted in descending order")
    return np.sqrt(np.cumsum((s * s)[::-1])[::-1])
