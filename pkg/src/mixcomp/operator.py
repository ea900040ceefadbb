"""Gram matrices and the finite matrix whose singular values match the operator estimate.

With ``W1[i, j] = phi(X1_i, X1_j)`` and ``W2[i, j] = phi(X2_i, X2_j)`` the kernel
estimate of the smoothed operator has the same singular values as

    A = W2^{1/2} W1^{1/2} / N.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import ComponentSample, PairData
from .exceptions import DimensionMismatch
from .kernels import KernelSpec, phi_absdiff
from .linalg import Spectrum, psd_eigh, psd_sqrt, singular_values


def build_gram(comp: ComponentSample, spec: KernelSpec) -> np.ndarray:
    """``N x N`` matrix of product-kernel cross-products between observations."""
    if spec.dim != comp.dim:
        raise DimensionMismatch(f"kernel dim {spec.dim} != component dim {comp.dim}")
    n = comp.n
    W = np.ones((n, n))
    diag = float(phi_absdiff(spec.family, spec.h, 0.0))
    for c in range(comp.dim):
        if n > 1:
            # upper triangle only, mirrored by squareform
            G = squareform(phi_absdiff(spec.family, spec.h, pdist(comp.values[:, [c]], "cityblock")))
        else:
            G = np.zeros((1, 1))
        np.fill_diagonal(G, diag)
        W *= G
    return W


def build_ahat(W1, W2) -> np.ndarray:
    """``psd_sqrt(W2) @ psd_sqrt(W1) / N``."""
    W1 = np.asarray(W1, dtype=float)
    W2 = np.asarray(W2, dtype=float)
    if W1.shape != W2.shape:
        raise DimensionMismatch(f"Gram matrices differ in shape: {W1.shape} vs {W2.shape}")
    return psd_sqrt(W2) @ psd_sqrt(W1) / W1.shape[0]


class GramFactor:
    """Gram matrix of one component plus its clamped eigendecomposition.

    Only eigenvectors with nonzero (post-clamp) eigenvalues are kept; the
    dropped ones contribute exactly zero to the square root.
    """

    def __init__(self, comp: ComponentSample, spec: KernelSpec):
        self.spec = spec
        self.gram = build_gram(comp, spec)
        w, U = psd_eigh(self.gram)
        keep = w > 0
        self.root = U[:, keep] * np.sqrt(w[keep])

    @property
    def n(self) -> int:
        return self.gram.shape[0]


def spectrum_from_factors(f1: GramFactor, f2: GramFactor) -> Spectrum:
    """Spectrum of ``A`` computed from the two factored square roots.

    ``W2^{1/2} W1^{1/2} = U2 L2^{1/2} (U2' U1) L1^{1/2} U1'`` and the outer
    orthogonal factors do not change singular values, so only the small core
    ``(U2 L2^{1/2})' (U1 L1^{1/2}) / N`` is decomposed.
    """
    n = f1.n
    if f2.n != n:
        raise DimensionMismatch("Gram matrices differ in size")
    core = f2.root.T @ f1.root / n
    sig = np.zeros(n)
    s = singular_values(core) if core.size else np.zeros(0)
    sig[: len(s)] = s[:n]
    return Spectrum.from_sigmas(sig)


def spectrum(pair: PairData, k1: KernelSpec, k2: KernelSpec) -> Spectrum:
    """Singular values and tail norms of ``A`` for one pair of components."""
    return spectrum_from_factors(GramFactor(pair.left, k1), GramFactor(pair.right, k2))
