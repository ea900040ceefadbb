"""Cell-probability matrix on a rectangular partition, for comparison diagnostics.

Each scalar component is cut into ``M0`` cells at its empirical quantiles and
``P[i, j]`` is the fraction of observations falling in cell ``i`` of the first
component and cell ``j`` of the second.  Under the mixture model this matrix
is a sum of ``M`` rank-one terms, so its rank is a lower bound on the rank of
the operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PairData
from .exceptions import DimensionMismatch, InputError, TooFewPoints
from .linalg import Spectrum, singular_values


@dataclass(frozen=True)
class Partition1D:
    """Cells ``(-inf, e1], (e1, e2], ..., (e_last, inf)`` given by strictly increasing edges."""

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float).ravel()
        if e.size < 1:
            raise InputError("a partition needs at least one edge (two cells)")
        if np.any(np.diff(e) <= 0):
            raise InputError("partition edges must be strictly increasing")
        object.__setattr__(self, "edges", e)

    @property
    def n_cells(self) -> int:
        return self.edges.size + 1

    def assign(self, x) -> np.ndarray:
        # side="left": a value equal to an edge belongs to the cell it closes
        return np.searchsorted(self.edges, np.asarray(x, dtype=float), side="left")


def equiprobable_edges(values, m0: int) -> Partition1D:
    """Edges at the right-continuous empirical quantiles ``k / m0``, ``k = 1..m0-1``.

    The ``k``-th edge is the smallest order statistic whose empirical CDF is at
    least ``k / m0``, i.e. ``x_(ceil(k N / m0))``.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if m0 < 2:
        raise InputError("m0 must be at least 2")
    if n < m0:
        raise TooFewPoints(f"need at least m0={m0} points, got {n}")
    idx = [-(-k * n // m0) - 1 for k in range(1, m0)]
    edges = x[idx]
    if np.any(np.diff(edges) <= 0):
        raise TooFewPoints("tied values collapse equiprobable cells; edges are not strictly increasing")
    return Partition1D(edges)


def build_pdelta_hat(pair: PairData, p1: Partition1D, p2: Partition1D) -> np.ndarray:
    """Empirical cell probabilities of the pair over the product partition."""
    if pair.left.dim != 1 or pair.right.dim != 1:
        raise DimensionMismatch("the cell-probability matrix needs scalar components")
    i = p1.assign(pair.left.values[:, 0])
    j = p2.assign(pair.right.values[:, 0])
    counts = np.zeros((p1.n_cells, p2.n_cells))
    np.add.at(counts, (i, j), 1.0)
    return counts / pair.n


def pdelta_spectrum(P) -> Spectrum:
    return Spectrum.from_sigmas(singular_values(P))


def pdelta_for_pair(pair: PairData, m0: int) -> tuple[np.ndarray, Partition1D, Partition1D]:
    """Matrix on ``m0 x m0`` equiprobable cells, with the partitions used."""
    p1 = equiprobable_edges(pair.left.values[:, 0], m0)
    p2 = equiprobable_edges(pair.right.values[:, 0], m0)
    return build_pdelta_hat(pair, p1, p2), p1, p2
