"""Estimate the number of mixture components from tail norms of the operator spectrum.

For one pair of (possibly multivariate) components the estimate is

    m_hat = #{ j : r_j >= tau }

with ``r_j`` the tail norms of the singular values of ``A`` and ``tau`` the
data-driven threshold.  With ``K > 2`` components the estimate is the maximum
over all pairs, or over bipartitions of the components into two blocks.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .data import ComponentSample, PairData, Sample
from .exceptions import DegenerateSample, InputError, TooManyPartitions
from .kernels import FAMILIES, KernelSpec, analytic_L
from .linalg import Spectrum
from .operator import GramFactor, spectrum_from_factors
from .threshold import (
    ConcentrationStats,
    closed_form_threshold,
    pairwise_spread,
    solve_threshold,
)

logger = logging.getLogger(__name__)

SILVERMAN_FACTOR = 1.06
STRATEGIES = ("pairs", "bipartitions")
THRESHOLD_FORMS = ("solved", "closed_form")

Block = tuple[int, ...]


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning of the estimator.

    ``bandwidth`` is either ``"silverman"`` or a fixed positive float used for
    every component.
    """

    delta: float = 0.05
    kernel_family: str = "gaussian"
    bandwidth: str | float = "silverman"
    strategy: str = "pairs"
    threshold_form: str = "solved"
    max_partitions: int = 256
    undropped_variance: bool = False
    silverman_factor: float = SILVERMAN_FACTOR

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InputError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.threshold_form == "closed_form" and not self.delta < 0.5:
            raise InputError("the closed-form threshold needs delta < 1/2")
        if self.kernel_family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.kernel_family!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "silverman":
                raise InputError(f"bandwidth must be 'silverman' or a positive number, got {self.bandwidth!r}")
        elif not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise InputError(f"fixed bandwidth must be positive, got {self.bandwidth!r}")
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown strategy {self.strategy!r}")
        if self.threshold_form not in THRESHOLD_FORMS:
            raise InputError(f"unknown threshold form {self.threshold_form!r}")
        if self.max_partitions < 1:
            raise TooManyPartitions("max_partitions must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PairEstimate:
    m_hat: int
    spectrum: Spectrum
    tau: float
    h_left: float
    h_right: float
    indices: tuple[Block, Block]
    stats: ConcentrationStats
    warning: str | None = None


@dataclass
class Estimate:
    m_hat: int
    per_unit: list[PairEstimate]
    strategy: str
    warnings: list[str] = field(default_factory=list)


def silverman_bandwidth(comp: ComponentSample, pair_N: int | None = None,
                        factor: float = SILVERMAN_FACTOR) -> float:
    """Rule-of-thumb bandwidth ``factor * mean_sd * N^(-1/6)``.

    ``mean_sd`` is the average over coordinates of the sample standard deviation.
    """
    n = comp.n if pair_N is None else pair_N
    if n < 2:
        raise InputError("need at least two observations for a bandwidth")
    sd = float(np.mean(np.std(comp.values, axis=0, ddof=1)))
    if not sd > 0:
        raise DegenerateSample("component has zero spread; Silverman bandwidth is zero")
    return factor * sd * n ** (-1.0 / 6.0)


def _bandwidth(comp: ComponentSample, cfg: EstimatorConfig, n: int) -> float:
    if cfg.bandwidth == "silverman":
        return silverman_bandwidth(comp, n, cfg.silverman_factor)
    return float(cfg.bandwidth)


def iter_bipartitions(k: int) -> Iterator[tuple[Block, Block]]:
    """Nontrivial bipartitions of ``range(k)``, smaller block first.

    Ordered by the size of the smaller block, then lexicographically.  When the
    blocks have equal size only the one containing component 0 is listed first,
    so each bipartition appears once.
    """
    everything = set(range(k))
    for size in range(1, k // 2 + 1):
        for alpha in itertools.combinations(range(k), size):
            if 2 * size == k and 0 not in alpha:
                continue
            yield alpha, tuple(sorted(everything - set(alpha)))


def iter_units(k: int, strategy: str, max_partitions: int) -> list[tuple[Block, Block]]:
    if k < 2:
        raise InputError("need at least two components")
    if strategy == "pairs":
        return [((i,), (j,)) for i, j in itertools.combinations(range(k), 2)]
    return list(itertools.islice(iter_bipartitions(k), max_partitions))


@dataclass
class _Unit:
    """Everything about one pair that does not depend on ``delta``."""

    indices: tuple[Block, Block]
    k1: KernelSpec
    k2: KernelSpec
    spectrum: Spectrum
    L_hat: float
    sigma2_hat: float
    n: int


def _prepare(blocks: dict[Block, ComponentSample], units, cfg: EstimatorConfig) -> list[_Unit]:
    factors: dict[Block, GramFactor] = {}
    n = next(iter(blocks.values())).n

    def factor(b: Block) -> GramFactor:
        if b not in factors:
            comp = blocks[b]
            spec = KernelSpec(cfg.kernel_family, _bandwidth(comp, cfg, n), comp.dim)
            factors[b] = GramFactor(comp, spec)
        return factors[b]

    out = []
    for left, right in units:
        f1, f2 = factor(left), factor(right)
        L_hat, sigma2_hat = pairwise_spread(f1.gram, f2.gram)
        out.append(_Unit((left, right), f1.spec, f2.spec, spectrum_from_factors(f1, f2),
                         L_hat, sigma2_hat, n))
    return out


def _decide(unit: _Unit, cfg: EstimatorConfig, delta: float) -> PairEstimate:
    stats = ConcentrationStats(unit.L_hat, unit.sigma2_hat, unit.n, delta)
    if cfg.threshold_form == "closed_form":
        tau = closed_form_threshold(analytic_L(unit.k1, unit.k2), stats.mean_sq_dist, unit.n, delta)
    else:
        tau = solve_threshold(stats, undropped=cfg.undropped_variance)
    m = unit.spectrum.count_at_least(tau)
    warn = None
    if m == 0:
        warn = (f"threshold {tau:.4g} exceeds every tail norm for components "
                f"{unit.indices}; m_hat = 0")
    return PairEstimate(m, unit.spectrum, tau, unit.k1.h, unit.k2.h, unit.indices, stats, warn)


def _collect(per_unit: list[PairEstimate], strategy: str) -> Estimate:
    msgs = [p.warning for p in per_unit if p.warning]
    for msg in msgs:
        logger.warning(msg)
    return Estimate(max(p.m_hat for p in per_unit), per_unit, strategy, msgs)


def _units_for_sample(sample: Sample, cfg: EstimatorConfig) -> list[_Unit]:
    units = iter_units(sample.k, cfg.strategy, cfg.max_partitions)
    blocks = {}
    for left, right in units:
        for b in (left, right):
            if b not in blocks:
                blocks[b] = sample.block(b)
    return _prepare(blocks, units, cfg)


def estimate_pair(pair: PairData, cfg: EstimatorConfig | None = None) -> PairEstimate:
    """Estimate the rank of the smoothed operator for one pair of components."""
    cfg = cfg or EstimatorConfig()
    if pair.n < 2:
        raise InputError("need at least two observations")
    units = _prepare({(0,): pair.left, (1,): pair.right}, [((0,), (1,))], cfg)
    return _decide(units[0], cfg, cfg.delta)


def estimate(sample: Sample, cfg: EstimatorConfig | None = None) -> Estimate:
    """Estimate the number of mixture components of a ``K``-component sample."""
    cfg = cfg or EstimatorConfig()
    if sample.n < 2:
        raise InputError("need at least two observations")
    units = _units_for_sample(sample, cfg)
    return _collect([_decide(u, cfg, cfg.delta) for u in units], cfg.strategy)


def estimate_deltas(sample: Sample, deltas: Sequence[float],
                    cfg: EstimatorConfig | None = None) -> dict[float, Estimate]:
    """Run :func:`estimate` for several ``delta`` values, sharing the spectra."""
    cfg = cfg or EstimatorConfig()
    units = _units_for_sample(sample, cfg)
    return {d: _collect([_decide(u, cfg, d) for u in units], cfg.strategy) for d in deltas}


class MixtureRankEstimator(BaseEstimator):
    """Estimator of the number of mixture components with a scikit-learn interface.

    Parameters
    ----------
    delta : float, default=0.05
        Level of the threshold; larger values lower the threshold.
    kernel : {"gaussian", "uniform"}, default="gaussian"
    bandwidth : "silverman" or float, default="silverman"
    strategy : {"pairs", "bipartitions"}, default="pairs"
    threshold_form : {"solved", "closed_form"}, default="solved"
    groups : list of lists of int, optional
        Column indices forming each component. Default: every column is its
        own component.
    discrete : list of int, optional
        Indices (into ``groups``) of the components that are discrete.
    max_partitions : int, default=256
    undropped_variance : bool, default=False

    Attributes
    ----------
    n_components_ : int
        The estimated number of mixture components.
    estimate_ : Estimate
        Per-pair details (spectra, thresholds, bandwidths).
    """

    def __init__(self, delta=0.05, kernel="gaussian", bandwidth="silverman", strategy="pairs",
                 threshold_form="solved", groups=None, discrete=None, max_partitions=256,
                 undropped_variance=False):
        self.delta = delta
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.strategy = strategy
        self.threshold_form = threshold_form
        self.groups = groups
        self.discrete = discrete
        self.max_partitions = max_partitions
        self.undropped_variance = undropped_variance

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(
            delta=self.delta,
            kernel_family=self.kernel,
            bandwidth=self.bandwidth,
            strategy=self.strategy,
            threshold_form=self.threshold_form,
            max_partitions=self.max_partitions,
            undropped_variance=self.undropped_variance,
        )

    def _sample(self, X) -> Sample:
        groups = self.groups
        if groups is None:
            groups = [[j] for j in range(X.shape[1])]
        disc = set(self.discrete or ())
        kinds = ["discrete" if g in disc else "continuous" for g in range(len(groups))]
        return Sample.from_array(X, groups, kinds)

    def fit(self, X, y=None):
        """Estimate the number of components from ``X`` of shape ``(n_samples, n_features)``."""
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        cfg = self._config()
        self.estimate_ = estimate(self._sample(X), cfg)
        self.n_components_ = self.estimate_.m_hat
        self.n_features_in_ = X.shape[1]
        for msg in self.estimate_.warnings:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return self

    @property
    def thresholds_(self) -> list[float]:
        check_is_fitted(self, "estimate_")
        return [p.tau for p in self.estimate_.per_unit]

    def singular_values(self, unit: int = 0) -> np.ndarray:
        check_is_fitted(self, "estimate_")
        return self.estimate_.per_unit[unit].spectrum.sigmas

