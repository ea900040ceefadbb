"""Seeded mixture generators and a Monte Carlo replication harness.

Random numbers come from numpy's PCG64 bit generator.  Replicate ``r`` uses
seed ``base_seed + r``; within a replicate, stream 0 draws the latent labels
and streams ``1 + 2k`` / ``2 + 2k`` draw the standard normal / uniform noise
of component ``k``.  Each stream is ``PCG64(SeedSequence(seed, spawn_key=(s,)))``.
Draws are consumed sequentially, so the first ``n`` observations of a sample
of size ``N >= n`` coincide with a sample of size ``n``.
"""

from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .data import ComponentSample, Sample
from .estimator import EstimatorConfig, estimate, estimate_deltas
from .exceptions import BadDesign, InputError, MixcompError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Law:
    """One-dimensional conditional law: ``normal(loc, scale)`` or ``uniform(loc, scale)``
    where for the uniform ``loc``/``scale`` are the endpoints ``a``/``b``."""

    family: str
    loc: float
    scale: float

    def __post_init__(self):
        if self.family == "normal":
            if not self.scale > 0:
                raise BadDesign(f"normal scale must be positive, got {self.scale}")
        elif self.family == "uniform":
            if not self.scale > self.loc:
                raise BadDesign(f"uniform needs a < b, got ({self.loc}, {self.scale})")
        else:
            raise BadDesign(f"unknown law family {self.family!r}")

    @property
    def mean(self) -> float:
        return self.loc if self.family == "normal" else 0.5 * (self.loc + self.scale)

    @property
    def var(self) -> float:
        if self.family == "normal":
            return self.scale ** 2
        return (self.scale - self.loc) ** 2 / 12.0


def normal(mu: float, sd: float = 1.0) -> Law:
    return Law("normal", mu, sd)


def uniform(a: float, b: float) -> Law:
    return Law("uniform", a, b)


@dataclass(frozen=True)
class DesignSpec:
    """Mixture with weights ``weights[m]`` and laws ``laws[m][k]`` for component ``k``."""

    name: str
    weights: tuple[float, ...]
    laws: tuple[tuple[Law, ...], ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) < 1 or np.any(w <= 0) or not np.isclose(w.sum(), 1.0, atol=1e-12):
            raise BadDesign("weights must be positive and sum to 1")
        if len(self.laws) != len(w):
            raise BadDesign("need one row of laws per mixture component")
        ks = {len(row) for row in self.laws}
        if len(ks) != 1 or ks.pop() < 2:
            raise BadDesign("every mixture component needs the same number (>= 2) of laws")

    @property
    def n_mixture(self) -> int:
        return len(self.weights)

    @property
    def k(self) -> int:
        return len(self.laws[0])

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-component mean and variance of the mixture marginals."""
        w = np.asarray(self.weights)
        mu = np.array([[law.mean for law in row] for row in self.laws])
        var = np.array([[law.var for law in row] for row in self.laws])
        mean = w @ mu
        return mean, w @ (var + mu ** 2) - mean ** 2

    @classmethod
    def custom(cls, weights: Sequence[float], laws, name: str = "custom") -> "DesignSpec":
        return cls(name, tuple(float(x) for x in weights), tuple(tuple(row) for row in laws))


def _gauss_design(name, means) -> DesignSpec:
    m = len(means)
    return DesignSpec(name, (1.0 / m,) * m, tuple(tuple(normal(x) for x in mu) for mu in means))


def _uniform_design(name, m) -> DesignSpec:
    return DesignSpec(name, (1.0 / m,) * m, tuple((uniform(j, j + 1),) * 2 for j in range(m)))


BUILTIN_DESIGNS: dict[str, DesignSpec] = {
    "design1": _gauss_design("design1", [(0, 0), (1, 2), (2, 1)]),
    "design2": _uniform_design("design2", 3),
    "design3": _gauss_design("design3", [(0, 0), (3, 3), (-3, -3)]),
    "design4": _uniform_design("design4", 5),
    "design5": _gauss_design("design5", [
        (0, 0, 0, 0, 0, 0, 0, 0),
        (1.0, 2.0, 0.5, 1.0, 0.75, 1.25, 0.25, 0.5),
        (2.0, 1.0, 1.0, 0.5, 1.25, 0.75, 0.5, 0.25),
    ]),
}

TRUE_M = {"design1": 3, "design2": 3, "design3": 3, "design4": 5, "design5": 3}


def get_design(design: str | int | DesignSpec) -> DesignSpec:
    """Look up a builtin design by name (``"design2"``, ``"2"`` or ``2``)."""
    if isinstance(design, DesignSpec):
        return design
    key = str(design)
    if not key.startswith("design"):
        key = "design" + key
    try:
        return BUILTIN_DESIGNS[key]
    except KeyError:
        raise BadDesign(f"unknown design {design!r}; builtins are 1-5") from None


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def generate(design: str | int | DesignSpec, n: int, seed: int) -> Sample:
    """Draw ``n`` i.i.d. observations from a design; deterministic in ``(design, n, seed)``."""
    spec = get_design(design)
    if n < 1:
        raise InputError("n must be at least 1")
    seed = int(seed)
    if seed < 0:
        raise InputError("seed must be nonnegative")
    cum = np.cumsum(spec.weights)
    cum[-1] = 1.0
    labels = np.searchsorted(cum, _stream(seed, 0).random(n), side="right")
    comps = []
    for k in range(spec.k):
        z = _stream(seed, 1 + 2 * k).standard_normal(n)
        u = _stream(seed, 2 + 2 * k).random(n)
        x = np.empty(n)
        for m, row in enumerate(spec.laws):
            sel = labels == m
            law = row[k]
            if law.family == "normal":
                x[sel] = law.loc + law.scale * z[sel]
            else:
                x[sel] = law.loc + (law.scale - law.loc) * u[sel]
        comps.append(ComponentSample(x))
    return Sample(tuple(comps), labels=labels)


@dataclass
class FrequencyTable:
    """Counts of the selected number of components over Monte Carlo replicates.

    Replicates whose estimation raised are listed in ``failures`` as
    ``(replicate, message)``; ``sum(counts) + len(failures) == reps``.
    """

    design: str
    n: int
    reps: int
    base_seed: int
    config: dict
    counts: dict[int, int]
    m_hats: list[int | None]
    failures: list[tuple[int, str]] = field(default_factory=list)
    seconds: float = 0.0

    def frequency(self, m: int) -> float:
        return self.counts.get(m, 0) / self.reps

    def frequency_above(self, m: int) -> float:
        return sum(c for k, c in self.counts.items() if k > m) / self.reps

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "n": self.n,
            "reps": self.reps,
            "base_seed": self.base_seed,
            "config": self.config,
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "frequencies": {str(k): v / self.reps for k, v in sorted(self.counts.items())},
            "failures": [{"replicate": r, "error": msg} for r, msg in self.failures],
            "m_hats": self.m_hats,
        }


def _one_replicate(spec: DesignSpec, n: int, seed: int, cfg: EstimatorConfig,
                   deltas: tuple[float, ...]) -> dict[float, int | str]:
    try:
        sample = generate(spec, n, seed)
        if len(deltas) == 1 and deltas[0] == cfg.delta:
            return {cfg.delta: estimate(sample, cfg).m_hat}
        return {d: e.m_hat for d, e in estimate_deltas(sample, deltas, cfg).items()}
    except MixcompError as exc:
        return {d: f"{type(exc).__name__}: {exc}" for d in deltas}


def _tables(spec, n, reps, cfg, base_seed, deltas, n_jobs) -> dict[float, FrequencyTable]:
    if reps < 1:
        raise InputError("reps must be at least 1")
    t0 = time.perf_counter()
    if n_jobs == 1:
        results = [_one_replicate(spec, n, base_seed + r, cfg, deltas) for r in range(reps)]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_one_replicate)(spec, n, base_seed + r, cfg, deltas) for r in range(reps)
        )
    elapsed = time.perf_counter() - t0
    out = {}
    for d in deltas:
        m_hats: list[int | None] = []
        failures = []
        for r, res in enumerate(results):
            val = res[d]
            if isinstance(val, str):
                failures.append((r, val))
                m_hats.append(None)
            else:
                m_hats.append(int(val))
        counts = Counter(m for m in m_hats if m is not None)
        conf = cfg.to_dict()
        conf["delta"] = d
        out[d] = FrequencyTable(spec.name, n, reps, base_seed, conf, dict(sorted(counts.items())),
                                m_hats, failures, elapsed)
    return out


def run_montecarlo(design: str | int | DesignSpec, n: int, reps: int,
                   cfg: EstimatorConfig | None = None, base_seed: int = 0,
                   n_jobs: int = 1) -> FrequencyTable:
    """Selection frequencies of ``m_hat`` over ``reps`` seeded replicates.

    Replicate ``r`` uses seed ``base_seed + r``; results are aggregated in
    replicate order, so they do not depend on ``n_jobs``.
    """
    cfg = cfg or EstimatorConfig()
    spec = get_design(design)
    return _tables(spec, n, reps, cfg, base_seed, (cfg.delta,), n_jobs)[cfg.delta]


def run_delta_sweep(design: str | int | DesignSpec, n: int, reps: int, deltas: Sequence[float],
                    cfg: EstimatorConfig | None = None, base_seed: int = 0,
                    n_jobs: int = 1) -> dict[float, FrequencyTable]:
    """Like :func:`run_montecarlo` for several ``delta`` on the same replicates.

    Spectra and concentration statistics do not depend on ``delta`` and are
    computed once per replicate.
    """
    cfg = cfg or EstimatorConfig()
    spec = get_design(design)
    deltas = tuple(float(d) for d in deltas)
    if not deltas:
        raise InputError("need at least one delta")
    return _tables(spec, n, reps, cfg, base_seed, deltas, n_jobs)
