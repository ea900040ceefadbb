"""Containers for paired and K-component samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .exceptions import DimensionMismatch, InputError, NonFinite

Kind = Literal["continuous", "discrete"]


@dataclass(frozen=True)
class ComponentSample:
    """``N`` observations of one component, stored as an ``(N, d)`` float array.

    Discrete components are embedded as reals (category ``c`` becomes ``float(c)``)
    and go through the same kernel machinery as continuous ones.
    """

    values: np.ndarray
    kind: Kind = "continuous"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise DimensionMismatch(f"component values must be (N, d), got shape {v.shape}")
        if v.shape[0] < 1:
            raise InputError("component has no observations")
        if not np.all(np.isfinite(v)):
            raise NonFinite("component values contain NaN or infinity")
        if self.kind not in ("continuous", "discrete"):
            raise InputError(f"unknown component kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def take(self, idx) -> "ComponentSample":
        return ComponentSample(self.values[idx], self.kind)


@dataclass(frozen=True)
class PairData:
    left: ComponentSample
    right: ComponentSample

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise DimensionMismatch(
                f"paired components differ in length: {self.left.n} vs {self.right.n}"
            )

    @property
    def n(self) -> int:
        return self.left.n

    def swapped(self) -> "PairData":
        return PairData(self.right, self.left)


@dataclass(frozen=True)
class Sample:
    """A full sample: ``K >= 2`` components observed on the same ``N`` units."""

    components: tuple[ComponentSample, ...]
    labels: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 2:
            raise InputError(f"need at least two components, got {len(comps)}")
        n = comps[0].n
        if any(c.n != n for c in comps):
            raise DimensionMismatch("components have different numbers of observations")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def k(self) -> int:
        return len(self.components)

    def pair(self, i: int, j: int) -> PairData:
        return PairData(self.components[i], self.components[j])

    def block(self, indices: Sequence[int]) -> ComponentSample:
        """Concatenate several components into one multivariate component."""
        parts = [self.components[i] for i in indices]
        kind = "discrete" if all(p.kind == "discrete" for p in parts) else "continuous"
        return ComponentSample(np.hstack([p.values for p in parts]), kind)

    def to_array(self) -> np.ndarray:
        return np.hstack([c.values for c in self.components])

    @classmethod
    def from_array(cls, X, groups: Sequence[Sequence[int]] | None = None,
                   kinds: Sequence[str] | None = None) -> "Sample":
        """Split the columns of ``X`` into components; default is one column each."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-d, got shape {X.shape}")
        if groups is None:
            groups = [[j] for j in range(X.shape[1])]
        groups = [list(g) for g in groups]
        used = [c for g in groups for c in g]
        if any(not g for g in groups):
            raise InputError("empty column group")
        if len(set(used)) != len(used):
            raise InputError("column groups overlap")
        if any(c < 0 or c >= X.shape[1] for c in used):
            raise InputError(f"column index out of range for {X.shape[1]} columns")
        if kinds is None:
            kinds = ["continuous"] * len(groups)
        if len(kinds) != len(groups):
            raise InputError("kinds must have one entry per group")
        return cls(tuple(ComponentSample(X[:, g], k) for g, k in zip(groups, kinds)))
