"""Closed-form counts of inferred and matched combinations.

Everything is evaluated as a base-2 exponent first; the linear value is
``2 ** exponent``. Hamming-ball volumes use the asymptotic 2^(n H(r)) form,
so the counts are expectations for large n rather than exact finite-n
values.

Node indices are 1-based as in the usual two-hop picture: sources
1..m, relay m+1. ``p[i][k]`` is the crossover probability with which node
k overhears node i (so ``p[i][j]`` is how observer j hears node i) and
``d[i]`` is the minimum distance of node i's code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def binary_entropy(q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability out of range: {q}")
    if q in (0.0, 1.0):
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


@dataclass(frozen=True)
class AnalysisParams:
    n: int
    m: int
    delta: float
    d: tuple[float, ...]
    p: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        size = self.m + 2  # index 0 unused
        if self.m < 1 or self.n < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if len(self.d) != size or len(self.p) != size or any(len(r) != size for r in self.p):
            raise ValueError(f"d and p must be indexed 1..{self.m + 1} (length {size})")
        for row in self.p:
            for x in row:
                if not 0.0 <= x <= 0.5:
                    raise ValueError(f"crossover probability out of range: {x}")
        for di in self.d:
            if not 0.0 <= di / self.n < 0.5:
                raise ValueError(f"d_i/n must lie in [0, 0.5), got {di}/{self.n}")

    @classmethod
    def uniform(cls, n: int, m: int, delta: float, p: float, d: float = 0) -> AnalysisParams:
        size = m + 2
        return cls(
            n=n,
            m=m,
            delta=delta,
            d=tuple([0] + [d] * (size - 1)),
            p=tuple(tuple(p for _ in range(size)) for _ in range(size)),
        )

    def term(self, i: int, j: int) -> float:
        """H(p_ij) - H(d_i/n): log-size of node i's candidate ball per bit."""
        return binary_entropy(self.p[i][j]) - binary_entropy(self.d[i] / self.n)


@dataclass(frozen=True)
class Count:
    exponent: float

    @property
    def value(self) -> float:
        return 2.0**self.exponent


def _check_observer(params: AnalysisParams, j: int) -> None:
    if not 1 <= j <= params.m:
        raise ValueError(f"observer index must be in [1, {params.m}], got {j}")


def expected_matched_count(params: AnalysisParams, j: int = 1) -> Count:
    """Expected number of matched combinations seen by source j."""
    _check_observer(params, j)
    total = sum(params.term(i, j) for i in range(1, params.m + 2) if i != j)
    return Count(params.n * (total - 1) - params.m * params.delta)


def expected_matched_count_eps(params: AnalysisParams, j: int, eps: float) -> Count:
    """Same count written for a hash of length eps*n."""
    _check_observer(params, j)
    others = [i for i in range(1, params.m + 2) if i != j]
    h_p = sum(binary_entropy(params.p[i][j]) for i in others)
    h_d = sum(binary_entropy(params.d[i] / params.n) for i in others)
    return Count(params.n * (h_p - (h_d + 1 + params.m * eps)))


def inferred_combination_bound(params: AnalysisParams, j: int = 1) -> Count:
    """Upper bound on the number of inferred combinations at source j."""
    _check_observer(params, j)
    total = sum(params.term(k, j) for k in range(1, params.m + 1) if k != j)
    return Count(params.n * total - (params.m - 1) * params.delta)


def relay_match_fraction(params: AnalysisParams, j: int = 1) -> Count:
    """Chance that a uniform word lies in the relay's ball and digest class."""
    _check_observer(params, j)
    r = params.m + 1
    return Count(params.n * params.term(r, j) - params.delta - params.n)


@dataclass(frozen=True)
class SampleStats:
    mean: float
    variance: float
    count: int


def empirical_matched_count(matched_counts: Sequence) -> SampleStats:
    """Sample mean and variance of matched counts.

    Accepts bare integers or anything with a ``matched_count`` attribute.
    The variance is the unbiased estimator (0 for a single sample).
    """
    values = [getattr(v, "matched_count", v) for v in matched_counts]
    if not values:
        raise ValueError("no trial outputs given")
    arr = np.asarray(values, dtype=float)
    var = float(arr.var(ddof=1)) if len(arr) > 1 else 0.0
    return SampleStats(float(arr.mean()), var, len(arr))
