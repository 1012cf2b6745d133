"""Watchdog inference from the checking node's point of view.

The checking node knows its own payload exactly and overhears every other
parent of the relay through a BSC, together with an error-free digest of
each payload. It turns each overheard word into a posterior over the
digest class (a :class:`CandidateSet`), pushes those posteriors through a
layered trellis of partial sums ``sum_j alpha_j x_j`` (sum-product, not
max-product), and finally scores the relay's overheard transmission
against the inferred combinations to get ``p_star``.

States and candidates are kept sparse: parallel ``int64``/``float64``
arrays of the support, sorted by word, with zero-probability entries never
stored.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .channel import Bsc, HashFn, hash_classes, hash_eval
from .field import FieldParams, mul_int, mul_scalar_array, popcount_table


class InferenceError(ValueError):
    """An observation that no valid transmission could have produced."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def bsc_likelihood(observed: int, words: np.ndarray, p: float, n: int) -> np.ndarray:
    """p^d (1-p)^(n-d) with d the Hamming distance from ``observed`` to each word."""
    dist = popcount_table(n)[words ^ observed]
    return np.power(p, dist) * np.power(1.0 - p, n - dist)


@dataclass(frozen=True)
class CandidateSet:
    """Normalized posterior over the payload of one overheard neighbour.

    Only the column of the transition matrix selected by the actual
    observation is materialized.
    """

    words: np.ndarray
    probs: np.ndarray
    observed: int
    digest: int
    source_index: int | None = None

    @property
    def entries(self) -> dict[int, float]:
        return dict(zip(self.words.tolist(), self.probs.tolist()))

    def __len__(self):
        return len(self.words)


def candidate_set(
    observed: int,
    digest: int,
    h: HashFn,
    ch: Bsc,
    n: int,
    source_index: int | None = None,
) -> CandidateSet:
    """Posterior over words y with h(y) == digest given ``observed`` over ``ch``."""
    cls = hash_classes(h, n).get(int(digest))
    if cls is None:
        raise InferenceError(f"digest {digest} has an empty hash class")
    weights = bsc_likelihood(observed, cls, ch.p, n)
    total = weights.sum()
    if total == 0.0:
        raise InferenceError(
            f"observed word {observed:#x} cannot come from digest {digest} over BSC({ch.p})"
        )
    keep = weights > 0.0
    return CandidateSet(
        words=_frozen(cls[keep].copy()),
        probs=_frozen(weights[keep] / total),
        observed=int(observed),
        digest=int(digest),
        source_index=source_index,
    )


@dataclass(frozen=True)
class LayerWeights:
    """w(s, i): probability that the partial sum through layer i equals s."""

    layer_index: int
    states: np.ndarray
    weights: np.ndarray

    @property
    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.states.tolist(), self.weights.tolist()))

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class Trellis:
    """Layered state graph; layer i holds every reachable partial sum.

    ``stages[k]`` is the (coefficient, candidate set) pair that connects
    layer k+1 to layer k+2. An edge (s1, s2) exists iff s2 = s1 + alpha*y
    for some candidate y, and carries that candidate's probability.
    """

    params: FieldParams
    coeffs: tuple[int, ...]
    own_payload: int
    stages: tuple[tuple[int, CandidateSet], ...]
    state_sets: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.state_sets)


def build_trellis(
    own: tuple[int, int],
    others: Sequence[tuple[int, CandidateSet]],
    params: FieldParams,
) -> Trellis:
    """Assemble the trellis from the checker's own (alpha_1, x_1) and one
    (alpha_i, candidates_i) pair per overheard source."""
    alpha1, x1 = own
    if alpha1 == 0 or any(a == 0 for a, _ in others):
        raise InferenceError("coding coefficients must be nonzero")
    start = mul_int(alpha1, x1, params)
    state_sets = [_frozen(np.array([start], dtype=np.int64))]
    stages = []
    for alpha, cands in others:
        shifts = mul_scalar_array(alpha, cands.words, params)
        hits = np.bincount((state_sets[-1][:, None] ^ shifts[None, :]).ravel(), minlength=params.size)
        state_sets.append(_frozen(np.flatnonzero(hits)))
        stages.append((int(alpha), cands))
    return Trellis(
        params=params,
        coeffs=(int(alpha1),) + tuple(int(a) for a, _ in others),
        own_payload=int(x1),
        stages=tuple(stages),
        state_sets=tuple(state_sets),
    )


def forward_layers(t: Trellis) -> list[LayerWeights]:
    """Run the sum-product recursion and return every layer's weights."""
    size = t.params.size
    layer = LayerWeights(1, t.state_sets[0], _frozen(np.ones(1)))
    layers = [layer]
    for i, (alpha, cands) in enumerate(t.stages, start=2):
        shifts = mul_scalar_array(alpha, cands.words, t.params)
        dest = (layer.states[:, None] ^ shifts[None, :]).ravel()
        mass = (layer.weights[:, None] * cands.probs[None, :]).ravel()
        dense = np.bincount(dest, weights=mass, minlength=size)
        states = np.flatnonzero(dense)
        layer = LayerWeights(i, _frozen(states.astype(np.int64)), _frozen(dense[states]))
        layers.append(layer)
    return layers


def forward_pass(t: Trellis) -> LayerWeights:
    return forward_layers(t)[-1]


@dataclass(frozen=True)
class Verdict:
    p_star: float
    matched_count: int
    threshold: float | None = None
    flagged: bool | None = None


def compute_p_star(
    final: LayerWeights,
    relay_observed: int,
    relay_digest: int,
    h: HashFn,
    relay_ch: Bsc,
    n: int,
) -> Verdict:
    """Probability of overhearing ``relay_observed`` given the inferred combinations.

    Each state s contributes w(s) * P(relay_observed | s) / M where the
    likelihood is restricted to the relay's digest class and M normalizes
    over that class.
    """
    cls = hash_classes(h, n).get(int(relay_digest))
    if cls is None:
        raise InferenceError(f"relay digest {relay_digest} has an empty hash class")
    norm = bsc_likelihood(relay_observed, cls, relay_ch.p, n).sum()
    if norm == 0.0:
        raise InferenceError("relay observation is impossible under its digest and channel")
    matched = hash_eval(h, final.states) == relay_digest
    lik = bsc_likelihood(relay_observed, final.states[matched], relay_ch.p, n)
    p_star = float(np.dot(final.weights[matched], lik) / norm)
    return Verdict(p_star=p_star, matched_count=int(matched.sum()))


def decide(v: Verdict, t: float) -> Verdict:
    """Flag the relay when p_star <= t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return replace(v, threshold=t, flagged=v.p_star <= t)


def watchdog_check(
    own: tuple[int, int],
    overheard: Sequence[tuple[int, int, int, Bsc]],
    relay_observed: int,
    relay_digest: int,
    relay_ch: Bsc,
    h: HashFn,
    params: FieldParams,
    threshold: float | None = None,
) -> Verdict:
    """Full pipeline for one check.

    ``overheard`` holds (alpha_i, observed_i, digest_i, channel_i) for each
    other parent of the relay.
    """
    others = [
        (alpha, candidate_set(obs, dig, h, ch, params.n, source_index=i))
        for i, (alpha, obs, dig, ch) in enumerate(overheard, start=2)
    ]
    final = forward_pass(build_trellis(own, others, params))
    v = compute_p_star(final, relay_observed, relay_digest, h, relay_ch, params.n)
    return v if threshold is None else decide(v, threshold)
