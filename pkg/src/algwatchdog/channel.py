"""Binary symmetric channels, the affine digest, and seeded randomness."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Bsc:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"crossover probability must be in [0, 0.5], got {self.p}")


@dataclass(frozen=True)
class HashFn:
    """h(x) = (a*x + b) mod 2^delta with ordinary integer arithmetic.

    delta = 0 gives the empty digest (represented as 0) on which every
    input collides.
    """

    a: int
    b: int
    delta: int

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        mod = 1 << self.delta
        if not 0 <= self.b < mod:
            raise ValueError(f"b must be in [0, {mod}), got {self.b}")
        if self.delta > 0 and not 1 <= self.a < mod:
            raise ValueError(f"a must be in [1, {mod}), got {self.a}")

    @property
    def mask(self) -> int:
        return (1 << self.delta) - 1

    def __call__(self, x):
        return hash_eval(self, x)

    @classmethod
    def random(cls, delta: int, rng: np.random.Generator) -> HashFn:
        if delta == 0:
            return cls(0, 0, 0)
        mod = 1 << delta
        return cls(int(rng.integers(1, mod)), int(rng.integers(0, mod)), delta)


def hash_eval(h: HashFn, x):
    """Digest of an integer or of an integer numpy array."""
    return (h.a * x + h.b) & h.mask


@lru_cache(maxsize=256)
def hash_classes(h: HashFn, n: int) -> dict[int, np.ndarray]:
    """Partition of {0,1}^n by digest, computed once per (hash, n)."""
    words = np.arange(1 << n, dtype=np.int64)
    digests = hash_eval(h, words)
    order = np.argsort(digests, kind="stable")
    keys, starts = np.unique(digests[order], return_index=True)
    groups = np.split(order, starts[1:])
    classes = {}
    for k, g in zip(keys, groups):
        g = np.sort(g)
        g.flags.writeable = False
        classes[int(k)] = g
    return classes


def compose_bsc(p1: float, p2: float) -> float:
    """Probability that at least one of two independent BSC stages flips a bit.

    This is the "effective adversarial error rate" used by the analysis. The
    true crossover of the cascade is ``p1 + p2 - 2*p1*p2``, since two flips on
    the same bit cancel.
    """
    return p1 + p2 - p1 * p2


def flip_mask(n: int, p: float, rng: np.random.Generator) -> int:
    """n-bit error pattern with each bit set independently with probability p."""
    bits = rng.random(n) < p
    return int(np.dot(bits.astype(np.int64), 1 << np.arange(n, dtype=np.int64)))


def bsc_transmit(word: int, n: int, ch: Bsc, rng: np.random.Generator) -> int:
    return word ^ flip_mask(n, ch.p, rng)


class Rng:
    """Seed-addressed family of counter-based (Philox) generators.

    ``substream(*keys)`` returns a fresh generator that depends only on the
    seed and the keys, so trials can be replayed or run in any order.
    """

    def __init__(self, seed: int = 0):
        if not 0 <= seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed

    def substream(self, *keys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in keys))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *keys: int) -> Rng:
        """A derived Rng whose substreams are namespaced under ``keys``."""
        return _ChildRng(self, keys)

    def __repr__(self):
        return f"Rng(seed={self.seed})"


class _ChildRng(Rng):
    def __init__(self, parent: Rng, prefix: tuple[int, ...]):
        self.seed = parent.seed
        self._parent = parent
        self._prefix = tuple(int(k) for k in prefix)

    def substream(self, *keys: int) -> np.random.Generator:
        return self._parent.substream(*self._prefix, *keys)
