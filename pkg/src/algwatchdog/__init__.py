"""Algebraic watchdog for network-coded wireless relays.

Simulates nodes that overhear noisy neighbour transmissions, infer the
linear combination a downstream relay ought to send, and score the relay's
actual transmission with a consistency probability ``p_star``.
"""

from .channel import Bsc, HashFn, Rng, bsc_transmit, compose_bsc, hash_eval
from .field import FieldElement, FieldParams, gf_add, gf_mul, hamming, linear_combination
from .inference import (
    CandidateSet,
    LayerWeights,
    Trellis,
    Verdict,
    build_trellis,
    candidate_set,
    compute_p_star,
    decide,
    forward_pass,
    watchdog_check,
)

__version__ = "0.1.0"

__all__ = [
    "Bsc", "HashFn", "Rng", "bsc_transmit", "compose_bsc", "hash_eval",
    "FieldElement", "FieldParams", "gf_add", "gf_mul", "hamming", "linear_combination",
    "CandidateSet", "LayerWeights", "Trellis", "Verdict", "build_trellis", "candidate_set",
    "compute_p_star", "decide", "forward_pass", "watchdog_check",
]
