"""Brute-force reference computations, deliberately sharing no code paths
with the library beyond plain data."""

import itertools

import numpy as np


def poly_mul_mod(a, b, poly):
    """Schoolbook GF(2)[x] product followed by long division."""
    prod = 0
    for i in range(b.bit_length()):
        if (b >> i) & 1:
            prod ^= a << i
    deg = poly.bit_length() - 1
    for bit in range(prod.bit_length() - 1, deg - 1, -1):
        if (prod >> bit) & 1:
            prod ^= poly << (bit - deg)
    return prod


def mul_table(n, poly):
    size = 1 << n
    return np.array([[poly_mul_mod(a, b, poly) for b in range(size)] for a in range(size)],
                    dtype=np.int64)


def popcount(x):
    return bin(x).count("1")


def likelihood(x, y, p, n):
    d = popcount(x ^ y)
    return p**d * (1 - p) ** (n - d)


def digest(a, b, delta, x):
    return (a * x + b) % (2**delta)


def candidates(observed, dig, a, b, delta, p, n):
    """Normalized posterior over every word of the digest class."""
    raw = {y: likelihood(observed, y, p, n) for y in range(2**n) if digest(a, b, delta, y) == dig}
    raw = {y: w for y, w in raw.items() if w > 0}
    total = sum(raw.values())
    return {y: w / total for y, w in raw.items()}


def final_weights_by_tuples(own_state, coeffs, cand_dicts, table):
    """Sum the probability of every tuple of candidates, grouped by the
    resulting combination. Vectorized over the full Cartesian product."""
    if not cand_dicts:
        return {own_state: 1.0}
    words = [np.array(list(c.keys())) for c in cand_dicts]
    probs = [np.array(list(c.values())) for c in cand_dicts]
    k = len(words)
    state = np.full((1,) * k, own_state, dtype=np.int64)
    prob = np.ones((1,) * k)
    for i, (a, w, q) in enumerate(zip(coeffs, words, probs)):
        shape = [1] * k
        shape[i] = len(w)
        state = state ^ table[a][w].reshape(shape)
        prob = prob * q.reshape(shape)
    state, prob = np.broadcast_arrays(state, prob)
    out = {}
    for s, q in zip(state.ravel().tolist(), prob.ravel().tolist()):
        out[s] = out.get(s, 0.0) + q
    return out


def final_weights_loop(own_state, coeffs, cand_dicts, table):
    """Pure-Python tuple enumeration for small instances."""
    out = {}
    for combo in itertools.product(*(c.items() for c in cand_dicts)):
        s, q = own_state, 1.0
        for a, (y, py) in zip(coeffs, combo):
            s ^= int(table[a][y])
            q *= py
        out[s] = out.get(s, 0.0) + q
    return out


def p_star(final, relay_obs, relay_digest, a, b, delta, p, n):
    """Double sum over all 2^n states and all words of the relay class."""
    norm = sum(likelihood(relay_obs, y, p, n) for y in range(2**n)
               if digest(a, b, delta, y) == relay_digest)
    total = 0.0
    for s in range(2**n):
        w = final.get(s, 0.0)
        if w and digest(a, b, delta, s) == relay_digest:
            total += w * likelihood(relay_obs, s, p, n) / norm
    matched = sum(1 for s, w in final.items() if w > 0 and digest(a, b, delta, s) == relay_digest)
    return total, matched


def random_instance(rng, n, m, delta, p):
    """Random watchdog instance with a consistent (true) relay combination."""
    a = int(rng.integers(1, 2**delta)) if delta else 0
    b = int(rng.integers(0, 2**delta)) if delta else 0
    payloads = rng.integers(0, 2**n, size=m).tolist()
    coeffs = rng.integers(1, 2**n, size=m).tolist()
    observed = [x ^ int(rng.integers(0, 2**n)) if rng.random() < 0.5 else x for x in payloads]
    relay_obs = int(rng.integers(0, 2**n))
    return dict(n=n, m=m, delta=delta, p=p, a=a, b=b, payloads=payloads,
                coeffs=coeffs, observed=observed, relay_obs=relay_obs)
