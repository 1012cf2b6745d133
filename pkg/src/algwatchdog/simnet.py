"""Network simulation: the two-hop neighbourhood and the hop-by-hop protocol.

Intended transmissions (E1) arrive error-free; overheard transmissions (E2)
pass through a BSC. Headers (coefficients and digests) are always received
correctly. Adversarial nodes flip payload bits i.i.d. at rate ``p_adv``.
A node's own digest is forced to match its correct combination whenever at
least one of its children is honest; otherwise it publishes the digest of
whatever payload it actually sends.

Ground-truth labels are attached to verdicts only after inference has run;
the inference calls see nothing but overheard words, headers and channel
parameters.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path

import numpy as np

from .channel import Bsc, HashFn, Rng, flip_mask, hash_eval
from .field import FieldParams, mul_int
from .inference import (
    Verdict,
    build_trellis,
    candidate_set,
    compute_p_star,
    decide,
    forward_pass,
    watchdog_check,
)

log = logging.getLogger(__name__)

HONEST = "honest"
ADVERSARIAL = "adversarial"

# substream ids inside one trial / round
_PAYLOAD, _COEFF, _HASH, _SRC_CH, _RELAY_CH, _ADV, _CHECK = range(7)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TwoHopConfig:
    n: int = 10
    m: int = 3
    delta: int = 2
    p_s: float = 0.1
    p_relay: float = 0.1
    p_adv: float = 0.0
    threshold: float | None = None
    hash_fn: HashFn | None = None  # pin one hash instead of redrawing per trial

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.delta < 0 or self.delta > self.n:
            raise ConfigError(f"delta must be in [0, n], got {self.delta}")
        for name in ("p_s", "p_relay", "p_adv"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ConfigError(f"{name} must be in [0, 0.5], got {v}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be in [0, 1]")
        if self.hash_fn is not None and self.hash_fn.delta != self.delta:
            raise ConfigError("pinned hash has the wrong digest width")
        FieldParams(self.n)


@dataclass(frozen=True)
class CheckRecord:
    round: int
    checker: str
    target: str
    label: str
    verdict: Verdict | None
    checker_label: str = HONEST
    hash_forced: bool = True
    skipped: str | None = None

    @property
    def alert(self) -> bool:
        return bool(self.verdict is not None and self.verdict.flagged)


@dataclass
class TrialRecord:
    params: dict
    seed: int
    index: int
    checks: list[CheckRecord] = field(default_factory=list)
    truth: dict = field(default_factory=dict)

    def verdict(self, label: str) -> Verdict:
        for c in self.checks:
            if c.label == label and c.verdict is not None:
                return c.verdict
        raise KeyError(label)

    @property
    def honest(self) -> Verdict:
        return self.verdict(HONEST)

    @property
    def adversarial(self) -> Verdict:
        return self.verdict(ADVERSARIAL)


def _uniform_words(rng: np.random.Generator, count: int, n: int, low: int = 0) -> list[int]:
    return [int(v) for v in rng.integers(low, 1 << n, size=count)]


def run_two_hop_trial(cfg: TwoHopConfig, rng: Rng, index: int = 0) -> TrialRecord:
    """One paired two-hop trial seen from source 1.

    The same sources, coefficients, digest function and overheard source
    words feed a single trellis. Two relays are then scored against it: an
    honest one and an adversarial one. Both send the forced correct digest
    and both transmissions cross the same relay-channel noise pattern, so
    with ``p_adv = 0`` the two verdicts coincide exactly.
    """
    params = FieldParams(cfg.n)
    n, m = cfg.n, cfg.m
    payloads = _uniform_words(rng.substream(_PAYLOAD), m, n)
    coeffs = _uniform_words(rng.substream(_COEFF), m, n, low=1)
    h = cfg.hash_fn or HashFn.random(cfg.delta, rng.substream(_HASH))

    src_rng = rng.substream(_SRC_CH)
    src_ch = Bsc(cfg.p_s)
    overheard = [payloads[i] ^ flip_mask(n, cfg.p_s, src_rng) for i in range(1, m)]

    combo = 0
    for a, x in zip(coeffs, payloads):
        combo ^= mul_int(a, x, params)
    digest = int(hash_eval(h, combo))
    adv_error = flip_mask(n, cfg.p_adv, rng.substream(_ADV))
    channel_error = flip_mask(n, cfg.p_relay, rng.substream(_RELAY_CH))

    # inference: observations only
    others = [
        (coeffs[i], candidate_set(overheard[i - 1], int(hash_eval(h, payloads[i])), h, src_ch, n, i + 1))
        for i in range(1, m)
    ]
    final = forward_pass(build_trellis((coeffs[0], payloads[0]), others, params))
    relay_ch = Bsc(cfg.p_relay)
    checks = []
    for label, sent in ((HONEST, combo), (ADVERSARIAL, combo ^ adv_error)):
        v = compute_p_star(final, sent ^ channel_error, digest, h, relay_ch, n)
        if cfg.threshold is not None:
            v = decide(v, cfg.threshold)
        checks.append(CheckRecord(0, "v1", f"v{m + 1}", label, v))

    return TrialRecord(
        params=asdict(cfg) | {"hash_fn": [h.a, h.b, h.delta]},
        seed=rng.seed,
        index=index,
        checks=checks,
        truth={
            "payloads": payloads,
            "coeffs": coeffs,
            "combination": combo,
            "adv_error": adv_error,
            "channel_error": channel_error,
            "final_states": len(final),
        },
    )


# --- multi-hop -------------------------------------------------------------


@dataclass(frozen=True)
class NodeBehavior:
    kind: str = HONEST
    p_adv: float = 0.0

    def __post_init__(self):
        if self.kind not in (HONEST, ADVERSARIAL):
            raise ConfigError(f"unknown behaviour kind {self.kind!r}")
        if not 0.0 <= self.p_adv <= 0.5:
            raise ConfigError("p_adv must be in [0, 0.5]")
        if self.kind == HONEST and self.p_adv != 0.0:
            raise ConfigError("honest nodes cannot inject errors")

    @classmethod
    def adversary(cls, p_adv: float) -> NodeBehavior:
        return cls(ADVERSARIAL, p_adv)


@dataclass(frozen=True)
class Topology:
    """G = (V, E1, E2).

    ``e1`` holds intended transmissions (u, v); ``e2`` maps (u, k) to the
    crossover probability with which k overhears u; ``coeffs`` maps
    (v, u) to the coefficient v applies to the payload from parent u.
    """

    nodes: tuple[str, ...]
    e1: frozenset[tuple[str, str]]
    e2: dict[tuple[str, str], float]
    coeffs: dict[tuple[str, str], int]

    def __post_init__(self):
        names = set(self.nodes)
        if len(names) != len(self.nodes):
            raise ConfigError("duplicate node ids")
        for u, v in self.e1:
            if u not in names or v not in names:
                raise ConfigError(f"E1 edge ({u}, {v}) references an unknown node")
            if (v, u) not in self.coeffs:
                raise ConfigError(f"missing coefficient for {v} <- {u}")
        for (u, k), p in self.e2.items():
            if u not in names or k not in names:
                raise ConfigError(f"E2 edge ({u}, {k}) references an unknown node")
            if not 0.0 <= p <= 0.5:
                raise ConfigError(f"E2 edge ({u}, {k}) has crossover {p} outside [0, 0.5]")
        for (v, u), a in self.coeffs.items():
            if a == 0:
                raise ConfigError(f"coefficient for {v} <- {u} is zero")

    def parents(self, v: str) -> list[str]:
        return sorted(u for u, w in self.e1 if w == v)

    def children(self, u: str) -> list[str]:
        return sorted(w for x, w in self.e1 if x == u)

    def schedule(self) -> list[str]:
        """Transmission order: every node after all of its parents."""
        ts = TopologicalSorter({v: self.parents(v) for v in self.nodes})
        try:
            ts.prepare()
        except CycleError as e:
            raise ConfigError(f"topology has a cycle: {e.args[1]}") from None
        order = []
        while ts.is_active():
            ready = sorted(ts.get_ready())
            order.extend(ready)
            ts.done(*ready)
        return order

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "e1": [list(e) for e in sorted(self.e1)],
            "e2": [[u, k, p] for (u, k), p in sorted(self.e2.items())],
            "coeffs": [[v, u, a] for (v, u), a in sorted(self.coeffs.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Topology:
        try:
            return cls(
                nodes=tuple(d["nodes"]),
                e1=frozenset((u, v) for u, v in d["e1"]),
                e2={(u, k): float(p) for u, k, p in d.get("e2", [])},
                coeffs={(v, u): int(a) for v, u, a in d["coeffs"]},
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"malformed topology: {e}") from e


def load_network(path) -> tuple[Topology, dict[str, NodeBehavior], dict]:
    """Read a JSON network description.

    Schema::

        {
          "n": 10, "delta": 2,                     # optional
          "nodes": ["s1", "s2", "r", "t"],
          "e1": [["s1", "r"], ["s2", "r"], ["r", "t"]],
          "e2": [["s2", "s1", 0.1], ["r", "s1", 0.1]],   # [from, listener, p]
          "coeffs": [["r", "s1", 3], ["r", "s2", 7], ["t", "r", 1]],  # [node, parent, alpha]
          "behaviors": {"r": {"kind": "adversarial", "p_adv": 0.2}}
        }
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    topo = Topology.from_dict(raw)
    behaviors = {}
    for node, b in raw.get("behaviors", {}).items():
        if node not in topo.nodes:
            raise ConfigError(f"behaviour given for unknown node {node!r}")
        behaviors[node] = NodeBehavior(b.get("kind", HONEST), float(b.get("p_adv", 0.0)))
    extra = {k: raw[k] for k in ("n", "delta") if k in raw}
    return topo, behaviors, extra


def _is_adv(behaviors, v) -> bool:
    return behaviors.get(v, NodeBehavior()).kind == ADVERSARIAL


def run_protocol(
    topo: Topology,
    behaviors: dict[str, NodeBehavior],
    rounds: int,
    check_prob: float,
    rng: Rng,
    n: int = 10,
    delta: int = 2,
    threshold: float | None = None,
) -> list[TrialRecord]:
    """Distributed watchdog: each round every node transmits in schedule
    order, then each node independently decides (with ``check_prob``) to
    listen and check all of its downstream neighbours."""
    if not 0.0 <= check_prob <= 1.0:
        raise ConfigError("check_prob must be in [0, 1]")
    params = FieldParams(n)
    order = topo.schedule()
    idx = {v: i for i, v in enumerate(topo.nodes)}
    records = []
    for r in range(rounds):
        h = HashFn.random(delta, rng.substream(r, _HASH))
        sent: dict[str, int] = {}
        own_hash: dict[str, int] = {}
        parent_hashes: dict[str, dict[str, int]] = {}
        forced: dict[str, bool] = {}
        truth = {}
        for v in order:
            parents = topo.parents(v)
            if parents:
                combo = 0
                for u in parents:
                    combo ^= mul_int(topo.coeffs[(v, u)], sent[u], params)
                parent_hashes[v] = {u: int(hash_eval(h, sent[u])) for u in parents}
            else:
                combo = _uniform_words(rng.substream(r, _PAYLOAD, idx[v]), 1, n)[0]
                parent_hashes[v] = {}
            b = behaviors.get(v, NodeBehavior())
            err = flip_mask(n, b.p_adv, rng.substream(r, _ADV, idx[v])) if b.kind == ADVERSARIAL else 0
            sent[v] = combo ^ err
            children = topo.children(v)
            forced[v] = any(not _is_adv(behaviors, c) for c in children)
            if b.kind == ADVERSARIAL and not forced[v]:
                own_hash[v] = int(hash_eval(h, sent[v]))
            else:
                own_hash[v] = int(hash_eval(h, combo))
            truth[v] = {"combination": combo, "sent": sent[v], "error": err, "own_hash": own_hash[v]}

        checks = []
        for w in topo.nodes:
            if check_prob == 0.0 or rng.substream(r, _CHECK, idx[w]).random() >= check_prob:
                continue
            for v in topo.children(w):
                checks.append(
                    _check(topo, params, h, r, w, v, sent, own_hash, parent_hashes,
                           forced, behaviors, threshold, rng, idx)
                )
        records.append(
            TrialRecord(
                params={"n": n, "delta": delta, "check_prob": check_prob, "threshold": threshold,
                        "hash_fn": [h.a, h.b, h.delta]},
                seed=rng.seed,
                index=r,
                checks=checks,
                truth=truth,
            )
        )
    return records


def _check(topo, params, h, r, w, v, sent, own_hash, parent_hashes, forced,
           behaviors, threshold, rng, idx) -> CheckRecord:
    label = ADVERSARIAL if _is_adv(behaviors, v) else HONEST
    checker_label = ADVERSARIAL if _is_adv(behaviors, w) else HONEST
    siblings = [u for u in topo.parents(v) if u != w]
    missing = [(u, w) for u in siblings + [v] if (u, w) not in topo.e2]
    if missing:
        log.info("round %d: %s cannot check %s, missing overhearing edges %s", r, w, v, missing)
        return CheckRecord(r, w, v, label, None, checker_label, forced[v],
                           skipped=f"missing E2 edges {missing}")
    overheard = []
    for u in siblings:
        p = topo.e2[(u, w)]
        noise = flip_mask(params.n, p, rng.substream(r, _SRC_CH, idx[w], idx[v], idx[u]))
        # digests come from the relay's header: the hash of what it received
        overheard.append((topo.coeffs[(v, u)], sent[u] ^ noise, parent_hashes[v][u], Bsc(p)))
    p_relay = topo.e2[(v, w)]
    relay_obs = sent[v] ^ flip_mask(params.n, p_relay, rng.substream(r, _RELAY_CH, idx[w], idx[v]))
    verdict = watchdog_check(
        own=(topo.coeffs[(v, w)], sent[w]),
        overheard=overheard,
        relay_observed=relay_obs,
        relay_digest=own_hash[v],
        relay_ch=Bsc(p_relay),
        h=h,
        params=params,
        threshold=threshold,
    )
    return CheckRecord(r, w, v, label, verdict, checker_label, forced[v])


def two_hop_topology(m: int, p_s: float, p_relay: float, coeffs=None) -> Topology:
    """The single-relay neighbourhood: v1..vm -> v(m+1) -> v(m+2), with v1
    overhearing every other source and the relay."""
    nodes = tuple(f"v{i}" for i in range(1, m + 3))
    relay, sink = f"v{m + 1}", f"v{m + 2}"
    coeffs = coeffs or [1] * m
    e1 = {(f"v{i}", relay) for i in range(1, m + 1)} | {(relay, sink)}
    e2 = {(f"v{i}", "v1"): p_s for i in range(2, m + 1)}
    e2[(relay, "v1")] = p_relay
    c = {(relay, f"v{i}"): coeffs[i - 1] for i in range(1, m + 1)}
    c[(sink, relay)] = 1
    return Topology(nodes, frozenset(e1), e2, c)


def line_of_stars(stars: int = 3, sources: int = 3, p: float = 0.1, seed: int = 0) -> Topology:
    """Three-hop network: ``stars`` groups of sources, each feeding its own
    relay; all relays feed a common second-hop relay ``q`` that delivers
    to sink ``t``. Every source overhears its siblings and its relay; each
    first-hop relay overhears the other relays and ``q``."""
    g = np.random.default_rng(seed)
    nodes, e1, e2, c = [], set(), {}, {}
    relays = [f"r{k}" for k in range(stars)]
    for k, rk in enumerate(relays):
        srcs = [f"s{k}_{i}" for i in range(sources)]
        nodes += srcs + [rk]
        for s in srcs:
            e1.add((s, rk))
            c[(rk, s)] = int(g.integers(1, 1 << 10))
            e2[(rk, s)] = p
            for s2 in srcs:
                if s2 != s:
                    e2[(s2, s)] = p
        e1.add((rk, "q"))
        c[("q", rk)] = int(g.integers(1, 1 << 10))
        e2[("q", rk)] = p
        for r2 in relays:
            if r2 != rk:
                e2[(r2, rk)] = p
    nodes += ["q", "t"]
    e1.add(("q", "t"))
    c[("t", "q")] = 1
    return Topology(tuple(nodes), frozenset(e1), e2, c)


# --- collusion scenarios ---------------------------------------------------


def _star(parents: int, children: int, p: float) -> Topology:
    ps = [f"u{i}" for i in range(parents)]
    cs = [f"c{i}" for i in range(children)]
    nodes = tuple(ps + ["v"] + cs)
    e1 = {(u, "v") for u in ps} | {("v", c) for c in cs}
    e2 = {}
    for u in ps:
        e2[("v", u)] = p
        for u2 in ps:
            if u2 != u:
                e2[(u2, u)] = p
    coeffs = {("v", u): i + 1 for i, u in enumerate(ps)}
    coeffs |= {(c, "v"): 1 for c in cs}
    return Topology(nodes, frozenset(e1), e2, coeffs)


@dataclass
class ScenarioReport:
    name: str
    honest_checks: int
    binding_checks: int
    p_star_adversary: float | None
    p_star_honest: float | None

    @property
    def covered(self) -> bool:
        return self.binding_checks > 0


def collusion_scenarios(rng: Rng, rounds: int = 200, p: float = 0.1, p_adv: float = 0.2,
                        n: int = 10, delta: int = 2) -> list[ScenarioReport]:
    """Relay ``v`` with three parents and two children, in three settings.

    ``honest_checks`` counts checks on the adversarial relay made by honest
    nodes; ``binding_checks`` keeps only those where the relay's digest was
    forced by an honest child, i.e. checks that can actually catch it. The
    mean p* of the same checks with an honest relay in its place (same
    seed) is reported for comparison.
    """
    adv = NodeBehavior.adversary(p_adv)
    settings = {
        "all_parents_byzantine": {"u0": adv, "u1": adv, "u2": adv, "v": adv},
        "healthy": {"u1": adv, "v": adv, "c1": adv},
        "all_children_byzantine": {"v": adv, "c0": adv, "c1": adv},
    }
    topo = _star(3, 2, p)
    reports = []
    for k, (name, behaviors) in enumerate(settings.items()):
        twin = dict(behaviors)
        twin["v"] = NodeBehavior()
        sub = rng.child(k)
        runs = {
            tag: [c for rec in run_protocol(topo, b, rounds, 1.0, sub, n, delta)
                  for c in rec.checks
                  if c.target == "v" and c.checker_label == HONEST and c.verdict is not None]
            for tag, b in (("adv", behaviors), ("honest", twin))
        }
        adv_checks = runs["adv"]
        reports.append(ScenarioReport(
            name=name,
            honest_checks=len(adv_checks),
            binding_checks=sum(c.hash_forced for c in adv_checks),
            p_star_adversary=float(np.mean([c.verdict.p_star for c in adv_checks])) if adv_checks else None,
            p_star_honest=float(np.mean([c.verdict.p_star for c in runs["honest"]])) if runs["honest"] else None,
        ))
    return reports


# --- export ---------------------------------------------------------------

CHECK_COLUMNS = ("round", "checker", "target", "label", "checker_label", "hash_forced",
                 "p_star", "matched_count", "threshold", "flagged", "alert", "skipped")


def check_rows(records: list[TrialRecord]) -> list[dict]:
    rows = []
    for rec in records:
        for c in rec.checks:
            v = c.verdict
            rows.append({
                "round": rec.index if c.round == 0 else c.round,
                "checker": c.checker,
                "target": c.target,
                "label": c.label,
                "checker_label": c.checker_label,
                "hash_forced": c.hash_forced,
                "p_star": None if v is None else v.p_star,
                "matched_count": None if v is None else v.matched_count,
                "threshold": None if v is None else v.threshold,
                "flagged": None if v is None else v.flagged,
                "alert": c.alert,
                "skipped": c.skipped,
            })
    return rows
