import inspect
import json
from collections import defaultdict

import numpy as np
import pytest

from algwatchdog import inference
from algwatchdog.channel import Rng, compose_bsc
from algwatchdog.field import FieldParams, mul_int
from algwatchdog.simnet import (
    HONEST,
    ConfigError,
    NodeBehavior,
    Topology,
    TwoHopConfig,
    collusion_scenarios,
    line_of_stars,
    load_network,
    run_protocol,
    run_two_hop_trial,
    two_hop_topology,
)


def test_noiseless_honest_trial():
    cfg = TwoHopConfig(p_s=0.0, p_relay=0.0, p_adv=0.0)
    for i in range(20):
        rec = run_two_hop_trial(cfg, Rng(4).child(i))
        assert rec.honest.p_star == 1.0
        assert rec.honest.matched_count == 1


def test_null_attack_verdicts_identical():
    cfg = TwoHopConfig(p_adv=0.0)
    for i in range(50):
        rec = run_two_hop_trial(cfg, Rng(11).child(i))
        assert rec.honest == rec.adversarial


def test_trial_replay():
    cfg = TwoHopConfig(p_adv=0.2, m=4)
    a = run_two_hop_trial(cfg, Rng(7).child(3), 3)
    b = run_two_hop_trial(cfg, Rng(7).child(3), 3)
    assert a == b
    assert a != run_two_hop_trial(cfg, Rng(7).child(4), 4)


def test_trial_truth_is_consistent():
    cfg = TwoHopConfig(p_adv=0.3)
    params = FieldParams(10)
    rec = run_two_hop_trial(cfg, Rng(2).child(0))
    combo = 0
    for a, x in zip(rec.truth["coeffs"], rec.truth["payloads"]):
        combo ^= mul_int(a, x, params)
    assert rec.truth["combination"] == combo


def test_config_validation():
    with pytest.raises(ConfigError):
        TwoHopConfig(m=0)
    with pytest.raises(ConfigError):
        TwoHopConfig(p_adv=0.7)
    with pytest.raises(ConfigError):
        TwoHopConfig(delta=11)
    with pytest.raises(ValueError):
        TwoHopConfig(n=25)


def test_threshold_applied():
    rec = run_two_hop_trial(TwoHopConfig(threshold=1.0), Rng(0).child(0))
    assert rec.honest.flagged is True and rec.honest.threshold == 1.0


def test_effective_flip_rate_matches_cascade():
    cfg = TwoHopConfig(p_adv=0.1, p_relay=0.1, m=1)
    flips = bits = 0
    for i in range(10_000):
        t = run_two_hop_trial(cfg, Rng(99).child(i)).truth
        flips += bin(t["adv_error"] ^ t["channel_error"]).count("1")
        bits += cfg.n
    assert bits >= 10**5
    # flips on the same bit cancel, so the cascade rate is p + q - 2pq
    rate, exact = flips / bits, 0.1 + 0.1 - 2 * 0.01
    assert abs(rate - exact) <= 4 * np.sqrt(exact * (1 - exact) / bits)
    assert compose_bsc(0.1, 0.1) == pytest.approx(0.19)


def test_inference_api_takes_no_ground_truth():
    for fn in (inference.candidate_set, inference.build_trellis, inference.compute_p_star,
               inference.watchdog_check):
        names = set(inspect.signature(fn).parameters)
        assert not names & {"label", "behavior", "behaviors", "truth", "kind"}


# --- topology / protocol ----------------------------------------------------


def test_schedule_and_cycle_detection():
    topo = two_hop_topology(3, 0.1, 0.1)
    order = topo.schedule()
    assert order.index("v4") > max(order.index(v) for v in ("v1", "v2", "v3"))
    assert order[-1] == "v5"
    cyc = Topology(("a", "b"), frozenset({("a", "b"), ("b", "a")}), {}, {("b", "a"): 1, ("a", "b"): 1})
    with pytest.raises(ConfigError):
        cyc.schedule()
    with pytest.raises(ConfigError):
        run_protocol(cyc, {}, 1, 1.0, Rng(0))


def test_topology_validation():
    with pytest.raises(ConfigError):
        Topology(("a",), frozenset({("a", "z")}), {}, {("z", "a"): 1})
    with pytest.raises(ConfigError):
        Topology(("a", "b"), frozenset({("a", "b")}), {}, {("b", "a"): 0})
    with pytest.raises(ConfigError):
        Topology(("a", "b"), frozenset({("a", "b")}), {("a", "b"): 0.7}, {("b", "a"): 1})
    with pytest.raises(ConfigError):
        Topology(("a", "b"), frozenset({("a", "b")}), {}, {})
    with pytest.raises(ConfigError):
        NodeBehavior(HONEST, 0.1)
    with pytest.raises(ConfigError):
        NodeBehavior("sneaky")


def test_no_checks_when_check_prob_zero():
    recs = run_protocol(two_hop_topology(3, 0.1, 0.1), {}, 20, 0.0, Rng(0))
    assert len(recs) == 20
    assert all(not r.checks for r in recs)


def test_protocol_honest_relay_transmits_combination():
    topo = two_hop_topology(3, 0.1, 0.1, coeffs=[5, 9, 300])
    params = FieldParams(10)
    for rec in run_protocol(topo, {}, 10, 1.0, Rng(3)):
        t = rec.truth
        combo = 0
        for i, a in zip((1, 2, 3), (5, 9, 300)):
            combo ^= mul_int(a, t[f"v{i}"]["sent"], params)
        assert t["v4"]["sent"] == t["v4"]["combination"] == combo


def test_two_hop_protocol_reduces_to_single_check():
    topo = two_hop_topology(3, 0.0, 0.0, coeffs=[3, 7, 11])
    recs = run_protocol(topo, {}, 20, 1.0, Rng(5))
    for rec in recs:
        done = [c for c in rec.checks if c.verdict is not None]
        skipped = [c for c in rec.checks if c.verdict is None]
        assert [(c.checker, c.target) for c in done] == [("v1", "v4")]
        assert done[0].verdict.p_star == 1.0 and done[0].verdict.matched_count == 1
        assert {c.checker for c in skipped} == {"v2", "v3", "v4"}
        assert all(c.skipped for c in skipped)


def test_two_hop_protocol_matches_trial_distribution():
    rounds = 600
    topo = two_hop_topology(3, 0.1, 0.1, coeffs=[3, 7, 11])
    proto = [c.verdict.p_star for r in run_protocol(topo, {}, rounds, 1.0, Rng(8))
             for c in r.checks if c.verdict is not None]
    trial = [run_two_hop_trial(TwoHopConfig(), Rng(8).child(i)).honest.p_star for i in range(rounds)]
    se = np.hypot(np.std(proto), np.std(trial)) / np.sqrt(rounds)
    assert abs(np.mean(proto) - np.mean(trial)) < 4 * se


def test_protocol_replay():
    topo = line_of_stars(2, 2)
    beh = {"r0": NodeBehavior.adversary(0.2)}
    a = run_protocol(topo, beh, 5, 0.5, Rng(12))
    b = run_protocol(topo, beh, 5, 0.5, Rng(12))
    assert a == b


def test_line_of_stars_separates_adversary():
    topo = line_of_stars(3, 3)
    recs = run_protocol(topo, {"r0": NodeBehavior.adversary(0.2)}, 200, 1.0, Rng(1))
    by_target = defaultdict(list)
    for r in recs:
        for c in r.checks:
            if c.verdict is not None and c.checker.startswith("s"):
                by_target[c.target].append(c.verdict.p_star)
    adv = np.mean(by_target["r0"])
    assert adv < np.mean(by_target["r1"]) and adv < np.mean(by_target["r2"])


def test_forwarded_corruption_does_not_blame_next_hop():
    # q combines r0's corrupted payload faithfully, so its checks look the
    # same as in a network with no adversary at all
    topo = line_of_stars(3, 2)

    def q_scores(behaviors):
        recs = run_protocol(topo, behaviors, 300, 1.0, Rng(2))
        return [c.verdict.p_star for r in recs for c in r.checks
                if c.target == "q" and c.verdict is not None]

    attacked = q_scores({"r0": NodeBehavior.adversary(0.3)})
    clean = q_scores({})
    se = np.hypot(np.std(attacked), np.std(clean)) / np.sqrt(len(clean))
    assert abs(np.mean(attacked) - np.mean(clean)) < 4 * se


def test_load_network(tmp_path):
    topo = two_hop_topology(2, 0.1, 0.2, coeffs=[4, 5])
    raw = topo.to_dict() | {"n": 8, "delta": 1, "behaviors": {"v3": {"kind": "adversarial", "p_adv": 0.2}}}
    path = tmp_path / "net.json"
    path.write_text(json.dumps(raw))
    got, beh, extra = load_network(path)
    assert got == topo
    assert beh == {"v3": NodeBehavior.adversary(0.2)}
    assert extra == {"n": 8, "delta": 1}


def test_load_network_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_network(bad)
    bad.write_text(json.dumps({"nodes": ["a"]}))
    with pytest.raises(ConfigError):
        load_network(bad)
    with pytest.raises(ConfigError):
        load_network(tmp_path / "missing.json")


def test_unforced_adversary_publishes_own_digest():
    topo = two_hop_topology(2, 0.1, 0.1)
    beh = {"v3": NodeBehavior.adversary(0.3), "v4": NodeBehavior.adversary(0.0)}
    for rec in run_protocol(topo, beh, 10, 1.0, Rng(0)):
        check = next(c for c in rec.checks if c.target == "v3")
        assert check.hash_forced is False
        a, b, delta = rec.params["hash_fn"]
        t = rec.truth["v3"]
        assert t["own_hash"] == (a * t["sent"] + b) % (1 << delta)
        forced = next(c for c in rec.checks if c.target == "v4")
        assert forced.hash_forced is False  # v4 has no children at all


def test_collusion_scenarios():
    reports = {r.name: r for r in collusion_scenarios(Rng(0), rounds=30)}
    assert reports["all_parents_byzantine"].honest_checks == 0
    assert not reports["all_parents_byzantine"].covered
    assert reports["healthy"].binding_checks >= 1 and reports["healthy"].covered
    assert reports["all_children_byzantine"].honest_checks > 0
    assert reports["all_children_byzantine"].binding_checks == 0
    assert not reports["all_children_byzantine"].covered
