"""Command-line entry point: ``algwatchdog <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from . import analysis
from .channel import Rng
from .experiment import (
    SWEEPABLE,
    ExperimentSpec,
    export,
    export_records,
    records_to_text,
    rows_to_csv,
    rows_to_json,
    run_experiment,
)
from .simnet import (
    ConfigError,
    TwoHopConfig,
    collusion_scenarios,
    load_network,
    run_protocol,
    run_two_hop_trial,
)

# sweep presets for the four published tables
TABLES = {
    "I": ("p_adv", "0,0.05,0.1,0.15,0.2,0.3"),
    "II": ("delta", "0,1,2,3"),
    "III": ("p_s", "0.05,0.1,0.2,0.3"),
    "IV": ("m", "1,2,3,4,5"),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=10, help="payload bits")
    p.add_argument("--m", type=int, default=3, help="number of sources")
    p.add_argument("--delta", type=int, default=2, help="digest bits")
    p.add_argument("--p-s", type=float, default=0.1, help="source overhearing crossover")
    p.add_argument("--p-relay", type=float, default=0.1, help="relay overhearing crossover")
    p.add_argument("--p-adv", type=float, default=0.1, help="adversarial bit-flip rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None)


def _output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def _config(args) -> TwoHopConfig:
    return TwoHopConfig(
        n=args.n, m=args.m, delta=args.delta, p_s=args.p_s,
        p_relay=args.p_relay, p_adv=args.p_adv, threshold=args.threshold,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algwatchdog", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("two-hop", help="run one paired trial and print p* for both relays")
    _common(p)
    p.add_argument("--trial", type=int, default=0, help="trial index within the seed")

    p = sub.add_parser("sweep", help="reproduce a table of mean/variance of p*")
    _common(p)
    _output(p)
    p.add_argument("--table", choices=sorted(TABLES), help="preset sweep for a published table")
    p.add_argument("--sweep", choices=sorted(SWEEPABLE))
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--pin-hash", action="store_true", help="use one hash for all trials")

    p = sub.add_parser("protocol", help="run the distributed watchdog on a topology file")
    _output(p)
    p.add_argument("--config", required=True, help="JSON network description")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--check-prob", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("analyze", help="evaluate the closed-form matched-count formulas")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--delta", type=float, default=2)
    p.add_argument("--p-s", type=float, default=0.1)
    p.add_argument("--p-relay", type=float, default=0.1)
    p.add_argument("--d", type=float, default=0, help="minimum distance of every code")

    p = sub.add_parser("scenarios", help="detection coverage in the degenerate topologies")
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--p-adv", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _emit(text: str, args, writer, payload) -> None:
    if args.out:
        writer(payload, args.format, args.out)
    else:
        sys.stdout.write(text)


def cmd_two_hop(args) -> None:
    cfg = _config(args)
    rec = run_two_hop_trial(cfg, Rng(args.seed).child(args.trial), args.trial)
    for label in ("honest", "adversarial"):
        v = rec.verdict(label)
        line = f"{label:12s} p*={v.p_star:.6g} matched={v.matched_count}"
        if v.flagged is not None:
            line += f" flagged={v.flagged}"
        print(line)


def cmd_sweep(args) -> None:
    if args.table:
        sweep, values = TABLES[args.table]
        sweep, values = args.sweep or sweep, args.values or values
    else:
        if not args.sweep or not args.values:
            raise ConfigError("sweep needs --table or both --sweep and --values")
        sweep, values = args.sweep, args.values
    spec = ExperimentSpec(
        sweep=sweep,
        values=tuple(v for v in values.split(",") if v.strip()),
        base=_config(args),
        trials=args.trials,
        seed=args.seed,
        pin_hash=args.pin_hash,
    )
    rows = run_experiment(spec)
    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
    _emit(text, args, export, rows)


def cmd_protocol(args) -> None:
    topo, behaviors, extra = load_network(args.config)
    n = args.n or extra.get("n", 10)
    delta = args.delta if args.delta is not None else extra.get("delta", 2)
    records = run_protocol(topo, behaviors, args.rounds, args.check_prob, Rng(args.seed),
                           n=n, delta=delta, threshold=args.threshold)
    _emit(records_to_text(records, args.format), args, export_records, records)


def cmd_analyze(args) -> None:
    m = args.m
    size = m + 2
    p = [[args.p_s] * size for _ in range(size)]
    p[m + 1] = [args.p_relay] * size
    params = analysis.AnalysisParams(
        n=args.n, m=m, delta=args.delta,
        d=tuple([0] + [args.d] * (m + 1)),
        p=tuple(tuple(r) for r in p),
    )
    out = {
        "inferred_combination_bound": analysis.inferred_combination_bound(params),
        "relay_match_fraction": analysis.relay_match_fraction(params),
        "expected_matched_count": analysis.expected_matched_count(params),
    }
    for name, c in out.items():
        print(f"{name:28s} exponent={c.exponent:.6f} value={c.value:.6g}")


def cmd_scenarios(args) -> None:
    reports = collusion_scenarios(Rng(args.seed), rounds=args.rounds, p_adv=args.p_adv)
    for r in reports:
        print(json.dumps(asdict(r) | {"covered": r.covered}))


COMMANDS = {
    "two-hop": cmd_two_hop,
    "sweep": cmd_sweep,
    "protocol": cmd_protocol,
    "analyze": cmd_analyze,
    "scenarios": cmd_scenarios,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError) as e:
        print(f"algwatchdog: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
