"""Parameter sweeps over paired two-hop trials, and their CSV/JSON export."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import HashFn, Rng
from .simnet import TrialRecord, TwoHopConfig, check_rows, CHECK_COLUMNS, run_two_hop_trial

SWEEPABLE = {"p_adv": float, "delta": int, "p_s": float, "m": int}
COLUMNS = ("sweep", "p_star_adv_mean", "p_star_adv_var", "p_star_relay_mean", "p_star_relay_var")

_PIN_KEY = 1 << 31


@dataclass(frozen=True)
class ExperimentSpec:
    sweep: str = "p_adv"
    values: tuple = (0.0, 0.05, 0.1, 0.15, 0.2, 0.3)
    base: TwoHopConfig = field(default_factory=lambda: TwoHopConfig(p_adv=0.1))
    trials: int = 200
    seed: int = 0
    pin_hash: bool = False

    def __post_init__(self):
        if self.sweep not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.sweep!r}; choose from {sorted(SWEEPABLE)}")
        if not self.values:
            raise ValueError("no sweep values given")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "values", tuple(SWEEPABLE[self.sweep](v) for v in self.values))
        for v in self.values:
            self.config_for(v)

    def config_for(self, value) -> TwoHopConfig:
        return replace(self.base, **{self.sweep: value})


@dataclass(frozen=True)
class TableRow:
    sweep: float
    p_star_adv_mean: float
    p_star_adv_var: float
    p_star_relay_mean: float
    p_star_relay_var: float

    @classmethod
    def from_samples(cls, value, adv: np.ndarray, relay: np.ndarray) -> TableRow:
        ddof = 1 if len(adv) > 1 else 0
        return cls(
            sweep=value,
            p_star_adv_mean=float(adv.mean()),
            p_star_adv_var=float(adv.var(ddof=ddof)),
            p_star_relay_mean=float(relay.mean()),
            p_star_relay_var=float(relay.var(ddof=ddof)),
        )


def run_trials(cfg: TwoHopConfig, trials: int, seed: int) -> list[TrialRecord]:
    """Trial i always uses the substream keyed by (seed, i), whatever cfg is."""
    rng = Rng(seed)
    return [run_two_hop_trial(cfg, rng.child(i), i) for i in range(trials)]


def run_experiment(spec: ExperimentSpec, records: dict | None = None) -> list[TableRow]:
    """One row per sweep value. Pass a dict as ``records`` to collect the
    underlying trial records keyed by sweep value."""
    rows = []
    for value in spec.values:
        cfg = spec.config_for(value)
        if spec.pin_hash:
            h = HashFn.random(cfg.delta, Rng(spec.seed).substream(_PIN_KEY, cfg.delta))
            cfg = replace(cfg, hash_fn=h)
        recs = run_trials(cfg, spec.trials, spec.seed)
        if records is not None:
            records[value] = recs
        adv = np.array([r.adversarial.p_star for r in recs])
        relay = np.array([r.honest.p_star for r in recs])
        rows.append(TableRow.from_samples(value, adv, relay))
    return rows


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return "" if x is None else str(x)


def rows_to_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(float(getattr(r, c))) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[TableRow]) -> str:
    return json.dumps([{c: getattr(r, c) for c in COLUMNS} for r in rows], indent=2) + "\n"


def rows_from_json(text: str) -> list[TableRow]:
    return [TableRow(**{c: d[c] for c in COLUMNS}) for d in json.loads(text)]


def rows_from_csv(text: str) -> list[TableRow]:
    reader = csv.DictReader(io.StringIO(text))
    return [TableRow(**{c: float(d[c]) for c in COLUMNS}) for d in reader]


def _write(text: str, path) -> Path:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def export(rows: list[TableRow], fmt: str, path) -> Path:
    """Write table rows as CSV (6 significant digits) or JSON (full precision)."""
    if fmt == "csv":
        return _write(rows_to_csv(rows), path)
    if fmt == "json":
        return _write(rows_to_json(rows), path)
    raise ValueError(f"unknown format {fmt!r}")


def records_to_text(records: list[TrialRecord], fmt: str) -> str:
    rows = check_rows(records)
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CHECK_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in CHECK_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def export_records(records: list[TrialRecord], fmt: str, path) -> Path:
    return _write(records_to_text(records, fmt), path)
