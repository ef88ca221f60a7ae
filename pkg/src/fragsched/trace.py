"""Node-availability event logs: parsing, fragments, statistics, synthesis.

Trace files are JSON Lines, one ``{"t": seconds, "join": [...], "leave": [...]}``
record per line.  Records sharing a timestamp are coalesced into one event.
A record with empty ``join`` and ``leave`` lists marks the log horizon and
must come last.
"""
from __future__ import annotations

import bisect
import csv
import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import Event, Fragment, NodeId


class TraceError(ValueError):
    """Malformed or inconsistent trace; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TraceParseError(TraceError):
    pass


class TraceSemanticError(TraceError):
    pass


@dataclass(frozen=True)
class EventLog:
    events: tuple[Event, ...]
    t_end_s: float

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        last = None
        present: set[NodeId] = set()
        for e in self.events:
            if last is not None and not e.t_s > last:
                raise TraceError(f"event times must strictly increase (t={e.t_s})")
            last = e.t_s
            for n in e.leaves:
                if n not in present:
                    raise TraceSemanticError(f"t={e.t_s}: node {n!r} leaves but is not idle")
                present.discard(n)
            for n in e.joins:
                if n in present:
                    raise TraceSemanticError(f"t={e.t_s}: node {n!r} joins but is already idle")
                present.add(n)
        if last is not None and self.t_end_s < last:
            raise TraceError(f"t_end_s={self.t_end_s} precedes the last event at {last}")

    @property
    def t_start_s(self) -> float:
        return self.events[0].t_s if self.events else 0.0

    @property
    def times(self) -> list[float]:
        return [e.t_s for e in self.events]

    def pool_sizes(self) -> np.ndarray:
        """|N| right after each event."""
        sizes = np.zeros(len(self.events), dtype=np.int64)
        n = 0
        for i, e in enumerate(self.events):
            n += len(e.joins) - len(e.leaves)
            sizes[i] = n
        return sizes

    def fingerprint(self) -> tuple:
        return (tuple(self.times), float(self.t_end_s), tuple(int(v) for v in self.pool_sizes()))


def _coalesce(records: list[tuple[int, float, list, list]], present: set[NodeId]) -> Event | None:
    """Fold same-timestamp records into their net membership change."""
    before = set(present)
    t = records[0][1]
    for line, _, joins, leaves in records:
        for n in leaves:
            if n not in present:
                raise TraceSemanticError(f"node {n!r} leaves but is not idle", line)
            present.discard(n)
        for n in joins:
            if n in present:
                raise TraceSemanticError(f"node {n!r} joins but is already idle", line)
            present.add(n)
    joins = sorted(present - before)
    leaves = sorted(before - present)
    if not joins and not leaves:
        return None
    return Event(t, tuple(joins), tuple(leaves))


def _check_ids(value, key: str, line: int) -> list[NodeId]:
    if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
        raise TraceParseError(f"'{key}' must be a list of non-empty strings", line)
    if len(set(value)) != len(value):
        raise TraceParseError(f"duplicate node in '{key}'", line)
    return value


def parse(lines: Iterable[str]) -> EventLog:
    events: list[Event] = []
    present: set[NodeId] = set()
    group: list = []
    last_t = None
    t_end = None
    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        if t_end is not None:
            raise TraceParseError("record after the horizon marker", line_no)
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"invalid JSON ({exc.msg})", line_no) from None
        if not isinstance(rec, dict):
            raise TraceParseError("record must be a JSON object", line_no)
        extra = set(rec) - {"t", "join", "leave"}
        if extra:
            raise TraceParseError(f"unknown fields {sorted(extra)}", line_no)
        if "t" not in rec:
            raise TraceParseError("missing 't'", line_no)
        t = rec["t"]
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not np.isfinite(t) or t < 0:
            raise TraceParseError("'t' must be a non-negative number", line_no)
        t = float(t)
        joins = _check_ids(rec.get("join", []), "join", line_no)
        leaves = _check_ids(rec.get("leave", []), "leave", line_no)
        if last_t is not None and t < last_t:
            raise TraceParseError(f"timestamp {t} goes back in time (previous {last_t})", line_no)
        if not joins and not leaves:
            t_end = t
            continue
        if group and t != group[0][1]:
            ev = _coalesce(group, present)
            if ev is not None:
                events.append(ev)
            group = []
        group.append((line_no, t, joins, leaves))
        last_t = t
    if group:
        ev = _coalesce(group, present)
        if ev is not None:
            events.append(ev)
    if t_end is None:
        t_end = last_t if last_t is not None else 0.0
    return EventLog(tuple(events), t_end)


def load(path) -> EventLog:
    with open(path, encoding="utf-8") as fh:
        return parse(fh)


def dumps(log: EventLog) -> str:
    out = [json.dumps({"t": e.t_s, "join": list(e.joins), "leave": list(e.leaves)})
           for e in log.events]
    if not log.events or log.t_end_s > log.events[-1].t_s:
        out.append(json.dumps({"t": log.t_end_s, "join": [], "leave": []}))
    return "\n".join(out) + "\n"


def save(log: EventLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(log))


def fragments(log: EventLog, min_length_s: float = 0.0) -> list[Fragment]:
    """Maximal idle interval per node; open intervals close at ``t_end_s``."""
    opened: dict[NodeId, float] = {}
    out = []

    def close(node, start, end):
        if end > start and end - start >= min_length_s:
            out.append(Fragment(node, start, end))

    for e in log.events:
        for n in e.leaves:
            close(n, opened.pop(n), e.t_s)
        for n in e.joins:
            opened[n] = e.t_s
    for n, start in opened.items():
        close(n, start, log.t_end_s)
    out.sort(key=lambda f: (f.start_s, f.node))
    return out


@dataclass
class TraceStats:
    inc_per_h: float
    dec_per_h: float
    eq_nodes: float
    idle_node_hours: float
    fragment_lengths_s: list[float] = field(default_factory=list)
    cdf: list[tuple[float, float]] = field(default_factory=list)

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("inc_per_h", self.inc_per_h),
            ("dec_per_h", self.dec_per_h),
            ("eq_nodes", self.eq_nodes),
            ("idle_node_hours", self.idle_node_hours),
            ("fragments", float(len(self.fragment_lengths_s))),
        ]


def length_cdf(lengths: Iterable[float]) -> list[tuple[float, float]]:
    arr = np.sort(np.asarray(list(lengths), dtype=float))
    if not arr.size:
        return []
    values, counts = np.unique(arr, return_counts=True)
    frac = np.cumsum(counts) / arr.size
    frac[-1] = 1.0
    return [(float(v), float(f)) for v, f in zip(values, frac)]


def stats(log: EventLog, min_length_s: float = 0.0) -> TraceStats:
    from .metrics import resource_integral

    t0, t1 = log.t_start_s, log.t_end_s
    if not log.events or not t1 > t0:
        raise TraceError("log spans zero seconds")
    hours = (t1 - t0) / 3600.0
    inc = sum(1 for e in log.events if e.joins)
    dec = sum(1 for e in log.events if e.leaves)
    node_hours = resource_integral(log, t0, t1)
    lengths = [f.length_s for f in fragments(log, min_length_s)]
    return TraceStats(
        inc_per_h=inc / hours,
        dec_per_h=dec / hours,
        eq_nodes=node_hours / hours,
        idle_node_hours=node_hours,
        fragment_lengths_s=lengths,
        cdf=length_cdf(lengths),
    )


def write_stats_csv(st: TraceStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for name, value in st.rows():
            w.writerow([name, repr(float(value))])


def write_cdf_csv(st: TraceStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["length_s", "fraction"])
        for length, frac in st.cdf:
            w.writerow([repr(length), repr(frac)])


@dataclass(frozen=True)
class SynthConfig:
    n_pool: int
    join_rate_per_h: float
    mean_residency_s: float
    duration_s: float
    # nodes per join event; batches share one residency and leave together
    mean_batch: float = 1.0

    def __post_init__(self):
        if self.n_pool < 0:
            raise ValueError("n_pool must be non-negative")
        if self.join_rate_per_h < 0 or self.mean_residency_s <= 0 or self.duration_s <= 0:
            raise ValueError("rates and durations must be positive")
        if self.mean_batch < 1:
            raise ValueError("mean_batch must be at least 1")


def _node_name(i: int) -> str:
    return f"node{i:04d}"


def synth(cfg: SynthConfig, seed: int = 0, *, time_decimals: int = 3) -> EventLog:
    """Poisson join events with exponential idle residency.

    Join events whose batch finds no absent node in the pool are dropped.
    Timestamps are rounded to ``time_decimals``; collisions are coalesced.
    """
    rng = np.random.default_rng(seed)
    n_joins = rng.poisson(cfg.join_rate_per_h * cfg.duration_s / 3600.0)
    join_times = np.sort(rng.uniform(0.0, cfg.duration_s, size=n_joins))
    absent = list(range(cfg.n_pool))  # kept sorted
    pending: list[tuple[float, int, list[int]]] = []  # (leave time, seq, nodes)
    records: list[tuple[float, list[str], list[str]]] = []

    def release_until(t):
        while pending and pending[0][0] <= t:
            lt, _, nodes = heapq.heappop(pending)
            records.append((lt, [], [_node_name(i) for i in nodes]))
            for i in nodes:
                bisect.insort(absent, i)

    for seq, t in enumerate(join_times):
        t = round(float(t), time_decimals)
        release_until(t)
        size = 1 + int(rng.poisson(cfg.mean_batch - 1.0)) if cfg.mean_batch > 1 else 1
        residency = float(rng.exponential(cfg.mean_residency_s))
        if not absent:
            continue
        pick = rng.choice(len(absent), size=min(size, len(absent)), replace=False)
        nodes = sorted(absent[i] for i in pick)
        for k in sorted(pick, reverse=True):
            del absent[k]
        records.append((t, [_node_name(i) for i in nodes], []))
        leave_t = round(t + residency, time_decimals)
        if leave_t < cfg.duration_s:
            heapq.heappush(pending, (leave_t, seq, nodes))
    release_until(cfg.duration_s)
    lines = [json.dumps({"t": t, "join": j, "leave": lv}) for t, j, lv in records]
    lines.append(json.dumps({"t": float(cfg.duration_s), "join": [], "leave": []}))
    return parse(lines)


__all__ = [
    "EventLog", "TraceError", "TraceParseError", "TraceSemanticError", "TraceStats",
    "SynthConfig", "parse", "load", "dumps", "save", "fragments", "stats", "synth",
    "length_cdf", "write_stats_csv", "write_cdf_csv",
]
