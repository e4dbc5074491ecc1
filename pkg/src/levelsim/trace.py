"""Scheduler event trace: recording, JSON-lines I/O, digests and offline audit.

Every event carries a snapshot of the clocks it depended on, so the audit in
:func:`validate_causality` needs nothing but the trace and the topology.
Reaction eligibility is additionally re-derived from the ``clock_advance``
events and cross-checked against those snapshots.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import canon
from .topology import Topology, TopologyError

EVENT_KINDS = (
    "perception",
    "memorization",
    "decision",
    "natural",
    "delivery",
    "delivery_blocked",
    "reaction",
    "clock_advance",
    "agent_activated",
    "agent_deactivated",
)
FIELDS = ("seq", "kind", "level", "target", "agent", "at", "payload_digest")

#: ``trace_digest([])``: sha256 of the empty byte string.
EMPTY_DIGEST = hashlib.sha256(b"").hexdigest()


class TraceParseError(ValueError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    level: Optional[str]
    at: Mapping[str, Any]
    payload_digest: str
    target: Optional[str] = None
    agent: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "level": self.level,
            "target": self.target,
            "agent": self.agent,
            "at": canon.to_plain(self.at),
            "payload_digest": self.payload_digest,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=True)

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "TraceEvent":
        if not isinstance(record, Mapping):
            raise TraceParseError(f"trace record is not an object: {record!r}")
        keys = set(record)
        if keys != set(FIELDS):
            missing = sorted(set(FIELDS) - keys)
            extra = sorted(keys - set(FIELDS))
            raise TraceParseError(f"bad trace record fields (missing={missing}, unexpected={extra})")
        seq, kind, at = record["seq"], record["kind"], record["at"]
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise TraceParseError(f"seq must be an integer, got {seq!r}")
        if kind not in EVENT_KINDS:
            raise TraceParseError(f"unknown event kind {kind!r} at seq {seq}")
        if not isinstance(at, Mapping):
            raise TraceParseError(f"'at' must be an object at seq {seq}")
        for name in ("level", "target", "agent"):
            v = record[name]
            if v is not None and not isinstance(v, str):
                raise TraceParseError(f"{name} must be a string or null at seq {seq}")
        if not isinstance(record["payload_digest"], str):
            raise TraceParseError(f"payload_digest must be a string at seq {seq}")
        return cls(
            seq=seq,
            kind=kind,
            level=record["level"],
            target=record["target"],
            agent=record["agent"],
            at=at,
            payload_digest=record["payload_digest"],
        )


class TraceRecorder:
    """Assigns global sequence numbers and collects events in emission order."""

    def __init__(self) -> None:
        self.events: list[TraceEvent] = []

    def emit(
        self,
        kind: str,
        level: Optional[str],
        at: Mapping[str, Any],
        payload: Any = None,
        *,
        target: Optional[str] = None,
        agent: Optional[str] = None,
    ) -> TraceEvent:
        event = TraceEvent(
            seq=len(self.events),
            kind=kind,
            level=level,
            target=target,
            agent=agent,
            at=at,
            payload_digest=canon.digest(payload),
        )
        self.events.append(event)
        return event


def write_trace(events: Iterable[TraceEvent], path: str | Path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for ev in events:
            fh.write(ev.to_line())
            fh.write("\n")


def parse_trace(lines: Iterable[str]) -> list[TraceEvent]:
    events = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"line {lineno}: {exc.msg}") from None
        try:
            events.append(TraceEvent.from_dict(record))
        except TraceParseError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from None
    return events


def read_trace(path: str | Path) -> list[TraceEvent]:
    with open(path, encoding="ascii") as fh:
        return parse_trace(fh)


def trace_digest(events: Iterable[TraceEvent]) -> str:
    """Order-sensitive sha256 over the serialized events."""
    h = hashlib.sha256()
    for i, ev in enumerate(events):
        if i:
            h.update(b"\n")
        h.update(ev.to_line().encode("ascii"))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class Violation:
    seq: int
    rule: str
    message: str

    def __str__(self) -> str:
        return f"seq {self.seq}: [{self.rule}] {self.message}"


RULES = (
    "seq",
    "malformed",
    "dt-mismatch",
    "perception-causality",
    "perception-freshness",
    "perception-completeness",
    "memorization-stamp",
    "single-mind",
    "production-eligibility",
    "delivery-gate",
    "reaction-min",
    "reaction-snapshot",
    "clock",
)


@dataclass
class _Audit:
    topology: Topology
    report: list[Violation] = field(default_factory=list)

    def flag(self, ev: TraceEvent, rule: str, message: str) -> None:
        self.report.append(Violation(ev.seq, rule, message))


def _clock_maps(ev: TraceEvent, audit: _Audit) -> Optional[tuple[dict, dict]]:
    t, dt = ev.at.get("t"), ev.at.get("dt")
    if not isinstance(t, Mapping) or not isinstance(dt, Mapping) or set(t) != set(dt):
        audit.flag(ev, "malformed", "clock snapshot needs matching 't' and 'dt' maps")
        return None
    for name, value in list(t.items()) + list(dt.items()):
        if isinstance(value, bool) or not isinstance(value, int):
            audit.flag(ev, "malformed", f"non-integer clock value for {name!r}")
            return None
    return dict(t), dict(dt)


def validate_causality(trace: Sequence[TraceEvent | Mapping[str, Any]], topology: Topology) -> list[Violation]:
    """Check a trace against the scheduling constraint rules.

    Returns a list of violations, empty iff the trace is clean. Rules:

    * ``perception-causality``: a level never reads a level whose clock is
      ahead of its own.
    * ``perception-freshness``: the perceived state is the latest one, i.e.
      the reader's clock is before the perceived level's next time.
    * ``perception-completeness``: a perception reads its whole perception
      out-neighborhood at once.
    * ``memorization-stamp`` / ``single-mind``: the stamp is the earliest
      next time among the agent's levels, and each agent memorizes at most
      once per stamp.
    * ``production-eligibility``: naturals and decisions run only when, for
      every influenced level, the producer is not ahead of it or its next
      time comes strictly first.
    * ``delivery-gate``: a batch is delivered iff the source clock is not
      past the target's and the source's next time is after the target's
      clock.
    * ``reaction-min`` / ``reaction-snapshot``: only levels whose next time
      is the global minimum react, judged on clocks re-derived from
      ``clock_advance`` events.
    * ``clock``: clocks advance by exactly their ``dt``, once per reaction.

    Raises:
        TraceParseError: if a record cannot be interpreted as an event.
    """
    events = [ev if isinstance(ev, TraceEvent) else TraceEvent.from_dict(ev) for ev in trace]
    audit = _Audit(topology)
    known = set(topology.level_ids)
    clocks = {spec.id: spec.t0 for spec in topology.levels}
    dts = {spec.id: spec.dt for spec in topology.levels}
    reacted: set[str] = set()
    stamps: set[tuple[str, int]] = set()
    last_seq: Optional[int] = None

    for ev in events:
        if last_seq is not None and ev.seq <= last_seq:
            audit.flag(ev, "seq", f"seq {ev.seq} does not increase past {last_seq}")
        last_seq = ev.seq if last_seq is None else max(last_seq, ev.seq)

        if ev.level is not None and ev.level not in known:
            audit.flag(ev, "malformed", f"unknown level {ev.level!r}")
            continue
        if ev.kind in ("agent_activated", "agent_deactivated"):
            continue
        maps = _clock_maps(ev, audit)
        if maps is None:
            continue
        t, dt = maps
        unknown = set(t) - known
        if unknown:
            audit.flag(ev, "malformed", f"snapshot names unknown levels {sorted(unknown)}")
            continue
        bad_dt = sorted(l for l in dt if dt[l] != dts[l])
        if bad_dt:
            audit.flag(ev, "dt-mismatch", f"recorded dt differs from topology for {bad_dt}")
            continue

        if ev.kind == "memorization":
            _check_memorization(ev, t, dt, stamps, audit)
            continue
        if ev.level is None or ev.level not in t:
            audit.flag(ev, "malformed", f"{ev.kind} event without its own level clock")
            continue
        l = ev.level
        if ev.kind == "perception":
            _check_perception(ev, l, t, dt, audit)
        elif ev.kind in ("natural", "decision"):
            _check_production(ev, l, t, dt, audit)
        elif ev.kind in ("delivery", "delivery_blocked"):
            _check_delivery(ev, l, t, dt, audit)
        elif ev.kind == "reaction":
            _check_reaction(ev, l, t, clocks, dts, reacted, audit)
        elif ev.kind == "clock_advance":
            _check_advance(ev, l, t, clocks, dts, reacted, audit)
    return audit.report


def _check_perception(ev, l, t, dt, audit: _Audit) -> None:
    expected = audit.topology.perception_out(l)
    if set(t) != set(expected):
        audit.flag(
            ev,
            "perception-completeness",
            f"perception from {l!r} read {sorted(t)}, expected {sorted(expected)}",
        )
    for lp in sorted(t):
        if not t[l] >= t[lp]:
            audit.flag(ev, "perception-causality", f"{l!r}@{t[l]} perceived future state of {lp!r}@{t[lp]}")
        if not t[l] < t[lp] + dt[lp]:
            audit.flag(
                ev,
                "perception-freshness",
                f"{l!r}@{t[l]} perceived stale state of {lp!r}@{t[lp]} (next {t[lp] + dt[lp]})",
            )


def _check_memorization(ev, t, dt, stamps, audit: _Audit) -> None:
    stamp = ev.at.get("stamp")
    if ev.agent is None or isinstance(stamp, bool) or not isinstance(stamp, int) or not t:
        audit.flag(ev, "malformed", "memorization needs an agent, a stamp and its levels' clocks")
        return
    expected = min(t[l] + dt[l] for l in t)
    if stamp != expected:
        audit.flag(ev, "memorization-stamp", f"agent {ev.agent!r} stamped {stamp}, expected {expected}")
    key = (ev.agent, stamp)
    if key in stamps:
        audit.flag(ev, "single-mind", f"agent {ev.agent!r} memorized twice for stamp {stamp}")
    stamps.add(key)


def _check_production(ev, l, t, dt, audit: _Audit) -> None:
    expected = audit.topology.influence_out(l)
    if set(t) != set(expected):
        audit.flag(ev, "production-eligibility", f"{ev.kind} in {l!r} snapshot covers {sorted(t)}, expected {sorted(expected)}")
        return
    for li in sorted(t):
        if not (t[l] <= t[li] or t[l] + dt[l] < t[li] + dt[li]):
            audit.flag(
                ev,
                "production-eligibility",
                f"{ev.kind} in {l!r}@{t[l]} while {li!r}@{t[li]} is behind and not later-next",
            )


def _check_delivery(ev, l, t, dt, audit: _Audit) -> None:
    li = ev.target
    if li is None or li not in t:
        audit.flag(ev, "malformed", "delivery event without target clock")
        return
    if li not in audit.topology.influence_out(l):
        audit.flag(ev, "delivery-gate", f"{l!r} does not influence {li!r}")
        return
    gate = t[l] <= t[li] and t[l] + dt[l] > t[li]
    if ev.kind == "delivery" and not gate:
        audit.flag(ev, "delivery-gate", f"delivered {l!r}@{t[l]}+{dt[l]} -> {li!r}@{t[li]} outside gate")
    if ev.kind == "delivery_blocked" and gate:
        audit.flag(ev, "delivery-gate", f"blocked {l!r}@{t[l]}+{dt[l]} -> {li!r}@{t[li]} although gate holds")


def _check_reaction(ev, l, t, clocks, dts, reacted, audit: _Audit) -> None:
    if dict(t) != clocks:
        audit.flag(ev, "reaction-snapshot", f"recorded clocks {dict(t)} differ from re-derived {clocks}")
    if l in reacted:
        audit.flag(ev, "reaction-min", f"{l!r} reacted twice without advancing its clock")
    # reactions of one iteration precede all of its clock advances
    nxt = min(clocks[k] + dts[k] for k in clocks)
    if clocks[l] + dts[l] != nxt:
        audit.flag(ev, "reaction-min", f"{l!r} next time {clocks[l] + dts[l]} is not the minimum {nxt}")
    reacted.add(l)


def _check_advance(ev, l, t, clocks, dts, reacted, audit: _Audit) -> None:
    to = ev.at.get("to")
    if set(t) != {l} or isinstance(to, bool) or not isinstance(to, int):
        audit.flag(ev, "malformed", "clock_advance needs its own level clock and 'to'")
        return
    if l not in reacted:
        audit.flag(ev, "clock", f"{l!r} advanced without a reaction")
    if t[l] != clocks[l]:
        audit.flag(ev, "clock", f"{l!r} advanced from {t[l]} but its clock is {clocks[l]}")
    if to != clocks[l] + dts[l] or to <= clocks[l]:
        audit.flag(ev, "clock", f"{l!r} advanced {clocks[l]} -> {to}, expected {clocks[l] + dts[l]}")
    reacted.discard(l)
    # keep re-deriving from the expected value so one bad record yields one violation
    clocks[l] = clocks[l] + dts[l]


def summarize(report: Iterable[Violation]) -> Counter:
    return Counter(v.rule for v in report)
