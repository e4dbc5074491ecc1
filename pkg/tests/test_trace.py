import hashlib
import json
from functools import lru_cache

import pytest

from levelsim import (
    EMPTY_DIGEST,

    TraceEvent,
    TraceParseError,
    parse_trace,
    read_trace,
    run_until,
    trace_digest,
    validate_causality,
    write_trace,
)
from levelsim.trace import RULES
from levelsim.models.droplet import DropletModelConfig, build_droplet_scenario
from levelsim.models.pingpong import build_pingpong_scenario

from . import mutations
from .conftest import counter_world

FULL3 = [(a, b) for a in "ABC" for b in "ABC" if a != b]


@lru_cache(maxsize=None)
def base_runs():
    drops = DropletModelConfig(6, [(f"d{i:02d}", i % 5) for i in range(10)], threshold=4, evaporation_rate=1)
    worlds = {
        "counter": counter_world([("A", 2), ("B", 3, 1), ("C", 5)], FULL3, FULL3, horizon=30, watchers=1),
        "pingpong": build_pingpong_scenario(2, 3, horizon=12),
        "droplet": build_droplet_scenario(drops, 1, 2, horizon=60, seed=1),
    }
    return {name: run_until(w, "async")[0] for name, w in worlds.items()}


@pytest.mark.parametrize("name", ["counter", "pingpong", "droplet"])
def test_engine_traces_are_clean(name):
    w = base_runs()[name]
    assert validate_causality(w.trace, w.topology) == []


def test_records_validate_like_events():
    w = base_runs()["pingpong"]
    assert validate_causality(mutations.as_records(w.trace), w.topology) == []


def test_perception_into_future_is_one_violation():
    w = base_runs()["counter"]
    recs = mutations.as_records(w.trace)
    i = next(i for i, r in enumerate(recs) if r["kind"] == "perception" and len(r["at"]["t"]) > 1)
    m = mutations.mutate(recs, "perception_future", i)
    report = validate_causality(m.records, w.topology)
    assert [(v.seq, v.rule) for v in report] == [(m.seq, "perception-causality")]


def test_delivery_after_next_time_is_one_violation():
    w = base_runs()["counter"]
    recs = mutations.as_records(w.trace)
    i = next(i for i, r in enumerate(recs) if r["kind"] == "delivery" and r["target"] != r["level"])
    m = mutations.mutate(recs, "delivery_past_next", i)
    t, dt = m.records[i]["at"]["t"], m.records[i]["at"]["dt"]
    src = m.records[i]["level"]
    assert t[src] + dt[src] <= t[m.records[i]["target"]]
    report = validate_causality(m.records, w.topology)
    assert [(v.seq, v.rule) for v in report] == [(m.seq, "delivery-gate")]


@lru_cache(maxsize=None)
def _all_mutations():
    out = []
    for name, w in base_runs().items():
        recs = mutations.as_records(w.trace)
        out.extend((name, m) for m in mutations.sample_mutations(recs, per_mutator=15, seed=7))
    return tuple(out)


def test_every_mutator_has_candidates():
    used = {m.name for _, m in _all_mutations()}
    assert used == set(mutations.MUTATORS)
    assert {m.rule for _, m in _all_mutations()} == set(RULES) - {"malformed"}


def test_every_mutation_is_detected_at_its_event():
    missed = []
    for name, m in _all_mutations():
        report = validate_causality(m.records, base_runs()[name].topology)
        if (m.seq, m.rule) not in {(v.seq, v.rule) for v in report}:
            missed.append((name, m.name, m.seq, report))
    assert missed == []


@pytest.mark.parametrize(
    "edit,rule",
    [
        (lambda r: r["at"].pop("dt"), "malformed"),
        (lambda r: r.__setitem__("level", "Z"), "malformed"),
        (lambda r: r["at"]["t"].__setitem__("A", "2"), "malformed"),
    ],
)
def test_malformed_snapshots(edit, rule):
    w = base_runs()["counter"]
    recs = mutations.as_records(w.trace)
    edit(recs[3])
    assert [v.rule for v in validate_causality(recs, w.topology)] == [rule]


class TestDigest:
    def test_empty(self):
        assert trace_digest([]) == EMPTY_DIGEST == hashlib.sha256(b"").hexdigest()

    def test_width_is_fixed(self):
        assert len(trace_digest(base_runs()["pingpong"].trace)) == 64

    def test_repeat_runs_match(self):
        a = run_until(build_pingpong_scenario(2, 3, horizon=12))[1]
        b = run_until(build_pingpong_scenario(2, 3, horizon=12))[1]
        assert trace_digest(a) == trace_digest(b)

    def test_one_payload_flip_changes_digest(self):
        trace = list(base_runs()["pingpong"].trace)
        ev = trace[5]
        flipped = ev.payload_digest[:-1] + ("0" if ev.payload_digest[-1] != "0" else "1")
        other = trace[:5] + [TraceEvent(**{**ev.__dict__, "payload_digest": flipped})] + trace[6:]
        assert trace_digest(other) != trace_digest(trace)


class TestIO:
    def test_round_trip(self, tmp_path):
        trace = base_runs()["droplet"].trace
        path = tmp_path / "t.jsonl"
        write_trace(trace, path)
        back = read_trace(path)
        assert trace_digest(back) == trace_digest(trace)
        assert [e.to_dict() for e in back] == [e.to_dict() for e in trace]

    def test_lines_have_fixed_fields(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_trace(base_runs()["pingpong"].trace[:3], path)
        for line in path.read_text().splitlines():
            assert list(json.loads(line)) == ["seq", "kind", "level", "target", "agent", "at", "payload_digest"]

    @pytest.mark.parametrize(
        "line,match",
        [
            ("{not json", "line 2"),
            ('{"seq": 0}', "missing"),
            (
                '{"seq":0,"kind":"teleport","level":null,"target":null,"agent":null,"at":{},"payload_digest":"x"}',
                "unknown event kind",
            ),
            (
                '{"seq":true,"kind":"natural","level":null,"target":null,"agent":null,"at":{},"payload_digest":"x"}',
                "seq must be an integer",
            ),
            ("[1, 2]", "not an object"),
        ],
    )
    def test_parse_errors(self, line, match):
        with pytest.raises(TraceParseError, match=match):
            parse_trace(["", line])
