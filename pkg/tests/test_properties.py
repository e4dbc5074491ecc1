"""Randomized cross-checks of the engine against the counter oracle and the audit."""

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from levelsim import LevelSpec, build_topology, run_until, validate_causality
from levelsim.models.counter import CounterModelConfig, build_counter_scenario, counter_oracle, counter_values


@st.composite
def worlds(draw, max_levels=4, max_dt=5, uniform=False):
    n = draw(st.integers(1, max_levels))
    ids = [f"L{i}" for i in range(n)]
    pairs = [(a, b) for a in ids for b in ids if a != b]
    ei = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    ep = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    if uniform:
        dt = draw(st.integers(1, max_dt))
        specs = [LevelSpec(i, dt) for i in ids]
    else:
        specs = [LevelSpec(i, draw(st.integers(1, max_dt)), draw(st.integers(0, 4))) for i in ids]
        assume(max(s.t0 for s in specs) < min(s.t0 + s.dt for s in specs))
    cfg = CounterModelConfig(
        initial={i: draw(st.integers(-3, 3)) for i in ids},
        amount=draw(st.integers(1, 3)),
        watchers_per_level=draw(st.integers(0, 1)),
    )
    return build_topology(specs, ei, ep), cfg, draw(st.integers(0, 60))


@settings(max_examples=150, deadline=None)
@given(worlds())
def test_async_counter_matches_oracle(case):
    topo, cfg, horizon = case
    w, trace = run_until(build_counter_scenario(topo, cfg, horizon), "async")
    assert counter_values(w) == counter_oracle(topo, cfg, "async", horizon)
    assert validate_causality(trace, topo) == []
    assert all(t > horizon for t in w.clocks.values())


@settings(max_examples=60, deadline=None)
@given(worlds(uniform=True))
def test_sync_counter_matches_oracle(case):
    topo, cfg, horizon = case
    w, trace = run_until(build_counter_scenario(topo, cfg, horizon), "sync")
    assert counter_values(w) == counter_oracle(topo, cfg, "sync", horizon)
    assert validate_causality(trace, topo) == []


@settings(max_examples=80, deadline=None)
@given(worlds())
def test_deliveries_feed_the_next_reaction_of_their_target(case):
    topo, cfg, horizon = case
    w, trace = run_until(build_counter_scenario(topo, cfg, horizon), "async")
    for ev in trace:
        if ev.kind != "delivery":
            continue
        target, at = ev.target, ev.at["t"][ev.target]
        nxt = next((r for r in trace[ev.seq:] if r.kind == "reaction" and r.level == target), None)
        if nxt is None:
            # horizon reached; the batch is still waiting
            assert w.buffers.waiting() > 0
        else:
            assert nxt.at["t"][target] == at


@settings(max_examples=80, deadline=None)
@given(worlds())
def test_perceptions_read_current_states(case):
    topo, cfg, horizon = case
    w, trace = run_until(build_counter_scenario(topo, cfg, horizon), "async")
    for ev in trace:
        if ev.kind == "perception":
            l, t, dt = ev.level, ev.at["t"], ev.at["dt"]
            assert set(t) == topo.perception_out(l)
            assert all(t[lp] <= t[l] < t[lp] + dt[lp] for lp in t)
