"""Synchronous and level-clocked schedulers.

Both schedulers run the same phases in the same order (perceive, memorize,
produce, route, react, advance) and differ only in which agents and levels
take part in each phase. With uniform clocks and time steps the level-clocked
scheduler selects everything and the two traces coincide.

Time is an integer tick count; every comparison below is exact.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal, Mapping, Optional, Sequence

from . import canon
from .behavior import (
    ContractViolation,
    EnvironmentSuite,
    ReactionOutcome,
    produce_agent_influences,
    produce_environment_influences,
)
from .state import (
    Agent,
    Influence,
    IntegrityError,
    LevelDynamicState,
    Percepts,
    agents_of_level,
    collect_temporary_influences,
    environment_of,
)
from .topology import Topology
from .trace import TraceEvent, TraceRecorder

log = logging.getLogger(__name__)

Scheduler = Literal["sync", "async"]


class ConfigurationError(ValueError):
    """The world cannot be run by the requested scheduler."""


@dataclass
class RoutingBuffer:
    """Batches waiting for their target level's next reaction."""

    pending: dict[tuple[str, str], list[tuple[Influence, ...]]] = field(default_factory=dict)
    enqueued: int = 0
    consumed: int = 0

    def enqueue(self, source: str, target: str, batch: Sequence[Influence]) -> None:
        self.pending.setdefault((source, target), []).append(tuple(batch))
        self.enqueued += 1

    def take(self, target: str) -> list[tuple[str, tuple[Influence, ...]]]:
        """Remove and return every batch addressed to ``target``, sorted by source."""
        out = []
        for key in sorted(k for k in self.pending if k[1] == target):
            for batch in self.pending.pop(key):
                out.append((key[0], batch))
        self.consumed += len(out)
        return out

    def waiting(self) -> int:
        return sum(len(v) for v in self.pending.values())


@dataclass(frozen=True)
class EligibilitySets:
    perception_eligible: Mapping[str, frozenset[str]]
    influence_eligible: frozenset[str]
    reaction_due: frozenset[str]


@dataclass(frozen=True)
class MemorizationStamp:
    agent: str
    stamp: int


def _default_environment_reaction(sigma, gamma_prime, time) -> ReactionOutcome:
    # inert environment: state unchanged, every influence dropped
    return ReactionOutcome(
        LevelDynamicState(level=gamma_prime.level, time=time, properties=sigma),
        tuple(gamma_prime.influences),
    )


@dataclass
class World:
    """Everything a run needs: topology, committed states, agents, behaviors.

    The step functions advance a world in place (and return it for
    chaining). ``history`` keeps every committed state per level so
    cross-level properties can be checked at clock-aligned times.
    """

    topology: Topology
    states: dict[str, LevelDynamicState]
    agents: dict[str, Agent]
    environments: dict[str, EnvironmentSuite] = field(default_factory=dict)
    horizon: int = 0
    rng_seed: int = 0
    check_purity: bool = False
    clocks: dict[str, int] = field(init=False)
    buffers: RoutingBuffer = field(init=False, default_factory=RoutingBuffer)
    recorder: TraceRecorder = field(init=False, default_factory=TraceRecorder)
    history: dict[str, list[LevelDynamicState]] = field(init=False)
    dropped: list[Influence] = field(init=False, default_factory=list)
    iterations: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        if not isinstance(self.agents, Mapping):
            self.agents = {a.id: a for a in self.agents}
        ids = set(self.topology.level_ids)
        if set(self.states) != ids:
            raise ConfigurationError(f"states given for {sorted(self.states)}, levels are {sorted(ids)}")
        unknown_env = set(self.environments) - ids
        if unknown_env:
            raise ConfigurationError(f"environments for unknown levels {sorted(unknown_env)}")
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 0:
            raise ConfigurationError(f"horizon must be a non-negative integer, got {self.horizon!r}")
        for spec in self.topology.levels:
            st = self.states[spec.id]
            if st.level != spec.id or st.time != spec.t0:
                raise ConfigurationError(
                    f"initial state of {spec.id!r} must be for that level at t0={spec.t0}, "
                    f"got level={st.level!r} time={st.time}"
                )
            agents_of_level(st, self.agents)
        if self.topology.levels:
            # the min rule keeps every clock before every next time; start there
            latest = max(self.topology.levels, key=lambda s: (s.t0, s.id))
            soonest = min(self.topology.levels, key=lambda s: (s.t0 + s.dt, s.id))
            if latest.t0 >= soonest.t0 + soonest.dt:
                raise ConfigurationError(
                    f"level {latest.id!r} starts at {latest.t0}, not before the next time "
                    f"{soonest.t0 + soonest.dt} of {soonest.id!r}"
                )
        for agent in self.agents.values():
            if agent.hysteretic and agent.behavior.memorization is None:
                raise ConfigurationError(f"hysteretic agent {agent.id!r} needs a memorization function")
            if not agent.hysteretic and agent.behavior.memorization is not None:
                raise ConfigurationError(f"tropistic agent {agent.id!r} cannot memorize")
        self.clocks = {spec.id: spec.t0 for spec in self.topology.levels}
        self.history = {l: [self.states[l]] for l in self.topology.level_ids}
        self._percepts: dict[tuple[str, str], tuple[int, Any]] = {}
        self._produced_at: dict[str, int] = {}
        self._seq: dict[str, itertools.count] = {}

    @property
    def trace(self) -> list[TraceEvent]:
        return self.recorder.events

    def next_time(self, level: str) -> int:
        return self.clocks[level] + self.topology.dt(level)

    def membership(self) -> dict[str, list[str]]:
        return {l: agents_of_level(self.states[l], self.agents) for l in self.topology.level_ids}

    def levels_of(self, agent: str, members: Optional[Mapping[str, list[str]]] = None) -> list[str]:
        members = members if members is not None else self.membership()
        return [l for l in self.topology.level_ids if agent in members[l]]

    def active_agents(self) -> list[str]:
        members = self.membership()
        return sorted({a for ids in members.values() for a in ids})

    def counter(self, emitter: str) -> itertools.count:
        return self._seq.setdefault(emitter, itertools.count())

    def _snap(self, levels: Iterable[str]) -> dict[str, Any]:
        levels = sorted(set(levels))
        return {
            "t": {l: self.clocks[l] for l in levels},
            "dt": {l: self.topology.dt(l) for l in levels},
        }


def compute_eligibility(world: World, members: Optional[Mapping[str, list[str]]] = None) -> EligibilitySets:
    """Evaluate the perception, production and reaction predicates on the current clocks."""
    topo = world.topology
    t = world.clocks
    nxt = {l: world.next_time(l) for l in topo.level_ids}
    members = members if members is not None else world.membership()

    can_perceive = {l: all(t[l] >= t[lp] for lp in topo.perception_out(l)) for l in topo.level_ids}
    perception = {}
    for l in topo.level_ids:
        for a in members[l]:
            perception.setdefault(a, set())
            if can_perceive[l]:
                perception[a].add(l)

    influence = frozenset(
        l
        for l in topo.level_ids
        if all(t[l] <= t[li] or nxt[l] < nxt[li] for li in topo.influence_out(l))
    )
    soonest = min(nxt.values())
    reaction = frozenset(l for l in topo.level_ids if nxt[l] == soonest)
    return EligibilitySets(
        perception_eligible={a: frozenset(s) for a, s in perception.items()},
        influence_eligible=influence,
        reaction_due=reaction,
    )


def memorization_stamp(world: World, agent: str, members: Optional[Mapping[str, list[str]]] = None) -> Optional[MemorizationStamp]:
    """Earliest next time among the levels holding ``agent``; ``None`` if it is inactive."""
    levels = world.levels_of(agent, members)
    if not levels:
        return None
    return MemorizationStamp(agent, min(world.next_time(l) for l in levels))


def route_influences(world: World, source: str, produced: Sequence[Influence]) -> RoutingBuffer:
    """Split ``produced`` by target and enqueue each portion that passes the delivery gate.

    A portion reaches ``target`` only if the source clock is not past the
    target's and the source's next time is after the target's clock.
    Otherwise it is discarded and a ``delivery_blocked`` event records it.
    """
    topo = world.topology
    ts, dts = world.clocks[source], topo.dt(source)
    for target in sorted(topo.influence_out(source)):
        batch = [inf for inf in produced if inf.target == target]
        tt = world.clocks[target]
        at = world._snap((source, target))
        if ts <= tt and ts + dts > tt:
            world.buffers.enqueue(source, target, batch)
            world.recorder.emit("delivery", source, at, batch, target=target)
        else:
            world.recorder.emit("delivery_blocked", source, at, batch, target=target)
            if batch:
                log.debug("discarded %d influence(s) %s -> %s", len(batch), source, target)
    return world.buffers


# ---------------------------------------------------------------------------
# phases shared by both schedulers


def _perceive(world: World, plan: Mapping[str, Iterable[str]]) -> dict[str, Percepts]:
    topo = world.topology
    fresh = {}
    for a in sorted(plan):
        levels = sorted(plan[a])
        if not levels:
            continue
        agent = world.agents[a]
        per_level, observed = {}, {}
        for l in levels:
            perceived = sorted(topo.perception_out(l))
            view = {lp: world.states[lp] for lp in perceived}
            record = agent.behavior.perception(a, l, view)
            if world.check_purity and canon.digest(record) != canon.digest(agent.behavior.perception(a, l, view)):
                raise ContractViolation(f"perception of {a!r} in {l!r} is not pure")
            world._percepts[(a, l)] = (world.clocks[l], record)
            per_level[l] = record
            observed.update({lp: world.clocks[lp] for lp in perceived})
            world.recorder.emit("perception", l, world._snap(perceived), record, agent=a)
        fresh[a] = Percepts(agent=a, per_level=per_level, observed_times=observed)
    return fresh


def _memorize(world: World, fresh: Mapping[str, Percepts], members: Mapping[str, list[str]]) -> None:
    for a in sorted(fresh):
        agent = world.agents[a]
        if not agent.hysteretic:
            continue
        stamp = memorization_stamp(world, a, members)
        levels = world.levels_of(a, members)
        agent.internal_state = agent.behavior.memorization(fresh[a], agent.internal_state, stamp.stamp)
        at = {"stamp": stamp.stamp, **world._snap(levels)}
        world.recorder.emit("memorization", None, at, agent.internal_state, agent=a)


def _produce(world: World, levels: Iterable[str], members: Mapping[str, list[str]]) -> dict[str, list[Influence]]:
    topo = world.topology
    produced = {}
    for l in sorted(levels):
        if world._produced_at.get(l) == world.clocks[l]:
            # already produced from this state
            continue
        world._produced_at[l] = world.clocks[l]
        at = world._snap(topo.influence_out(l))
        env = world.environments.get(l, EnvironmentSuite())
        out = produce_environment_influences(
            l, world.states[l], env.natural, topo, world.counter(environment_of(l)), world.check_purity
        )
        world.recorder.emit("natural", l, at, out)
        here = [world.agents[a] for a in members[l]]
        ordered = [ag for ag in here if ag.hysteretic] + [ag for ag in here if not ag.hysteretic]
        for agent in ordered:
            if agent.hysteretic:
                inputs = agent.internal_state
            else:
                cached = world._percepts.get((agent.id, l))
                # only a percept taken at the level's current time counts
                inputs = cached[1] if cached is not None and cached[0] == world.clocks[l] else None
            infl = produce_agent_influences(agent, l, inputs, topo, world.counter(agent.id), world.check_purity)
            world.recorder.emit("decision", l, at, infl, agent=agent.id)
            out.extend(infl)
        produced[l] = out
    return produced


def _route(world: World, produced: Mapping[str, list[Influence]]) -> None:
    for l in sorted(produced):
        route_influences(world, l, produced[l])


def _react(world: World, levels: Iterable[str], members: Mapping[str, list[str]]) -> None:
    topo = world.topology
    levels = sorted(levels)
    at = world._snap(topo.level_ids)
    outcomes: dict[str, LevelDynamicState] = {}
    for l in levels:
        state = world.states[l]
        if state.time != world.clocks[l]:
            raise IntegrityError(f"level {l!r} state time {state.time} != clock {world.clocks[l]}")
        delivered = world.buffers.take(l)
        gamma = collect_temporary_influences(
            l, state.persisting_influences, delivered, in_neighbors=topo.influence_in(l), time=world.clocks[l]
        )
        env = world.environments.get(l, EnvironmentSuite())
        react = env.reaction or _default_environment_reaction
        nxt = world.next_time(l)
        outcome = react(state.editable(), gamma, nxt)
        new = outcome.state
        if new.level != l or new.time != nxt:
            raise ContractViolation(f"reaction of {l!r} committed ({new.level!r}, {new.time}), expected ({l!r}, {nxt})")
        world.dropped.extend(outcome.dropped)
        payload = {
            "consumed": len(gamma),
            "batches": len(delivered),
            "dropped": outcome.dropped,
            "state": state_digest(new),
        }
        world.recorder.emit("reaction", l, at, payload)
        outcomes[l] = new

    # tied reactions all read pre-reaction snapshots; commit together
    for l in levels:
        world.states[l] = outcomes[l]
        world.history[l].append(outcomes[l])
    for l in levels:
        new = world.next_time(l)
        world.recorder.emit("clock_advance", l, {**world._snap([l]), "to": new}, None)
        world.clocks[l] = new
    for l in levels:
        before = set(members[l])
        after = set(agents_of_level(world.states[l], world.agents))
        snap = {"t": {l: world.clocks[l]}}
        for a in sorted(after - before):
            world.recorder.emit("agent_activated", l, snap, world.states[l].bodies()[a], agent=a)
        for a in sorted(before - after):
            world.recorder.emit("agent_deactivated", l, snap, None, agent=a)


def state_digest(state: LevelDynamicState) -> str:
    return canon.digest(
        {"level": state.level, "time": state.time, "properties": state.properties, "gamma": state.persisting_influences}
    )


# ---------------------------------------------------------------------------
# schedulers


def check_synchronous(world: World) -> None:
    clocks = set(world.clocks.values())
    dts = {spec.dt for spec in world.topology.levels}
    if len(clocks) > 1 or len(dts) > 1:
        raise ConfigurationError(
            f"synchronous scheduling needs equal clocks and time steps, got clocks={dict(world.clocks)} dt={sorted(dts)}"
        )


def step_synchronous(world: World) -> World:
    """One iteration with a single shared clock: every agent perceives and every level reacts."""
    check_synchronous(world)
    members = world.membership()
    plan = {}
    for l, ids in members.items():
        for a in ids:
            plan.setdefault(a, []).append(l)
    fresh = _perceive(world, plan)
    _memorize(world, fresh, members)
    _route(world, _produce(world, world.topology.level_ids, members))
    _react(world, world.topology.level_ids, members)
    world.iterations += 1
    return world


def step_asynchronous(world: World) -> World:
    """One iteration with per-level clocks, gated by the eligibility sets.

    Memorization runs only for hysteretic agents whose perception fired in
    at least one level this iteration. A level produces influences at most
    once per clock value, on the first iteration it is production-eligible.
    """
    members = world.membership()
    elig = compute_eligibility(world, members)
    fresh = _perceive(world, elig.perception_eligible)
    _memorize(world, fresh, members)
    _route(world, _produce(world, elig.influence_eligible, members))
    assert elig.reaction_due, "reaction set cannot be empty"
    _react(world, elig.reaction_due, members)
    world.iterations += 1
    return world


def run_until(world: World, scheduler: Scheduler = "async") -> tuple[World, list[TraceEvent]]:
    """Step until every clock is past the horizon; return the world and its trace."""
    if scheduler == "sync":
        check_synchronous(world)
        while max(world.clocks.values()) <= world.horizon:
            step_synchronous(world)
    elif scheduler == "async":
        while any(t <= world.horizon for t in world.clocks.values()):
            step_asynchronous(world)
    else:
        raise ConfigurationError(f"unknown scheduler {scheduler!r}")
    return world, world.trace
