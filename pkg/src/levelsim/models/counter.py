"""Counter model: every environment increments every level it influences.

Small enough to replay by hand, which is what :func:`counter_oracle` does.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..behavior import BehaviorSuite, DefaultReaction, EnvironmentSuite
from ..scheduler import World
from ..state import Agent, AgentKind, Influence, LevelDynamicState, place_body
from ..topology import Topology


@dataclass(frozen=True)
class CounterModelConfig:
    initial: Mapping[str, int] = field(default_factory=dict)
    amount: int = 1
    # passive tropistic agents that only perceive; they never influence counts
    watchers_per_level: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.amount, bool) or not isinstance(self.amount, int):
            raise ValueError("amount must be an integer")
        if self.watchers_per_level < 0:
            raise ValueError("watchers_per_level must be >= 0")


def _apply_inc(props: dict, inf: Influence) -> None:
    props["count"] = props["count"] + inf.payload


def _watch(agent: str, level: str, view: Mapping[str, LevelDynamicState]):
    return {lp: st.properties["count"] for lp, st in view.items()}


WATCHER = BehaviorSuite(perception=_watch)
REACTION = DefaultReaction({"inc": _apply_inc})


def _natural_for(topology: Topology, amount: int):
    def natural(level: str, state: LevelDynamicState) -> list[Influence]:
        return [Influence(target, "inc", amount) for target in sorted(topology.influence_out(level))]

    return natural


def build_counter_scenario(
    topology: Topology,
    config: CounterModelConfig = CounterModelConfig(),
    horizon: int = 0,
    seed: int = 0,
    check_purity: bool = False,
) -> World:
    unknown = set(config.initial) - set(topology.level_ids)
    if unknown:
        raise ValueError(f"initial counters for unknown levels {sorted(unknown)}")
    natural = _natural_for(topology, config.amount)
    states, agents, envs = {}, [], {}
    for spec in topology.levels:
        props: dict = {"count": config.initial.get(spec.id, 0)}
        for i in range(config.watchers_per_level):
            aid = f"watch-{spec.id}-{i}"
            agents.append(Agent(aid, AgentKind.TROPISTIC, WATCHER))
            place_body(props, aid, {"post": spec.id})
        states[spec.id] = LevelDynamicState(spec.id, spec.t0, props)
        envs[spec.id] = EnvironmentSuite(natural=natural, reaction=REACTION)
    return World(
        topology=topology,
        states=states,
        agents=agents,
        environments=envs,
        horizon=horizon,
        rng_seed=seed,
        check_purity=check_purity,
    )


def counter_values(world: World) -> dict[str, int]:
    return {l: world.states[l].properties["count"] for l in world.topology.level_ids}


def counter_oracle(topology: Topology, config: CounterModelConfig, scheduler: str, T: int) -> dict[str, int]:
    """Expected final counters, by direct replay of the scheduling rules.

    Deliberately self-contained: reads only the raw level list and edge set
    and shares no code with the engine.
    """
    ids = sorted(spec.id for spec in topology.levels)
    dt = {spec.id: spec.dt for spec in topology.levels}
    t = {spec.id: spec.t0 for spec in topology.levels}
    out = {l: [l] for l in ids}
    for src, dst in topology.influence_edges:
        out[src].append(dst)
    count = {l: config.initial.get(l, 0) for l in ids}
    pending = {l: 0 for l in ids}

    if scheduler == "sync":
        if len(set(t.values())) > 1 or len(set(dt.values())) > 1:
            raise ValueError("sync needs equal clocks and time steps")
        now = min(t.values(), default=T + 1)
        step = min(dt.values(), default=1)
        while now <= T:
            for l in ids:
                for m in out[l]:
                    count[m] += config.amount
            now += step
        return count

    if scheduler != "async":
        raise ValueError(scheduler)
    last_produced = {}
    while any(t[l] <= T for l in ids):
        for l in ids:
            eligible = True
            for m in out[l]:
                if not (t[l] <= t[m] or t[l] + dt[l] < t[m] + dt[m]):
                    eligible = False
            if eligible and last_produced.get(l) != t[l]:
                last_produced[l] = t[l]
                for m in out[l]:
                    if t[l] <= t[m] and t[m] < t[l] + dt[l]:
                        pending[m] += config.amount
        soonest = min(t[l] + dt[l] for l in ids)
        due = [l for l in ids if t[l] + dt[l] == soonest]
        for l in due:
            count[l] += pending[l]
            pending[l] = 0
        for l in due:
            t[l] += dt[l]
    return count
