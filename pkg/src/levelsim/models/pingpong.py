"""Ping-pong model: one hysteretic agent with a body in each of two levels.

The agent perceives both counters from either body, memorizes once per
stamp (appending ``(stamp, perceived counters)`` to its log), and from each
level acknowledges the memorized sum to the other level.
"""

from __future__ import annotations

from typing import Mapping

from ..behavior import BehaviorSuite, DefaultReaction, EnvironmentSuite
from ..scheduler import World
from ..state import Agent, AgentKind, Influence, LevelDynamicState, Percepts, place_body
from ..topology import LevelSpec, build_topology

AGENT = "pp"
LEVELS = ("A", "B")
EDGES = (("A", "B"), ("B", "A"))


def perceive_counters(agent: str, level: str, view: Mapping[str, LevelDynamicState]) -> dict[str, int]:
    return {lp: st.properties["count"] for lp, st in sorted(view.items())}


def memorize(percepts: Percepts, state: dict, stamp: int) -> dict:
    seen: dict[str, int] = {}
    for l in sorted(percepts.per_level):
        seen.update(percepts.per_level[l])
    entry = (stamp, tuple(sorted(seen.items())))
    return {"log": state["log"] + (entry,), "sum": sum(seen.values())}


def acknowledge(agent: str, level: str, state: dict) -> list[Influence]:
    other = "B" if level == "A" else "A"
    return [Influence(other, "ack", state["sum"])]


def _apply_ack(props: dict, inf: Influence) -> None:
    props["count"] += 1
    props["last_ack"] = inf.payload


BEHAVIOR = BehaviorSuite(perception=perceive_counters, decision=acknowledge, memorization=memorize)
REACTION = DefaultReaction({"ack": _apply_ack})


def build_pingpong_scenario(dt_a: int, dt_b: int, horizon: int = 12, seed: int = 0, check_purity: bool = False) -> World:
    topo = build_topology([LevelSpec("A", dt_a), LevelSpec("B", dt_b)], EDGES, EDGES)
    agent = Agent(AGENT, AgentKind.HYSTERETIC, BEHAVIOR, internal_state={"log": (), "sum": 0})
    states = {}
    for l in LEVELS:
        props = {"count": 0, "last_ack": None}
        place_body(props, AGENT, {"level": l})
        states[l] = LevelDynamicState(l, 0, props)
    envs = {l: EnvironmentSuite(reaction=REACTION) for l in LEVELS}
    return World(topo, states, {AGENT: agent}, envs, horizon=horizon, rng_seed=seed, check_purity=check_purity)


def memorized_stamps(world: World) -> list[int]:
    return [stamp for stamp, _ in world.agents[AGENT].internal_state["log"]]
