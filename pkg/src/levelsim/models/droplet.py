"""Droplet/pond model: micro agents aggregate into macro agents and back.

Droplets are tropistic agents walking on a ring of cells in the micro level
``M``. When a cell holds at least ``threshold`` droplets, the micro
environment asks the macro level ``P`` to form (or grow) the pond at that
cell and asks its own reaction to delete the absorbed droplet bodies, which
leaves those droplet agents inactive. Ponds re-emit ``evaporation_rate``
droplets per macro step; the micro reaction re-creates their bodies, so the
same agents become active again.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from ..behavior import BehaviorSuite, DefaultReaction, EnvironmentSuite
from ..scheduler import World
from ..state import Agent, AgentBody, AgentKind, Influence, LevelDynamicState, place_body, remove_body
from ..topology import LevelSpec, build_topology

MICRO, MACRO = "M", "P"
INFLUENCE_EDGES = ((MICRO, MACRO), (MACRO, MICRO))
PERCEPTION_EDGES = ((MACRO, MICRO),)


@dataclass(frozen=True)
class DropletModelConfig:
    cell_count: int
    initial_droplets: Sequence[tuple[str, int]]
    threshold: int = 4
    evaporation_rate: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_droplets", tuple((str(d), int(c)) for d, c in self.initial_droplets))
        if self.cell_count < 1:
            raise ValueError("cell_count must be positive")
        if self.threshold < 2:
            raise ValueError("threshold must be >= 2")
        if self.evaporation_rate < 0:
            raise ValueError("evaporation_rate must be >= 0")
        ids = [d for d, _ in self.initial_droplets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate droplet id")
        for d, c in self.initial_droplets:
            if not 0 <= c < self.cell_count:
                raise ValueError(f"droplet {d!r} starts outside the ring (cell {c})")
            if d.startswith("pond-"):
                raise ValueError(f"droplet id {d!r} collides with pond ids")


def pond_id(cell: int) -> str:
    return f"pond-{cell:03d}"


def _walk_step(seed: int, agent: str, time: int) -> int:
    # str seeds hash through sha512, so this is stable across processes
    return random.Random(f"{seed}/{agent}/{time}").choice((-1, 0, 1))


class _Droplet:
    def __init__(self, seed: int, cells: int):
        self.seed, self.cells = seed, cells

    def perceive(self, agent: str, level: str, view: Mapping[str, LevelDynamicState]) -> dict:
        st = view[MICRO]
        return {"cell": st.bodies()[agent]["cell"], "time": st.time}

    def decide(self, agent: str, level: str, percept: Any) -> list[Influence]:
        if not percept:
            return []
        step = _walk_step(self.seed, agent, percept["time"])
        if step == 0:
            return []
        return [Influence(MICRO, "move", {"agent": agent, "cell": (percept["cell"] + step) % self.cells})]


class _Pond:
    def __init__(self, rate: int):
        self.rate = rate

    def perceive(self, agent: str, level: str, view: Mapping[str, LevelDynamicState]) -> Any:
        return view[MACRO].bodies().get(agent)

    def decide(self, agent: str, level: str, percept: Any) -> list[Influence]:
        if not percept or self.rate == 0 or not percept["members"]:
            return []
        out = list(percept["members"][: self.rate])
        return [
            Influence(MICRO, "spawn_droplets", {"cell": percept["cell"], "ids": out}),
            Influence(MACRO, "shrink", {"pond": agent, "ids": out}),
        ]


def _aggregation(threshold: int):
    def natural(level: str, state: LevelDynamicState) -> list[Influence]:
        by_cell = defaultdict(list)
        for aid, body in state.bodies().items():
            by_cell[body["cell"]].append(aid)
        out = []
        for cell in sorted(by_cell):
            ids = sorted(by_cell[cell])
            if len(ids) >= threshold:
                absorbed = ids[:threshold]
                out.append(Influence(MACRO, "form_pond", {"cell": cell, "members": absorbed}))
                out.append(Influence(MICRO, "remove_droplets", {"ids": absorbed}))
        return out

    return natural


def _move(props: dict, inf: Influence) -> None:
    aid = inf.payload["agent"]
    if remove_body(props, aid) is not None:
        place_body(props, aid, {"cell": inf.payload["cell"]})


def _remove(props: dict, inf: Influence) -> None:
    for aid in inf.payload["ids"]:
        if remove_body(props, aid) is None:
            raise ValueError(f"droplet {aid!r} absorbed twice")


def _spawn(props: dict, inf: Influence) -> None:
    for aid in inf.payload["ids"]:
        if any(isinstance(v, AgentBody) and v.agent == aid for v in props.values()):
            raise ValueError(f"droplet {aid!r} spawned while active")
        place_body(props, aid, {"cell": inf.payload["cell"]})


def _form(props: dict, inf: Influence) -> None:
    pid = pond_id(inf.payload["cell"])
    old = remove_body(props, pid)
    members = tuple(old.body["members"]) if old is not None else ()
    place_body(props, pid, {"cell": inf.payload["cell"], "members": members + tuple(inf.payload["members"])})


def _shrink(props: dict, inf: Influence) -> None:
    old = remove_body(props, inf.payload["pond"])
    if old is None:
        raise ValueError(f"pond {inf.payload['pond']!r} shrunk while absent")
    gone = set(inf.payload["ids"])
    members = tuple(m for m in old.body["members"] if m not in gone)
    if members:
        place_body(props, inf.payload["pond"], {"cell": old.body["cell"], "members": members})


MICRO_REACTION = DefaultReaction({"move": _move, "remove_droplets": _remove, "spawn_droplets": _spawn})
MACRO_REACTION = DefaultReaction({"form_pond": _form, "shrink": _shrink})


def build_droplet_scenario(
    config: DropletModelConfig,
    dt_micro: int = 1,
    dt_macro: int = 1,
    horizon: int = 20,
    seed: int = 0,
    check_purity: bool = False,
) -> World:
    """Two-level droplet world: ``M`` holds droplets, ``P`` holds ponds.

    Mass (droplets plus pond members) is conserved at aligned times as long
    as every production of one level can be delivered to the other. When
    one step is three or more times the other, a level may produce while
    its peer's gate is closed; the cross-level half of a paired influence
    is then discarded while the self-directed half still applies, and mass
    is lost.
    """
    topo = build_topology([LevelSpec(MICRO, dt_micro), LevelSpec(MACRO, dt_macro)], INFLUENCE_EDGES, PERCEPTION_EDGES)
    drop = _Droplet(seed, config.cell_count)
    pond = _Pond(config.evaporation_rate)
    drop_suite = BehaviorSuite(perception=drop.perceive, decision=drop.decide)
    pond_suite = BehaviorSuite(perception=pond.perceive, decision=pond.decide)

    agents = [Agent(d, AgentKind.TROPISTIC, drop_suite) for d, _ in config.initial_droplets]
    agents += [Agent(pond_id(c), AgentKind.TROPISTIC, pond_suite) for c in range(config.cell_count)]

    micro: dict = {"cells": config.cell_count}
    for d, c in config.initial_droplets:
        place_body(micro, d, {"cell": c})
    states = {
        MICRO: LevelDynamicState(MICRO, 0, micro),
        MACRO: LevelDynamicState(MACRO, 0, {"cells": config.cell_count}),
    }
    envs = {
        MICRO: EnvironmentSuite(natural=_aggregation(config.threshold), reaction=MICRO_REACTION),
        MACRO: EnvironmentSuite(reaction=MACRO_REACTION),
    }
    return World(topo, states, agents, envs, horizon=horizon, rng_seed=seed, check_purity=check_purity)


def droplet_count(state: LevelDynamicState) -> int:
    return len(state.bodies())


def pond_mass(state: LevelDynamicState) -> int:
    return sum(len(body["members"]) for body in state.bodies().values())


def aligned_masses(world: World) -> dict[int, int]:
    """Total mass at every time where both levels committed a state."""
    micro = {st.time: droplet_count(st) for st in world.history[MICRO]}
    macro = {st.time: pond_mass(st) for st in world.history[MACRO]}
    return {t: micro[t] + macro[t] for t in sorted(set(micro) & set(macro))}
