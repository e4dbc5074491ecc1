"""Per-level dynamic states, agents, influences and the body-based membership rule.

A level's membership is never stored: an agent belongs to a level exactly
when an :class:`AgentBody` naming it sits among that level's environmental
properties. Moving an agent between levels is therefore just a reaction
that edits properties.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

ENV_PREFIX = "env:"


class IntegrityError(RuntimeError):
    """Raised when engine bookkeeping contradicts the level states."""


class AgentKind(str, enum.Enum):
    TROPISTIC = "tropistic"
    HYSTERETIC = "hysteretic"


def environment_of(level: str) -> str:
    """Emitter id used for influences produced by a level's environment."""
    return ENV_PREFIX + level


@dataclass(frozen=True)
class AgentBody:
    """The part of an agent's physical state that lives in one level."""

    agent: str
    body: Any = None


@dataclass(frozen=True)
class Influence:
    """A targeted desire for change; never a direct mutation.

    Models construct influences with ``target``, ``kind`` and ``payload``;
    the engine stamps ``emitter`` and ``seq`` when the influence is produced.
    """

    target: str
    kind: str
    payload: Any = None
    persistent: bool = False
    emitter: str = ""
    seq: int = -1

    @property
    def order_key(self) -> tuple[str, str, int]:
        return (self.kind, self.emitter, self.seq)


@dataclass
class Agent:
    """One mind, zero or more bodies.

    ``behavior`` is a :class:`levelsim.behavior.BehaviorSuite`. Tropistic
    agents carry no internal state.
    """

    id: str
    kind: AgentKind
    behavior: Any
    internal_state: Any = None

    def __post_init__(self) -> None:
        self.kind = AgentKind(self.kind)
        if not isinstance(self.id, str) or not self.id or self.id.startswith(ENV_PREFIX):
            raise ValueError(f"invalid agent id {self.id!r}")
        if self.kind is AgentKind.TROPISTIC and self.internal_state is not None:
            raise ValueError(f"tropistic agent {self.id!r} cannot carry internal state")

    @property
    def hysteretic(self) -> bool:
        return self.kind is AgentKind.HYSTERETIC


@dataclass(frozen=True)
class LevelDynamicState:
    """Committed snapshot of a level: properties plus persisting influences."""

    level: str
    time: int
    properties: Mapping[str, Any] = field(default_factory=dict)
    persisting_influences: tuple[Influence, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "properties", MappingProxyType(dict(self.properties)))
        object.__setattr__(self, "persisting_influences", tuple(self.persisting_influences))

    def bodies(self) -> dict[str, Any]:
        """Map agent id -> body record for every agent present in this level."""
        return {v.agent: v.body for v in self.properties.values() if isinstance(v, AgentBody)}

    def editable(self) -> dict[str, Any]:
        """A private, mutable copy of the properties."""
        return dict(self.properties)


@dataclass(frozen=True)
class Percepts:
    """What one agent perceived this iteration.

    ``per_level`` is keyed by the level whose perception function ran (the
    agent's body level); ``observed_times`` records the clock of every level
    that was read.
    """

    agent: str
    per_level: Mapping[str, Any] = field(default_factory=dict)
    observed_times: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class TemporaryInfluenceSet:
    level: str
    time: int
    influences: tuple[Influence, ...] = ()

    def __len__(self) -> int:
        return len(self.influences)

    def __iter__(self):
        return iter(self.influences)


def body_key(agent: str) -> str:
    """Conventional property key for an agent's body."""
    return "body:" + agent


def level_membership(agent: str, state: LevelDynamicState) -> bool:
    return any(isinstance(v, AgentBody) and v.agent == agent for v in state.properties.values())


def agents_of_level(state: LevelDynamicState, registry: Mapping[str, Agent] | Iterable[str]) -> list[str]:
    """Agents with a body in ``state``, sorted by id.

    Raises:
        IntegrityError: if a body names an agent missing from ``registry``.
    """
    known = registry if isinstance(registry, Mapping) else set(registry)
    ids = set()
    for value in state.properties.values():
        if isinstance(value, AgentBody):
            if value.agent not in known:
                raise IntegrityError(
                    f"level {state.level!r} at t={state.time} holds a body for unregistered agent {value.agent!r}"
                )
            ids.add(value.agent)
    return sorted(ids)


def collect_temporary_influences(
    level: str,
    persisting: Iterable[Influence],
    delivered: Sequence[tuple[str, Sequence[Influence]]],
    *,
    in_neighbors: Iterable[str],
    time: int = 0,
) -> TemporaryInfluenceSet:
    """Union the persisting influences with every delivered batch.

    ``delivered`` is a sequence of ``(source_level, batch)`` pairs. Each
    source must be an in-neighbor of ``level`` (the level itself included).
    """
    allowed = set(in_neighbors)
    gathered = list(persisting)
    for source, batch in delivered:
        if source not in allowed:
            raise IntegrityError(
                f"batch from {source!r} routed to {level!r}, which it does not influence"
            )
        for inf in batch:
            if inf.target != level:
                raise IntegrityError(f"influence for {inf.target!r} found in batch routed to {level!r}")
        gathered.extend(batch)
    return TemporaryInfluenceSet(level=level, time=time, influences=tuple(gathered))


def place_body(props: dict[str, Any], agent: str, body: Any = None) -> None:
    props[body_key(agent)] = AgentBody(agent, body)


def remove_body(props: dict[str, Any], agent: str) -> Optional[AgentBody]:
    for key, value in list(props.items()):
        if isinstance(value, AgentBody) and value.agent == agent:
            return props.pop(key)
    return None


Applier = Callable[[dict, Influence], None]
