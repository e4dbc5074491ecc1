"""Pluggable agent/environment behaviors and the default reaction strategy."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Iterator, Mapping, NamedTuple, Optional

from . import canon
from .state import (
    Agent,
    Influence,
    LevelDynamicState,
    Percepts,
    TemporaryInfluenceSet,
    environment_of,
)
from .topology import Topology

log = logging.getLogger(__name__)

# perception(agent_id, level, {perceived_level: state}) -> percept record
Perception = Callable[[str, str, Mapping[str, LevelDynamicState]], Any]
# memorization(percepts, internal_state, stamp) -> internal_state
Memorization = Callable[[Percepts, Any, int], Any]
# decision(agent_id, level, internal_state | percept record | None) -> influences
Decision = Callable[[str, str, Any], Iterable[Influence]]
Natural = Callable[[str, LevelDynamicState], Iterable[Influence]]


class ContractViolation(RuntimeError):
    """A behavior broke its contract (illegal target, impure result, ...)."""


class ReactionError(RuntimeError):
    def __init__(self, message: str, influence: Optional[Influence] = None):
        super().__init__(message)
        self.influence = influence


class ReactionOutcome(NamedTuple):
    state: LevelDynamicState
    dropped: tuple[Influence, ...] = ()


def _no_decision(agent: str, level: str, inputs: Any) -> list[Influence]:
    return []


def _no_perception(agent: str, level: str, states: Mapping[str, LevelDynamicState]) -> Any:
    return None


@dataclass(frozen=True)
class BehaviorSuite:
    """Behavior bound to an agent.

    ``perception`` and ``decision`` are called once per level the agent
    occupies; ``memorization`` is a single function per agent regardless of
    how many bodies it has, and is required exactly for hysteretic agents.
    A hysteretic decision sees only the internal state; a tropistic one sees
    only its percept record for that level (``None`` when it has none).
    """

    perception: Perception = _no_perception
    decision: Decision = _no_decision
    memorization: Optional[Memorization] = None


@dataclass(frozen=True)
class EnvironmentSuite:
    natural: Optional[Natural] = None
    reaction: Optional[Callable[[Mapping[str, Any], TemporaryInfluenceSet, int], ReactionOutcome]] = None


def _call_pure(fn, args: tuple, what: str, check: bool) -> list:
    out = list(fn(*args) or ())
    if check:
        again = list(fn(*args) or ())
        if canon.digest(out) != canon.digest(again):
            raise ContractViolation(f"{what} is not pure: two calls on identical inputs disagree")
    return out


def _stamp(
    raw: Iterable[Influence],
    emitter: str,
    source: str,
    topology: Topology,
    counter: Optional[Iterator[int]],
) -> list[Influence]:
    allowed = topology.influence_out(source)
    counter = counter if counter is not None else itertools.count()
    out = []
    for inf in raw:
        if not isinstance(inf, Influence):
            raise ContractViolation(f"{emitter} in {source!r} produced non-influence {inf!r}")
        if inf.target not in allowed:
            raise ContractViolation(
                f"{emitter} in {source!r} targeted {inf.target!r}, outside {sorted(allowed)}"
            )
        out.append(replace(inf, emitter=emitter, seq=next(counter)))
    return out


def produce_agent_influences(
    agent: Agent,
    level: str,
    inputs: Any,
    topology: Topology,
    counter: Optional[Iterator[int]] = None,
    check_purity: bool = False,
) -> list[Influence]:
    """Run ``agent``'s decision for ``level`` and stamp emitter/seq.

    ``inputs`` is the internal state for hysteretic agents and the level's
    percept record for tropistic ones.

    Raises:
        ContractViolation: if an influence targets a level outside the
            influence out-neighborhood of ``level``.
    """
    raw = _call_pure(
        agent.behavior.decision, (agent.id, level, inputs), f"decision of {agent.id!r} in {level!r}", check_purity
    )
    return _stamp(raw, agent.id, level, topology, counter)


def produce_environment_influences(
    level: str,
    state: LevelDynamicState,
    natural: Optional[Natural],
    topology: Topology,
    counter: Optional[Iterator[int]] = None,
    check_purity: bool = False,
) -> list[Influence]:
    if natural is None:
        return []
    raw = _call_pure(natural, (level, state), f"natural of {level!r}", check_purity)
    return _stamp(raw, environment_of(level), level, topology, counter)


def default_reaction(
    sigma: Mapping[str, Any],
    gamma_prime: TemporaryInfluenceSet,
    appliers: Mapping[str, Callable[[dict, Influence], None]],
    time: int,
) -> ReactionOutcome:
    """Apply influences in ascending ``(kind, emitter, seq)`` order.

    Each applier mutates a private copy of ``sigma``. Influences with no
    applier are dropped and returned in ``ReactionOutcome.dropped``.
    Persistent influences are carried into the new state's persisting set;
    everything else is consumed.
    """
    props = dict(sigma)
    dropped = []
    persisting = []
    for inf in sorted(gamma_prime.influences, key=lambda i: i.order_key):
        fn = appliers.get(inf.kind)
        if fn is None:
            dropped.append(inf)
        else:
            try:
                fn(props, inf)
            except Exception as exc:
                raise ReactionError(
                    f"applier {inf.kind!r} failed in level {gamma_prime.level!r}: {exc}", inf
                ) from exc
        if inf.persistent:
            persisting.append(inf)
    if dropped:
        log.warning("level %s dropped %d influence(s) without applier", gamma_prime.level, len(dropped))
    new = LevelDynamicState(
        level=gamma_prime.level,
        time=time,
        properties=props,
        persisting_influences=tuple(persisting),
    )
    return ReactionOutcome(new, tuple(dropped))


class DefaultReaction:
    """``default_reaction`` bound to a model's applier table."""

    def __init__(self, appliers: Mapping[str, Callable[[dict, Influence], None]]):
        self.appliers = dict(appliers)

    def __call__(self, sigma, gamma_prime, time) -> ReactionOutcome:
        return default_reaction(sigma, gamma_prime, self.appliers, time)
