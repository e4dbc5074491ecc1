"""Multi-level influence/reaction agent simulation.

Levels with their own clocks are linked by influence and perception
digraphs; agents act only by emitting influences, and each level's reaction
is the sole way its state changes.
"""

from .behavior import (
    BehaviorSuite,
    ContractViolation,
    DefaultReaction,
    EnvironmentSuite,
    ReactionError,
    ReactionOutcome,
    default_reaction,
    produce_agent_influences,
    produce_environment_influences,
)
from .scheduler import (
    ConfigurationError,
    EligibilitySets,
    MemorizationStamp,
    RoutingBuffer,
    World,
    compute_eligibility,
    memorization_stamp,
    route_influences,
    run_until,
    state_digest,
    step_asynchronous,
    step_synchronous,
)
from .state import (
    Agent,
    AgentBody,
    AgentKind,
    Influence,
    IntegrityError,
    LevelDynamicState,
    Percepts,
    TemporaryInfluenceSet,
    agents_of_level,
    collect_temporary_influences,
    environment_of,
    level_membership,
    place_body,
    remove_body,
)
from .topology import LevelSpec, Topology, TopologyError, build_topology, neighborhood
from .trace import (
    EMPTY_DIGEST,
    RULES,
    TraceEvent,
    TraceParseError,
    Violation,
    parse_trace,
    read_trace,
    trace_digest,
    validate_causality,
    write_trace,
)

__version__ = "0.1.0"
