"""Static level graph: levels, influence and perception digraphs, neighborhoods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping

Relation = Literal["influence", "perception"]
Direction = Literal["in", "out"]


class TopologyError(ValueError):
    """Raised when a level graph is malformed or queried for an unknown level."""


@dataclass(frozen=True)
class LevelSpec:
    id: str
    dt: int
    t0: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise TopologyError(f"level id must be a non-empty string, got {self.id!r}")
        if isinstance(self.dt, bool) or not isinstance(self.dt, int) or self.dt < 1:
            raise TopologyError(f"level {self.id!r}: dt must be an integer >= 1, got {self.dt!r}")
        if isinstance(self.t0, bool) or not isinstance(self.t0, int) or self.t0 < 0:
            raise TopologyError(f"level {self.id!r}: t0 must be a non-negative integer, got {self.t0!r}")


@dataclass(frozen=True)
class Neighborhoods:
    n_i_in: Mapping[str, frozenset[str]]
    n_i_out: Mapping[str, frozenset[str]]
    n_p_in: Mapping[str, frozenset[str]]
    n_p_out: Mapping[str, frozenset[str]]


@dataclass(frozen=True)
class Topology:
    """Immutable multi-level structure.

    ``influence_edges`` and ``perception_edges`` hold only the cross-level
    pairs; every level implicitly influences and perceives itself, so all
    neighborhood queries include the queried level.
    """

    levels: tuple[LevelSpec, ...]
    influence_edges: frozenset[tuple[str, str]]
    perception_edges: frozenset[tuple[str, str]]
    neighborhoods: Neighborhoods = field(repr=False, compare=False)

    @property
    def level_ids(self) -> tuple[str, ...]:
        return tuple(spec.id for spec in self.levels)

    def spec(self, level: str) -> LevelSpec:
        try:
            return self._by_id[level]
        except KeyError:
            raise TopologyError(f"unknown level {level!r}") from None

    def dt(self, level: str) -> int:
        return self.spec(level).dt

    @property
    def _by_id(self) -> dict[str, LevelSpec]:
        # cached lazily; frozen dataclass so go through __dict__
        cache = self.__dict__.get("_by_id_cache")
        if cache is None:
            cache = {spec.id: spec for spec in self.levels}
            object.__setattr__(self, "_by_id_cache", cache)
        return cache

    def neighborhood(self, relation: Relation, direction: Direction, level: str) -> frozenset[str]:
        return neighborhood(self, relation, direction, level)

    # Shorthands used throughout the schedulers.
    def influence_out(self, level: str) -> frozenset[str]:
        return neighborhood(self, "influence", "out", level)

    def influence_in(self, level: str) -> frozenset[str]:
        return neighborhood(self, "influence", "in", level)

    def perception_out(self, level: str) -> frozenset[str]:
        return neighborhood(self, "perception", "out", level)

    def perception_in(self, level: str) -> frozenset[str]:
        return neighborhood(self, "perception", "in", level)


def _edge_set(edges: Iterable[Iterable[str]], known: set[str], name: str) -> frozenset[tuple[str, str]]:
    out = set()
    for edge in edges:
        pair = tuple(edge)
        if len(pair) != 2:
            raise TopologyError(f"{name} edge {edge!r} is not an ordered pair")
        src, dst = pair
        for end in pair:
            if end not in known:
                raise TopologyError(f"{name} edge ({src!r}, {dst!r}) references unknown level {end!r}")
        if src == dst:
            raise TopologyError(
                f"{name} edge ({src!r}, {dst!r}) is a self-loop; self relations are implicit"
            )
        out.add((src, dst))
    return frozenset(out)


def _neighbors(ids: Iterable[str], edges: frozenset[tuple[str, str]]):
    out = {l: {l} for l in ids}
    inn = {l: {l} for l in ids}
    for src, dst in edges:
        out[src].add(dst)
        inn[dst].add(src)
    return (
        {l: frozenset(s) for l, s in inn.items()},
        {l: frozenset(s) for l, s in out.items()},
    )


def build_topology(
    levels: Iterable[LevelSpec],
    influence_edges: Iterable[Iterable[str]] = (),
    perception_edges: Iterable[Iterable[str]] = (),
) -> Topology:
    """Validate levels and edges and precompute the four neighborhood maps.

    Levels are stored sorted by id so every iteration over them is
    deterministic.

    Raises:
        TopologyError: on duplicate level ids, edges naming unknown levels,
            explicit self-loops, or an invalid ``dt``.
    """
    specs = list(levels)
    seen: set[str] = set()
    for spec in specs:
        if not isinstance(spec, LevelSpec):
            raise TopologyError(f"expected LevelSpec, got {type(spec).__name__}")
        if spec.id in seen:
            raise TopologyError(f"duplicate level id {spec.id!r}")
        seen.add(spec.id)
    specs.sort(key=lambda s: s.id)

    e_i = _edge_set(influence_edges, seen, "influence")
    e_p = _edge_set(perception_edges, seen, "perception")
    ids = [s.id for s in specs]
    n_i_in, n_i_out = _neighbors(ids, e_i)
    n_p_in, n_p_out = _neighbors(ids, e_p)
    return Topology(
        levels=tuple(specs),
        influence_edges=e_i,
        perception_edges=e_p,
        neighborhoods=Neighborhoods(n_i_in=n_i_in, n_i_out=n_i_out, n_p_in=n_p_in, n_p_out=n_p_out),
    )


def neighborhood(topology: Topology, relation: Relation, direction: Direction, level: str) -> frozenset[str]:
    """Return ``{level}`` plus the levels adjacent to it in the requested digraph."""
    nb = topology.neighborhoods
    table = {
        ("influence", "in"): nb.n_i_in,
        ("influence", "out"): nb.n_i_out,
        ("perception", "in"): nb.n_p_in,
        ("perception", "out"): nb.n_p_out,
    }.get((relation, direction))
    if table is None:
        raise ValueError(f"bad relation/direction {relation!r}/{direction!r}")
    try:
        return table[level]
    except KeyError:
        raise TopologyError(f"unknown level {level!r}") from None
