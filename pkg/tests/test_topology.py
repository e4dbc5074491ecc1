import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelsim import LevelSpec, TopologyError, build_topology, neighborhood


def brute_neighborhood(ids, edges, direction, level):
    """Direct enumeration of the in/out neighborhood definitions."""
    if direction == "out":
        return {level} | {b for (a, b) in edges if a == level}
    return {level} | {a for (a, b) in edges if b == level}


def levels(*ids, dt=1):
    return [LevelSpec(i, dt) for i in ids]


def test_perception_edge_reaches_both_levels():
    topo = build_topology(levels("l", "l'"), [], [("l", "l'")])
    assert topo.perception_out("l") == {"l", "l'"}
    assert topo.perception_out("l'") == {"l'"}


def test_single_level_neighborhoods_are_self():
    topo = build_topology(levels("a"))
    for relation in ("influence", "perception"):
        for direction in ("in", "out"):
            assert neighborhood(topo, relation, direction, "a") == {"a"}


def test_duplicate_level_id_rejected():
    with pytest.raises(TopologyError, match="duplicate"):
        build_topology([LevelSpec("m", 1), LevelSpec("m", 2)])


@pytest.mark.parametrize(
    "edges, match",
    [
        ([("a", "q")], "unknown level"),
        ([("a", "a")], "self-loop"),
        ([("a",)], "ordered pair"),
    ],
)
def test_bad_edges_rejected(edges, match):
    with pytest.raises(TopologyError, match=match):
        build_topology(levels("a", "b"), edges)


@pytest.mark.parametrize("dt", [0, -1, 1.5, True])
def test_bad_dt_rejected(dt):
    with pytest.raises(TopologyError):
        LevelSpec("a", dt)


def test_chain_influence_neighborhoods():
    edges = [("x", "y"), ("y", "z")]
    topo = build_topology(levels("x", "y", "z"), edges)
    assert topo.influence_out("y") == brute_neighborhood("xyz", edges, "out", "y") == {"y", "z"}
    assert topo.influence_in("y") == brute_neighborhood("xyz", edges, "in", "y") == {"x", "y"}
    assert topo.perception_out("x") == {"x"}


def test_complete_graph_in_neighborhood():
    edges = [(a, b) for a, b in itertools.permutations("xyz", 2)]
    topo = build_topology(levels("x", "y", "z"), edges)
    assert topo.influence_in("z") == {"x", "y", "z"}


def test_levels_sorted_and_unknown_query():
    topo = build_topology(levels("b", "a", "c"))
    assert topo.level_ids == ("a", "b", "c")
    with pytest.raises(TopologyError):
        topo.influence_out("nope")


ids_strategy = st.integers(min_value=1, max_value=8).map(lambda n: [f"v{i}" for i in range(n)])


@st.composite
def digraphs(draw):
    ids = draw(ids_strategy)
    pairs = [p for p in itertools.permutations(ids, 2)]
    e_i = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    e_p = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return ids, e_i, e_p


@settings(max_examples=150, deadline=None)
@given(digraphs())
def test_self_inclusion_duality_and_purity(graph):
    ids, e_i, e_p = graph
    topo = build_topology(levels(*ids), e_i, e_p)
    for relation, edges in (("influence", e_i), ("perception", e_p)):
        for l in ids:
            out = neighborhood(topo, relation, "out", l)
            inn = neighborhood(topo, relation, "in", l)
            assert l in out and l in inn
            assert out == brute_neighborhood(ids, edges, "out", l)
            assert inn == brute_neighborhood(ids, edges, "in", l)
            assert neighborhood(topo, relation, "out", l) == out
            for m in ids:
                assert (m in out) == (l in neighborhood(topo, relation, "in", m))
