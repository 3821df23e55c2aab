import pytest

from swarmseek import graph


def test_edges_normalized_and_deduplicated():
    g = graph.TopologyGraph(4, 2, frozenset({(1, 0), (0, 1), (2, 3)}))
    assert g.edges == frozenset({(0, 1), (2, 3)})


def test_self_loop_rejected():
    with pytest.raises(ValueError, match="self-loop"):
        graph.TopologyGraph(3, 2, frozenset({(1, 1)}))


def test_unknown_agent_rejected():
    with pytest.raises(ValueError, match="unknown agent"):
        graph.TopologyGraph(3, 2, frozenset({(0, 3)}))


def test_bad_sizes_rejected():
    with pytest.raises(ValueError):
        graph.TopologyGraph(0, 2)
    with pytest.raises(ValueError):
        graph.TopologyGraph(3, 0)


def test_neighbors_sorted_and_degree():
    g = graph.TopologyGraph(5, 2, frozenset({(2, 4), (0, 2), (2, 1)}))
    assert g.neighbors(2) == [0, 1, 4]
    assert g.degree(2) == 3
    assert g.neighbors(3) == []
    with pytest.raises(IndexError):
        g.neighbors(5)


def test_cycle_graph():
    g = graph.cycle_graph(6, 2)
    assert g.agent_count == 6
    assert len(g.edges) == 6
    for i in range(6):
        assert g.neighbors(i) == sorted([(i - 1) % 6, (i + 1) % 6])


def test_complete_graph():
    g = graph.complete_graph(4, 2)
    assert len(g.edges) == 6
    assert all(g.degree(i) == 3 for i in range(4))


def test_validate_accepts_cycle():
    assert graph.validate(graph.cycle_graph(6, 2)) == []


def test_validate_flags_low_degree():
    # path graph: endpoints have a single neighbour, below d=2
    g = graph.TopologyGraph(4, 2, frozenset({(0, 1), (1, 2), (2, 3)}))
    report = graph.validate(g)
    codes = {v.code for v in report}
    assert "degree" in codes
    deg = next(v for v in report if v.code == "degree")
    assert set(deg.agents) == {0, 3}


def test_validate_flags_disconnected():
    g = graph.TopologyGraph(6, 2, frozenset({(0, 1), (1, 2), (0, 2),
                                             (3, 4), (4, 5), (3, 5)}))
    report = graph.validate(g)
    disc = next(v for v in report if v.code == "disconnected")
    assert set(disc.agents) == {3, 4, 5}


def test_single_agent_graph_degree_violation():
    g = graph.TopologyGraph(1, 2)
    report = graph.validate(g)
    assert any(v.code == "degree" for v in report)
