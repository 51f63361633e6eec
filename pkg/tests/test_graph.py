import numpy as np
import pytest
from hypothesis import given, settings

from hiord.graph import (
    DirectedGraph,
    GraphError,
    centers,
    directed_ring,
    is_balanced,
    is_quasi_strongly_connected,
    is_strongly_connected,
    laplacian,
    parse_edge,
    parse_graph,
    union,
)

from conftest import digraphs


def closure_centers(g):
    # Warshall closure, independent of the BFS in the library
    n = g.n_nodes
    R = np.eye(n, dtype=bool)
    for (i, j) in g.edges:
        R[j, i] = True
    for k in range(n):
        R |= R[:, [k]] & R[[k], :]
    return {v for v in range(n) if R[v].all()}


def test_laplacian_small_example():
    g = parse_graph(3, ["2 <- 1 : 2", "3 <- 2"])
    L = laplacian(g)
    np.testing.assert_array_equal(L, [[0, 0, 0], [-2, 2, 0], [0, -1, 1]])


@given(digraphs())
def test_laplacian_rows_sum_to_zero(g):
    L = laplacian(g)
    assert np.abs(L.sum(axis=1)).max() < 1e-12
    off = L - np.diag(np.diag(L))
    assert np.all(off <= 0)


@settings(max_examples=200)
@given(digraphs())
def test_centers_match_transitive_closure(g):
    ok, cs = is_quasi_strongly_connected(g)
    assert cs == closure_centers(g)
    assert ok == bool(cs)


@given(digraphs())
def test_strong_implies_quasi_strong(g):
    if is_strongly_connected(g):
        assert is_quasi_strongly_connected(g)[0]
        assert centers(g) == set(range(g.n_nodes))


def test_spanning_tree_center_is_root():
    # star rooted at node 0: 0 -> 1, 0 -> 2, 2 -> 3
    g = DirectedGraph.from_edges(4, [(1, 0), (2, 0), (3, 2)])
    assert centers(g) == {0}
    assert not is_strongly_connected(g)


def test_disconnected_graph_has_no_center():
    g = DirectedGraph.from_edges(4, [(1, 0), (3, 2)])
    assert is_quasi_strongly_connected(g) == (False, set())


def test_single_node_is_its_own_center():
    assert centers(DirectedGraph(1)) == {0}


@given(digraphs(min_nodes=3, max_nodes=3), digraphs(min_nodes=3, max_nodes=3))
def test_union_commutative_and_superset(g1, g2):
    u = union([g1, g2])
    assert u == union([g2, g1])
    assert set(g1.edges) | set(g2.edges) == set(u.edges)


def test_union_keeps_max_weight():
    g1 = DirectedGraph.from_edges(2, [(1, 0, 2.0)])
    g2 = DirectedGraph.from_edges(2, [(1, 0, 5.0)])
    assert union([g1, g2]).edges[(1, 0)] == 5.0


def test_union_rejects_mismatched_sizes():
    with pytest.raises(GraphError):
        union([DirectedGraph(2), DirectedGraph(3)])
    with pytest.raises(GraphError):
        union([])


def test_rings_are_balanced_and_strong():
    for n in (2, 3, 6):
        for rev in (False, True):
            g = directed_ring(n, reverse=rev)
            assert is_balanced(g)
            assert is_strongly_connected(g)


def test_path_graph_not_balanced():
    assert not is_balanced(DirectedGraph.from_edges(3, [(1, 0), (2, 1)]))


def test_parse_edge_literals():
    assert parse_edge("2 <- 1") == (1, 0, 1.0)
    assert parse_edge(" 4<-3:0.5 ") == (3, 2, 0.5)
    for bad in ("2 -> 1", "0 <- 1", "a <- b", "2 <- 1 : x"):
        with pytest.raises(GraphError):
            parse_edge(bad)


def test_literal_round_trip():
    g = parse_graph(5, ["2 <- 1", "4 <- 1 : 0.5", "5 <- 3 : 2"])
    assert parse_graph(5, g.to_literal()) == g


@pytest.mark.parametrize("edges", [[(0, 0, 1.0)], [(0, 5, 1.0)], [(1, 0, -1.0)], [(1, 0, 0.0)]])
def test_invalid_edges_rejected(edges):
    with pytest.raises(GraphError):
        DirectedGraph.from_edges(3, edges)


def test_neighbors_and_degrees():
    g = DirectedGraph.from_edges(3, [(0, 1, 2.0), (0, 2, 0.5), (2, 1, 1.0)])
    assert dict(g.neighbors(0)) == {1: 2.0, 2: 0.5}
    assert g.in_degree(0) == 2.5
    assert set(g.successors(1)) == {0, 2}
    assert len(g) == 3
