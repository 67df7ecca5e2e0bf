import math

import numpy as np
import pytest

from oracles import PHI, brute_commensurable
from tilesplit import configs
from tilesplit.errors import NotStronglyConnected
from tilesplit.graph import (
    AssocGraph,
    Edge,
    build_graph,
    commensurability,
    graph_matrix,
    graph_matrix_derivative,
    path_length_sequence,
    strongly_connected,
    to_dot,
)
from tilesplit.scalar import Scalar


def test_kakutani_loops():
    g = build_graph(configs.load("kakutani_third"))
    assert g.n == 1
    assert sorted(e.length for e in g.edges) == pytest.approx(sorted([math.log(3), math.log(1.5)]))


def test_rect_square_graph():
    g = build_graph(configs.load("rect_square"))
    assert g.n == 2 and len(g.edges) == 8
    assert g.adjacency().sum() == 8


def test_penrose_edge_lengths():
    # log(1/alpha) is the same on every edge; after normalization the lengths
    # log(1/beta) differ because the two prototile volumes differ
    s = configs.load("penrose_robinson")
    raw = [e.length for e in build_graph(s, normalize=False).edges]
    assert raw == pytest.approx([math.log(PHI)] * 5, rel=1e-12)
    norm = sorted(e.length / math.log(PHI) for e in build_graph(s).edges)
    assert norm == pytest.approx([0.5, 1, 1, 1, 1.5], rel=1e-12)


def test_strong_connectivity():
    assert strongly_connected(build_graph(configs.load("kakutani_third")))
    assert strongly_connected(build_graph(configs.load("rect_square")))
    g = AssocGraph(2, 1, (Edge(0, 0, 1, 1.0, 0.5, Scalar.numeric(math.e)),), ("a", "b"), False)
    assert not strongly_connected(g)
    with pytest.raises(NotStronglyConnected):
        commensurability(g)


def test_third_incommensurable_exact():
    v = commensurability(build_graph(configs.load("kakutani_third")))
    assert v.kind == "Incommensurable"
    assert v.witness is not None


def test_golden_commensurable_heuristic():
    v = commensurability(build_graph(configs.load("kakutani_golden")))
    assert v.commensurable and v.heuristic
    assert v.unit_length == pytest.approx(math.log((1 + math.sqrt(5)) / 2))


@pytest.mark.parametrize("name, multiple", [("kakutani_half", 1), ("pinwheel", 1), ("nonprimitive_square_rects", 2)])
def test_fixed_scale_unit(name, multiple):
    # the unit generates closed-path lengths; a period-2 scheme only has even closed paths
    g = build_graph(configs.load(name), normalize=False)
    v = commensurability(build_graph(configs.load(name)))
    assert v.commensurable and not v.heuristic
    assert v.unit_length == pytest.approx(multiple * g.edges[0].length, rel=1e-12)


def test_rect_square_matrix():
    g = build_graph(configs.load("rect_square"))
    np.testing.assert_allclose(graph_matrix(g, 2), [[1 / 4, 3 / 4], [4 / 9, 5 / 9]], atol=1e-12)
    np.testing.assert_array_equal(graph_matrix(g, 0), g.adjacency())


def test_derivatives():
    a = 1 / 3
    g = build_graph(configs.load("kakutani_third"))
    want = a * math.log(a) + (1 - a) * math.log(1 - a)
    assert graph_matrix_derivative(g, 1)[0, 0] == pytest.approx(want, rel=1e-12)
    g2 = build_graph(configs.load("rect_square"))
    assert graph_matrix_derivative(g2, 2)[0, 0] == pytest.approx(0.25 * math.log(0.5), rel=1e-12)


def test_derivative_matches_finite_difference():
    g = build_graph(configs.load("rect_square"))
    h = 1e-6
    fd = (graph_matrix(g, 2 + h) - graph_matrix(g, 2 - h)) / (2 * h)
    np.testing.assert_allclose(graph_matrix_derivative(g, 2), fd, atol=1e-8)


def test_path_lengths_third():
    g = build_graph(configs.load("kakutani_third"))
    got = path_length_sequence(g, 0, 4)
    assert got == pytest.approx([0, math.log(1.5), 2 * math.log(1.5), math.log(3)])


def test_path_lengths_fixed_scale():
    g = build_graph(configs.load("kakutani_half"))
    assert path_length_sequence(g, 0, 5) == pytest.approx([m * math.log(2) for m in range(5)])


def test_dot_output():
    text = to_dot(build_graph(configs.load("rect_square")))
    assert text.startswith("digraph") and text.count("->") == 8


@pytest.mark.parametrize("name", [n for n in configs.names() if configs.load(n).n <= 4])
def test_cycle_basis_agrees_with_closed_walks(name):
    g = build_graph(configs.load(name))
    assert commensurability(g).commensurable == brute_commensurable(g, max_edges=8)
