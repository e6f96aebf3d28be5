import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmnai.graph import (
    GraphFormatError,
    SeedAssignment,
    SocialGraph,
    dump_seeds,
    generate_synthetic,
    load_edge_list,
    load_seeds,
)


def test_load_edge_list_counts():
    g = load_edge_list("a b\nb c")
    assert (g.n, g.m, g.z) == (3, 2, 1)
    assert g.node_ids == ("a", "b", "c")


def test_duplicate_edges_collapse():
    assert load_edge_list("a b\na b").m == 1


def test_self_loop_rejected():
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_edge_list("a a")


def test_malformed_line_reports_line_number():
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edge_list("a b\na b c\n")


def test_empty_input_rejected():
    with pytest.raises(GraphFormatError, match="empty"):
        load_edge_list("# only a comment\n\n")


def test_comments_and_stream_input():
    g = load_edge_list(io.StringIO("# header\nx y  # trailing\n\ny z\n"))
    assert g.node_ids == ("x", "y", "z")
    assert g.out_neighbors(g.index_of("x")) == (g.index_of("y"),)
    assert g.in_neighbors(g.index_of("z")) == (g.index_of("y"),)


def test_seed_loading():
    g = load_edge_list("a b\nb c")
    assert load_seeds("a 0 1", g, 1) == [SeedAssignment(0, 0, 1.0)]


@pytest.mark.parametrize(
    "text, match",
    [
        ("a 0 -1", "known"),
        ("a 5 0", "topic"),
        ("zz 0 0", "unknown node"),
        ("a 0 0.25", "off the grid"),
        ("a 0 1\na 0 0", "duplicate"),
        ("a 0", "expected"),
    ],
)
def test_seed_errors(text, match):
    g = load_edge_list("a b\nb c")
    with pytest.raises(GraphFormatError, match=match):
        load_seeds(text, g, 1)


def test_seed_roundtrip():
    g = load_edge_list("a b\nb c").with_topics(2)
    seeds = [SeedAssignment(0, 0, 1.0), SeedAssignment(2, 1, 0.5), SeedAssignment(1, 1, 0.0)]
    assert load_seeds(dump_seeds(seeds, g), g) == seeds


def test_graph_rejects_bad_construction():
    with pytest.raises(ValueError):
        SocialGraph(("a", "b"), ((0, 2),))
    with pytest.raises(ValueError):
        SocialGraph(("a", "b"), ((1, 1),))
    with pytest.raises(ValueError):
        SocialGraph(("a", "a"), ())


def test_json_roundtrip_keeps_isolated_nodes():
    g = SocialGraph.from_named_edges([("a", "b")], nodes=["a", "b", "lonely"], topic_count=3)
    back = SocialGraph.from_json(g.to_json())
    assert back == g
    assert back.n == 3 and back.z == 3


def test_json_rejects_undeclared_nodes():
    with pytest.raises(GraphFormatError):
        SocialGraph.from_json({"nodes": ["a"], "edges": [["a", "b"]], "topics": 1})


def test_random_generator_extremes():
    full = generate_synthetic("random", 10, 1.0, random.Random(0))
    assert full.m == 90
    assert generate_synthetic("random", 10, 0.0, random.Random(0)).m == 0


def test_generators_deterministic():
    a = generate_synthetic("random", 100, 0.1, random.Random(7))
    b = generate_synthetic("random", 100, 0.1, random.Random(7))
    assert a.edges == b.edges
    c = generate_synthetic("preferential", 200, 3, random.Random(7))
    d = generate_synthetic("preferential", 200, 3, random.Random(7))
    assert c.edges == d.edges


@pytest.mark.parametrize(
    "kind, n, param",
    [("random", 10, 1.5), ("random", 10, -0.1), ("preferential", 5, 5), ("preferential", 1, 1), ("lattice", 5, 1)],
)
def test_generator_errors(kind, n, param):
    with pytest.raises(ValueError):
        generate_synthetic(kind, n, param, random.Random(0))


def test_preferential_out_degree():
    g = generate_synthetic("preferential", 300, 3, random.Random(1))
    degrees = [g.out_degree(i) for i in range(g.n)]
    assert all(d == 3 for d in degrees[4:])
    assert g.m == 3 * (300 - 3)


edge_lists = st.lists(
    st.tuples(st.integers(0, 12), st.integers(0, 12)).filter(lambda e: e[0] != e[1]),
    min_size=1,
    max_size=40,
)


@settings(max_examples=200, deadline=None)
@given(edge_lists)
def test_edge_list_roundtrip(pairs):
    text = "".join(f"n{u} n{v}\n" for u, v in pairs)
    g = load_edge_list(text)
    back = load_edge_list(g.to_edge_list())
    assert set(back.node_ids) == set(g.node_ids)
    named = lambda graph: {(graph.node_ids[u], graph.node_ids[v]) for u, v in graph.edges}
    assert named(back) == named(g)
    assert g.m == len({(u, v) for u, v in pairs})


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["random", "preferential"]), st.integers(2, 60), st.integers(0, 2**31))
def test_generated_graph_invariants(kind, n, seed):
    param = 0.2 if kind == "random" else max(1, min(3, n - 1))
    g = generate_synthetic(kind, n, param, random.Random(seed))
    assert all(u != v for u, v in g.edges)
    assert len(set(g.edges)) == g.m
    assert all(0 <= u < n and 0 <= v < n for u, v in g.edges)
