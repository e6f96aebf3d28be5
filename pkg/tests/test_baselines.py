import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmnai.baselines import ICConfig, ic_final_stances, ic_traces, run_ic
from dmnai.engine import derive_replica_rng
from dmnai.graph import SocialGraph, generate_synthetic
from oracles import ic_live_edge_distribution

DIAMOND = SocialGraph.from_named_edges([("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


def test_chain_certain():
    g = SocialGraph.from_named_edges([("a", "b"), ("b", "c")])
    assert run_ic(g, [0], ICConfig(1.0), random.Random(0)) == [[0], [1], [2]]


def test_zero_probability_keeps_seeds():
    g = generate_synthetic("random", 30, 0.3, random.Random(1))
    rounds = run_ic(g, [3, 7], ICConfig(0.0), random.Random(0))
    assert rounds == [[3, 7]]


def test_diamond_oracle_value():
    dist = ic_live_edge_distribution(4, list(DIAMOND.edges), [0], Fraction(1, 2))
    sink = sum(w for s, w in dist.items() if 3 in s)
    assert sink == Fraction(7, 16)


def test_per_edge_override():
    g = SocialGraph.from_named_edges([("a", "b"), ("a", "c")])
    rounds = run_ic(g, [0], ICConfig(0.0, edge_probabilities={(0, 2): 1.0}), random.Random(0))
    assert rounds == [[0], [2]]


def test_invalid_probability():
    with pytest.raises(ValueError):
        ICConfig(1.5)
    with pytest.raises(ValueError):
        run_ic(DIAMOND, [9], ICConfig(0.5), random.Random(0))


def test_trace_schema():
    rounds = [[0], [1, 2], [3]]
    traces = ic_traces(rounds, 5)
    assert [t.affected_total for t in traces] == [1, 3, 4]
    assert [t.count_unknown for t in traces] == [4, 2, 1]
    assert [t.new_adjacent for t in traces] == [0, 2, 1]
    assert all(t.count_0 == 0 and t.count_05 == 0 for t in traces)
    assert ic_final_stances(rounds, 5) == [1.0, 1.0, 1.0, 1.0, -1.0]


class CountingRandom(random.Random):
    def __init__(self, seed):
        super().__init__(seed)
        self.calls = 0

    def random(self):
        self.calls += 1
        return super().random()


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.floats(0, 1), st.integers(0, 2**32))
def test_ic_invariants(n, p, seed):
    rng = random.Random(seed)
    g = generate_synthetic("random", n, 0.2, rng)
    seeds = rng.sample(range(n), rng.randint(1, n))
    counter = CountingRandom(seed)
    rounds = run_ic(g, seeds, ICConfig(p), counter)
    flat = [v for r in rounds for v in r]
    assert len(flat) == len(set(flat))
    assert len(rounds) <= n
    # one coin per edge at most
    assert counter.calls <= g.m
    # every activation is explained by an edge from the previous round
    for prev, cur in zip(rounds, rounds[1:]):
        assert all(any(v in g.out_neighbors(u) for u in prev) for v in cur)


@pytest.mark.parametrize(
    "edges",
    [
        [("a", "b"), ("b", "c"), ("a", "c")],
        [("a", "b"), ("b", "a"), ("b", "c"), ("c", "d"), ("a", "d")],
        [("a", "b"), ("a", "c"), ("a", "d"), ("b", "e"), ("d", "e")],
    ],
)
def test_small_graph_monte_carlo_matches_enumeration(edges):
    g = SocialGraph.from_named_edges(edges)
    p = 0.4
    dist = ic_live_edge_distribution(g.n, list(g.edges), [0], Fraction(2, 5))
    runs = 20_000
    hits = [0] * g.n
    for i in range(runs):
        for r in run_ic(g, [0], ICConfig(p), derive_replica_rng(5, i)):
            for v in r:
                hits[v] += 1
    for v in range(g.n):
        prob = float(sum(w for s, w in dist.items() if v in s))
        sigma = (prob * (1 - prob) / runs) ** 0.5
        assert abs(hits[v] / runs - prob) <= 3 * sigma + 1e-12
