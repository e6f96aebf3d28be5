"""Social graph, stance grid and the text formats used to load them.

Node ids are opaque strings. They are mapped to dense integer indices in
order of first appearance and every engine structure is index-addressed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import networkx as nx

log = logging.getLogger(__name__)

UNKNOWN = -1.0
POSITIVE = 0.0
NEUTRAL = 0.5
NEGATIVE = 1.0

STANCE_GRID = (UNKNOWN, POSITIVE, NEUTRAL, NEGATIVE)
KNOWN_STANCES = (POSITIVE, NEUTRAL, NEGATIVE)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list, seed or graph JSON input."""


def is_stance(value: float) -> bool:
    return value in STANCE_GRID


def check_stance(value: float) -> float:
    if not is_stance(value):
        raise ValueError(f"stance {value!r} is not on the grid {STANCE_GRID}")
    return float(value)


def parse_stance(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GraphFormatError(f"stance {token!r} is not a number") from None
    return value


@dataclass(frozen=True)
class SocialGraph:
    """Immutable directed graph with a fixed number of topics.

    ``edges`` holds ``(u, v)`` index pairs; an edge means ``u`` can pass
    information to ``v``.
    """

    node_ids: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    topic_count: int = 1
    _index: dict[str, int] = field(init=False, repr=False, compare=False)
    _out: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _in: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.topic_count < 1:
            raise ValueError("topic_count must be positive")
        index = {}
        for i, name in enumerate(self.node_ids):
            if name in index:
                raise ValueError(f"duplicate node id {name!r}")
            index[name] = i
        n = len(self.node_ids)
        out: list[set[int]] = [set() for _ in range(n)]
        inc: list[set[int]] = [set() for _ in range(n)]
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise ValueError(f"self-loop on node {self.node_ids[u]!r}")
            out[u].add(v)
            inc[v].add(u)
        # collapse duplicates and fix a canonical edge order
        edges = tuple(sorted({(u, v) for u, v in self.edges}))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_out", tuple(tuple(sorted(s)) for s in out))
        object.__setattr__(self, "_in", tuple(tuple(sorted(s)) for s in inc))

    @classmethod
    def from_named_edges(
        cls,
        pairs: Iterable[tuple[str, str]],
        nodes: Iterable[str] = (),
        topic_count: int = 1,
    ) -> "SocialGraph":
        index: dict[str, int] = {}

        def idx(name: str) -> int:
            if name not in index:
                index[name] = len(index)
            return index[name]

        for name in nodes:
            idx(name)
        edges = [(idx(u), idx(v)) for u, v in pairs]
        return cls(tuple(index), tuple(edges), topic_count)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def z(self) -> int:
        return self.topic_count

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown node {node_id!r}") from None

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._index

    def out_neighbors(self, i: int) -> tuple[int, ...]:
        return self._out[i]

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        return self._in[i]

    def out_degree(self, i: int) -> int:
        return len(self._out[i])

    def with_topics(self, topic_count: int) -> "SocialGraph":
        return SocialGraph(self.node_ids, self.edges, topic_count)

    def to_json(self) -> dict:
        return {
            "nodes": list(self.node_ids),
            "edges": [[self.node_ids[u], self.node_ids[v]] for u, v in self.edges],
            "topics": self.topic_count,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SocialGraph":
        try:
            nodes = [str(x) for x in doc["nodes"]]
            pairs = [(str(u), str(v)) for u, v in doc["edges"]]
            topics = int(doc.get("topics", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"bad graph document: {exc}") from None
        unknown = {x for pair in pairs for x in pair} - set(nodes)
        if unknown:
            raise GraphFormatError(f"edges reference undeclared nodes: {sorted(unknown)}")
        try:
            return cls.from_named_edges(pairs, nodes, topics)
        except ValueError as exc:
            raise GraphFormatError(str(exc)) from None

    def to_edge_list(self) -> str:
        isolated = [i for i in range(self.n) if not self._out[i] and not self._in[i]]
        if isolated:
            log.warning("edge-list output drops %d isolated node(s)", len(isolated))
        return "".join(f"{self.node_ids[u]} {self.node_ids[v]}\n" for u, v in self.edges)


def _content_lines(stream: TextIO | str):
    text = stream if isinstance(stream, str) else stream.read()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_edge_list(stream: TextIO | str, topic_count: int = 1) -> SocialGraph:
    """Parse ``u v`` lines into a graph. ``#`` starts a comment."""
    pairs = []
    for lineno, tokens in _content_lines(stream):
        if len(tokens) != 2:
            raise GraphFormatError(f"line {lineno}: expected 2 tokens, got {len(tokens)}")
        u, v = tokens
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop on {u!r}")
        pairs.append((u, v))
    if not pairs:
        raise GraphFormatError("edge list is empty")
    return SocialGraph.from_named_edges(pairs, topic_count=topic_count)


def load_graph(path: str, topic_count: int | None = None) -> SocialGraph:
    """Load a graph file; ``.json`` files use the JSON document format."""
    with open(path, encoding="utf-8") as fh:
        if path.endswith(".json"):
            graph = SocialGraph.from_json(json.load(fh))
        else:
            graph = load_edge_list(fh)
    if topic_count is not None and topic_count != graph.topic_count:
        graph = graph.with_topics(topic_count)
    return graph


@dataclass(frozen=True)
class SeedAssignment:
    node: int
    topic: int
    stance: float

    def __post_init__(self) -> None:
        if self.stance not in KNOWN_STANCES:
            raise ValueError(f"seed stance must be one of {KNOWN_STANCES}, got {self.stance}")


def load_seeds(stream: TextIO | str, graph: SocialGraph, topic_count: int | None = None) -> list[SeedAssignment]:
    """Parse ``node topic stance`` lines into validated seed assignments."""
    z = graph.topic_count if topic_count is None else topic_count
    seeds: list[SeedAssignment] = []
    seen: set[tuple[int, int]] = set()
    for lineno, tokens in _content_lines(stream):
        if len(tokens) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'node topic stance'")
        name, topic_tok, stance_tok = tokens
        if name not in graph:
            raise GraphFormatError(f"line {lineno}: unknown node {name!r}")
        try:
            topic = int(topic_tok)
        except ValueError:
            raise GraphFormatError(f"line {lineno}: topic {topic_tok!r} is not an integer") from None
        if not 0 <= topic < z:
            raise GraphFormatError(f"line {lineno}: topic {topic} outside [0, {z})")
        stance = parse_stance(stance_tok)
        if stance == UNKNOWN:
            raise GraphFormatError(f"line {lineno}: seeds must hold a known stance")
        if stance not in KNOWN_STANCES:
            raise GraphFormatError(f"line {lineno}: stance {stance_tok!r} is off the grid")
        key = (graph.index_of(name), topic)
        if key in seen:
            raise GraphFormatError(f"line {lineno}: duplicate seed for ({name}, {topic})")
        seen.add(key)
        seeds.append(SeedAssignment(key[0], topic, stance))
    return seeds


def dump_seeds(seeds: Iterable[SeedAssignment], graph: SocialGraph) -> str:
    return "".join(f"{graph.node_ids[s.node]} {s.topic} {s.stance:g}\n" for s in seeds)


def generate_synthetic(kind: str, n: int, edge_param: float, rng, topic_count: int = 1) -> SocialGraph:
    """Random (directed G(n, p)) or preferential-attachment graph.

    For ``preferential`` every node added after the initial core gets
    ``edge_param`` out-edges towards existing nodes, chosen with
    probability proportional to their degree.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    seed = rng.getrandbits(32)
    if kind == "random":
        if not 0.0 <= edge_param <= 1.0:
            raise ValueError(f"edge probability {edge_param} outside [0, 1]")
        g = nx.gnp_random_graph(n, edge_param, seed=seed, directed=True)
        pairs = list(g.edges())
    elif kind == "preferential":
        k = int(edge_param)
        if k != edge_param or k < 1:
            raise ValueError("out-degree must be a positive integer")
        if k >= n:
            raise ValueError(f"out-degree {k} must be smaller than n={n}")
        g = nx.barabasi_albert_graph(n, k, seed=seed)
        # newer node points at the older node it attached to
        pairs = [(max(u, v), min(u, v)) for u, v in g.edges()]
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    names = [str(i) for i in range(n)]
    return SocialGraph(tuple(names), tuple(sorted(pairs)), topic_count)
