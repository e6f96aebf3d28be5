"""Independent Cascade baseline."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import SocialGraph
from .trace import RoundTrace


@dataclass(frozen=True)
class ICConfig:
    edge_probability: float = 0.1
    edge_probabilities: Mapping[tuple[int, int], float] = field(default_factory=dict)
    master_seed: int = 0

    def __post_init__(self) -> None:
        probs = [self.edge_probability, *self.edge_probabilities.values()]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("edge probabilities must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"edge_probability": self.edge_probability, "master_seed": self.master_seed}


def run_ic(graph: SocialGraph, seed_nodes: Iterable[int], config: ICConfig, rng: random.Random) -> list[list[int]]:
    """Activation rounds of one cascade; element 0 is the seed set.

    Every newly active node tries each out-edge to a still inactive
    neighbour exactly once, in index order.
    """
    seeds = sorted(set(seed_nodes))
    for s in seeds:
        if not 0 <= s < graph.n:
            raise ValueError(f"seed node {s} not in graph")
    active = set(seeds)
    rounds = [seeds]
    frontier = seeds
    p_default = config.edge_probability
    overrides = config.edge_probabilities
    while frontier and len(active) < graph.n:
        nxt = []
        for u in frontier:
            for v in graph.out_neighbors(u):
                if v in active:
                    continue
                p = overrides.get((u, v), p_default) if overrides else p_default
                if rng.random() < p:
                    active.add(v)
                    nxt.append(v)
        if not nxt:
            break
        nxt.sort()
        rounds.append(nxt)
        frontier = nxt
    return rounds


def ic_traces(rounds: list[list[int]], n: int, topic: int = 0) -> list[RoundTrace]:
    """Express IC rounds in the shared trace schema: active nodes count as
    stance 1, inactive ones as unknown."""
    out = []
    total = 0
    for r, newly in enumerate(rounds):
        total += len(newly)
        out.append(RoundTrace(r, topic, 0, 0, total, n - total, new_adjacent=len(newly) if r else 0,
                              adjacent_updates=len(newly) if r else 0))
    return out


def ic_final_stances(rounds: list[list[int]], n: int) -> list[float]:
    col = [-1.0] * n
    for newly in rounds:
        for v in newly:
            col[v] = 1.0
    return col
