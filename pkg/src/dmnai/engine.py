"""Round-based dissemination engine.

Each round runs, for every simulated topic in ascending order, an adjacent
phase (active users push their stance to graph neighbours) followed by a
non-adjacent phase (a sample of active users reaches a sample of users
they share no processed edge with, gated by attitude similarity).

The only randomness is the non-adjacent sampling, drawn from the ``rng``
passed in. Everything else is a deterministic comparison of influence
probability against perseverance.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .attitude import InfluenceEvent, att_update, perseverance_step, update_perseverance
from .graph import KNOWN_STANCES, UNKNOWN, SeedAssignment, SocialGraph
from .kernel import KernelParams, attitude_similarity, influence_probability
from .trace import RoundTrace

PERSISTENT = "persistent"
PER_ROUND = "per_round"


@dataclass(frozen=True)
class SimulationConfig:
    """All free parameters of a run.

    ``aware_share`` is the fraction of the non-adjacent target sample drawn
    from users who already know the topic; the rest are drawn from users
    who do not.  ``adjacent_direction`` chooses whether an active user
    reaches its out-neighbours (``out``) or its in-neighbours (``in``).
    """

    kernel: KernelParams = field(default_factory=KernelParams)
    rounds: int = 10
    sim_threshold: float = 0.35
    r1: float = 0.5
    r2: float = 0.05
    aware_share: float = 0.7
    init_perseverance: float = 0.5
    vadj_scope: str = PERSISTENT
    nadj_tau_gate: bool = True
    adjacent_direction: str = "out"
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        for name in ("sim_threshold", "r1", "r2", "init_perseverance"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0.5 <= self.aware_share <= 1.0:
            raise ValueError(f"aware_share must lie in [0.5, 1], got {self.aware_share}")
        if self.vadj_scope not in (PERSISTENT, PER_ROUND):
            raise ValueError(f"unknown vadj_scope {self.vadj_scope!r}")
        if self.adjacent_direction not in ("out", "in"):
            raise ValueError(f"unknown adjacent_direction {self.adjacent_direction!r}")
        if not -(2**63) <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def to_dict(self) -> dict:
        d = asdict(self)
        k = d.pop("kernel")
        k["lambda"] = k.pop("lambda_")
        d["kernel"] = k
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SimulationConfig":
        d = dict(d)
        kernel = dict(d.pop("kernel", {}))
        if "lambda" in kernel:
            kernel["lambda_"] = kernel.pop("lambda")
        unknown = set(d) - {f for f in cls.__dataclass_fields__ if f != "kernel"}
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(kernel=KernelParams(**kernel), **d)


def derive_rng(master_seed: int, *key: int) -> random.Random:
    """Reproducible stream for ``(master_seed, *key)``.

    Mixing goes through numpy's ``SeedSequence`` (entropy = master seed
    reduced mod 2**64, spawn key = ``key``); 128 bits of its output seed a
    Mersenne Twister.
    """
    ss = np.random.SeedSequence(entropy=master_seed % 2**64, spawn_key=tuple(key))
    state = ss.generate_state(4, dtype=np.uint32)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def derive_replica_rng(master_seed: int, replica_index: int) -> random.Random:
    if replica_index < 0:
        raise ValueError("replica_index must be non-negative")
    return derive_rng(master_seed, replica_index)


@dataclass
class AttitudeState:
    """Stance and perseverance, indexed ``[node][topic]``."""

    stance: list[list[float]]
    perseverance: list[list[float]]

    @classmethod
    def initial(cls, n: int, z: int, init_perseverance: float) -> "AttitudeState":
        return cls(
            [[UNKNOWN] * z for _ in range(n)],
            [[init_perseverance] * z for _ in range(n)],
        )

    def column(self, topic: int) -> tuple[float, ...]:
        return tuple(row[topic] for row in self.stance)

    def topic_view(self, graph: SocialGraph, topic: int) -> dict[str, float]:
        return {name: row[topic] for name, row in zip(graph.node_ids, self.stance)}

    def copy(self) -> "AttitudeState":
        return AttitudeState([r[:] for r in self.stance], [r[:] for r in self.perseverance])


@dataclass
class TrackingSets:
    """Per-topic bookkeeping: stance buckets, active list and visited set."""

    by_stance: list[dict[float, set[int]]]
    newly_active: list[list[int]]
    adj_visited: list[set[int]]

    @classmethod
    def empty(cls, z: int) -> "TrackingSets":
        return cls(
            [{s: set() for s in KNOWN_STANCES} for _ in range(z)],
            [[] for _ in range(z)],
            [set() for _ in range(z)],
        )

    def record(self, node: int, topic: int, old: float, new: float) -> bool:
        """Move ``node`` between buckets; returns True on activation."""
        if old == new:
            return False
        buckets = self.by_stance[topic]
        if old != UNKNOWN:
            buckets[old].discard(node)
        buckets[new].add(node)
        if old == UNKNOWN:
            self.newly_active[topic].append(node)
            return True
        return False

    def check(self, state: AttitudeState, topic: int) -> None:
        for s, members in self.by_stance[topic].items():
            expected = {i for i, row in enumerate(state.stance) if row[topic] == s}
            if members != expected:
                raise AssertionError(f"tracking set for stance {s} on topic {topic} is stale")
        known = set().union(*self.by_stance[topic].values())
        if set(self.newly_active[topic]) != known or len(self.newly_active[topic]) != len(known):
            raise AssertionError(f"active list for topic {topic} is inconsistent")


@dataclass
class SimulationResult:
    traces: list[RoundTrace]
    state: AttitudeState
    topics: tuple[int, ...]
    # round -> topic -> stance column; only filled when requested
    snapshots: list[dict[int, tuple[float, ...]]] | None = None

    def topic_traces(self, topic: int) -> list[RoundTrace]:
        return [t for t in self.traces if t.topic == topic]


def sample_size(fraction: float, population: int) -> int:
    """Half-up rounding, at least one draw from a non-empty pool when fraction > 0."""
    if population == 0 or fraction == 0:
        return 0
    return min(population, max(1, math.floor(fraction * population + 0.5)))


def _pair_rate(edge_rates: Mapping[tuple[int, int], float] | None, u: int, v: int) -> float | None:
    if edge_rates is None:
        return None
    return edge_rates.get((u, v))


def _round_trace(r: int, topic: int, tracking: TrackingSets, n: int, **counts) -> RoundTrace:
    b = tracking.by_stance[topic]
    c0, c05, c1 = len(b[0.0]), len(b[0.5]), len(b[1.0])
    return RoundTrace(r, topic, c0, c05, c1, n - c0 - c05 - c1, **counts)


def adjacent_phase(
    graph: SocialGraph,
    state: AttitudeState,
    tracking: TrackingSets,
    topic: int,
    config: SimulationConfig,
    edge_rates: Mapping[tuple[int, int], float] | None = None,
) -> tuple[int, int]:
    """Push the stance of every active user to its unvisited neighbours.

    Influence is collected from the state at phase start. A neighbour
    reached by several active users gets one perseverance update averaged
    over all of them and one stance update from the strongest (lowest
    index on ties). Returns ``(stance changes, activations)``.
    """
    j = topic
    stance = state.stance
    visited = tracking.adj_visited[j]
    neighbours = graph.out_neighbors if config.adjacent_direction == "out" else graph.in_neighbors
    kernel = config.kernel

    received: dict[int, list[tuple[float, int, float]]] = {}
    for v in list(tracking.newly_active[j]):
        sv = stance[v]
        for q in neighbours(v):
            if q in visited:
                continue
            p = influence_probability(sv, stance[q], j, kernel, _pair_rate(edge_rates, v, q))
            received.setdefault(q, []).append((p, v, sv[j]))

    changes = activations = 0
    for q in sorted(received):
        events = received[q]
        t_q = stance[q][j]
        a = update_perseverance(
            state.perseverance[q][j],
            [InfluenceEvent(v, t_u, p) for p, v, t_u in events],
            t_q,
        )
        p, _, t_u = min(events, key=lambda e: (-e[0], e[1]))
        new = att_update(t_q, t_u, p, a)
        state.perseverance[q][j] = a
        stance[q][j] = new
        visited.add(q)
        if new != t_q:
            changes += 1
            activations += tracking.record(q, j, t_q, new)
    return changes, activations


def nadj_phase(
    graph: SocialGraph,
    state: AttitudeState,
    tracking: TrackingSets,
    topic: int,
    config: SimulationConfig,
    rng: random.Random,
    edge_rates: Mapping[tuple[int, int], float] | None = None,
) -> tuple[int, int]:
    """Influence between users not visited by the adjacent phase.

    Samples ``r1`` of the active users as sources and ``r2`` of the
    unvisited users as targets (mixed by ``aware_share``), then lets every
    source act on every target in index order. Returns
    ``(stance changes, activations)``.
    """
    j = topic
    active = tracking.newly_active[j]
    if not active:
        return 0, 0
    stance = state.stance
    pers = state.perseverance
    visited = tracking.adj_visited[j]

    k_src = sample_size(config.r1, len(active))
    if k_src == 0:
        return 0, 0
    pos = sorted(rng.sample(range(len(active)), k_src))
    sources = [active[i] for i in pos]

    unvisited = [i for i in range(graph.n) if i not in visited]
    total = sample_size(config.r2, len(unvisited))
    if total == 0:
        return 0, 0
    aware = [i for i in unvisited if stance[i][j] != UNKNOWN]
    unaware = [i for i in unvisited if stance[i][j] == UNKNOWN]
    n_aware = min(len(aware), math.floor(config.aware_share * total + 0.5))
    n_unaware = min(len(unaware), total - n_aware)
    n_aware = min(len(aware), total - n_unaware)
    targets = sorted(rng.sample(aware, n_aware) + rng.sample(unaware, n_unaware))

    kernel = config.kernel
    gate = config.nadj_tau_gate
    tau = config.sim_threshold
    changes = activations = 0
    for q in targets:
        sq = stance[q]
        for v in sources:
            if v == q:
                continue
            sv = stance[v]
            if gate and attitude_similarity(sv, sq) <= tau:
                continue
            p = influence_probability(sv, sq, j, kernel, _pair_rate(edge_rates, v, q))
            t_q = sq[j]
            a = perseverance_step(pers[q][j], sv[j], t_q, p)
            pers[q][j] = a
            new = att_update(t_q, sv[j], p, a)
            if new != t_q:
                sq[j] = new
                changes += 1
                activations += tracking.record(q, j, t_q, new)
    return changes, activations


def initial_state(
    graph: SocialGraph, seeds: Iterable[SeedAssignment], config: SimulationConfig
) -> tuple[AttitudeState, TrackingSets]:
    state = AttitudeState.initial(graph.n, graph.z, config.init_perseverance)
    tracking = TrackingSets.empty(graph.z)
    for s in sorted(seeds, key=lambda s: (s.topic, s.node)):
        if not 0 <= s.node < graph.n:
            raise ValueError(f"seed node {s.node} not in graph")
        if not 0 <= s.topic < graph.z:
            raise ValueError(f"seed topic {s.topic} out of range [0, {graph.z})")
        old = state.stance[s.node][s.topic]
        if old != UNKNOWN:
            raise ValueError(f"duplicate seed for node {s.node}, topic {s.topic}")
        state.stance[s.node][s.topic] = s.stance
        tracking.record(s.node, s.topic, old, s.stance)
    return state, tracking


def run_simulation(
    graph: SocialGraph,
    seeds: Sequence[SeedAssignment],
    topic: int | None,
    config: SimulationConfig,
    rng: random.Random | None = None,
    edge_rates: Mapping[tuple[int, int], float] | None = None,
    record_states: bool = False,
) -> SimulationResult:
    """Run ``config.rounds`` rounds on one topic, or on all topics when
    ``topic`` is None. ``rng`` defaults to replica 0 of ``config.master_seed``."""
    if topic is None:
        topics = tuple(range(graph.z))
    else:
        if not 0 <= topic < graph.z:
            raise ValueError(f"topic {topic} out of range [0, {graph.z})")
        topics = (topic,)
    if rng is None:
        rng = derive_replica_rng(config.master_seed, 0)

    state, tracking = initial_state(graph, seeds, config)
    n = graph.n
    traces = [_round_trace(0, j, tracking, n) for j in topics]
    snapshots = [{j: state.column(j) for j in topics}] if record_states else None

    for r in range(1, config.rounds + 1):
        if config.vadj_scope == PER_ROUND:
            for j in topics:
                tracking.adj_visited[j].clear()
        for j in topics:
            adj_changes, adj_new = adjacent_phase(graph, state, tracking, j, config, edge_rates)
            nadj_changes, nadj_new = nadj_phase(graph, state, tracking, j, config, rng, edge_rates)
            tracking.check(state, j)
            traces.append(
                _round_trace(
                    r, j, tracking, n,
                    new_adjacent=adj_new,
                    new_nonadjacent=nadj_new,
                    adjacent_updates=adj_changes,
                    nonadjacent_updates=nadj_changes,
                )
            )
        if snapshots is not None:
            snapshots.append({j: state.column(j) for j in topics})

    return SimulationResult(traces, state, topics, snapshots)


def with_overrides(config: SimulationConfig, **overrides) -> SimulationConfig:
    """Copy of ``config`` with top-level or ``kernel.*`` fields replaced."""
    kernel_kw = {k[len("kernel."):]: v for k, v in overrides.items() if k.startswith("kernel.")}
    top = {k: v for k, v in overrides.items() if not k.startswith("kernel.")}
    if kernel_kw:
        top["kernel"] = replace(config.kernel, **kernel_kw)
    return replace(config, **top)
