"""Experiment specs, replica execution and output files."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping

from .baselines import ICConfig, ic_final_stances, ic_traces, run_ic
from .engine import SimulationConfig, derive_replica_rng, derive_rng, run_simulation
from .graph import (
    KNOWN_STANCES,
    GraphFormatError,
    SeedAssignment,
    SocialGraph,
    generate_synthetic,
    load_graph,
    load_seeds,
)
from .metrics import reference_csv
from .trace import CSV_COLUMNS, RoundTrace, canonical_json, traces_to_csv

log = logging.getLogger(__name__)

# spawn-key namespace for draws that are not replica streams
AUX = 2**32 - 1
GRAPH_STREAM = 0
SEED_STREAM = 1

MODELS = ("dmnai", "ic")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a run. Exactly one of ``graph`` (a
    file path) and ``generator`` (``{"kind", "n", "edge_param"}``) is set."""

    graph: str | None = None
    generator: Mapping | None = None
    topics: int | None = None
    seeds: str | None = None
    seed_rule: str | None = None
    seed_stance: str = "mixed"
    model: str = "dmnai"
    config: SimulationConfig = field(default_factory=SimulationConfig)
    ic_probability: float = 0.1
    topic: int | None = None
    replicas: int = 1
    edge_rates: str | None = None

    def __post_init__(self) -> None:
        if (self.graph is None) == (self.generator is None):
            raise ValueError("exactly one graph source (file or generator) is required")
        if self.seeds is not None and self.seed_rule is not None:
            raise ValueError("give either a seed file or a seed rule, not both")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.seed_rule is not None:
            parse_seed_rule(self.seed_rule)
        if self.seed_stance != "mixed" and float(self.seed_stance) not in KNOWN_STANCES:
            raise ValueError(f"seed stance must be 'mixed' or one of {KNOWN_STANCES}")
        ICConfig(self.ic_probability)

    @property
    def master_seed(self) -> int:
        return self.config.master_seed

    def to_dict(self) -> dict:
        return {
            "graph": self.graph,
            "generator": dict(self.generator) if self.generator is not None else None,
            "topics": self.topics,
            "seeds": self.seeds,
            "seed_rule": self.seed_rule,
            "seed_stance": self.seed_stance,
            "model": self.model,
            "config": self.config.to_dict(),
            "ic_probability": self.ic_probability,
            "topic": self.topic,
            "replicas": self.replicas,
            "edge_rates": self.edge_rates,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentSpec":
        d = dict(d)
        d["config"] = SimulationConfig.from_dict(d.get("config", {}))
        return cls(**d)


def parse_seed_rule(rule: str) -> tuple[str, int]:
    kind, _, k = rule.rpartition("-")
    if kind not in ("random", "top-out-degree") or not k.isdigit():
        raise ValueError(f"seed rule must be 'random-K' or 'top-out-degree-K', got {rule!r}")
    return kind, int(k)


def build_graph(spec: ExperimentSpec) -> SocialGraph:
    if spec.graph is not None:
        return load_graph(spec.graph, spec.topics)
    gen = spec.generator
    rng = derive_rng(spec.master_seed, AUX, GRAPH_STREAM)
    return generate_synthetic(gen["kind"], int(gen["n"]), gen["edge_param"], rng, spec.topics or 1)


def simulated_topics(spec: ExperimentSpec, graph: SocialGraph) -> tuple[int, ...]:
    if spec.topic is None:
        return tuple(range(graph.z))
    if not 0 <= spec.topic < graph.z:
        raise ValueError(f"topic {spec.topic} out of range [0, {graph.z})")
    return (spec.topic,)


def build_seeds(spec: ExperimentSpec, graph: SocialGraph) -> list[SeedAssignment]:
    if spec.seeds is not None:
        with open(spec.seeds, encoding="utf-8") as fh:
            return load_seeds(fh, graph)
    if spec.seed_rule is None:
        return []
    kind, k = parse_seed_rule(spec.seed_rule)
    if k > graph.n:
        raise ValueError(f"cannot pick {k} seeds from {graph.n} nodes")
    rng = derive_rng(spec.master_seed, AUX, SEED_STREAM)
    seeds = []
    for j in simulated_topics(spec, graph):
        if kind == "random":
            nodes = sorted(rng.sample(range(graph.n), k))
        else:
            nodes = sorted(sorted(range(graph.n), key=lambda i: (-graph.out_degree(i), i))[:k])
        for v in nodes:
            stance = rng.choice(KNOWN_STANCES) if spec.seed_stance == "mixed" else float(spec.seed_stance)
            seeds.append(SeedAssignment(v, j, stance))
    return seeds


def load_edge_rates(path: str, graph: SocialGraph) -> dict[tuple[int, int], float]:
    rates = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].split()
            if not line:
                continue
            if len(line) != 3:
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v rate'")
            u, v, r = line
            rate = float(r)
            if rate < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative rate")
            rates[(graph.index_of(u), graph.index_of(v))] = rate
    return rates


@dataclass
class ReplicaOutput:
    index: int
    traces: list[RoundTrace]
    final: dict[int, dict[str, float]]  # topic -> node -> stance
    # round -> topic -> node -> stance, for per-round scoring
    per_round: list[dict[int, list[float]]]


@dataclass
class Experiment:
    """A resolved spec: graph and seeds loaded, ready to run replicas."""

    spec: ExperimentSpec
    graph: SocialGraph
    seeds: list[SeedAssignment]
    topics: tuple[int, ...]
    edge_rates: dict[tuple[int, int], float] | None = None

    @classmethod
    def resolve(cls, spec: ExperimentSpec) -> "Experiment":
        graph = build_graph(spec)
        topics = simulated_topics(spec, graph)
        seeds = build_seeds(spec, graph)
        rates = load_edge_rates(spec.edge_rates, graph) if spec.edge_rates else None
        return cls(spec, graph, seeds, topics, rates)

    def run_replica(self, index: int) -> ReplicaOutput:
        rng = derive_replica_rng(self.spec.master_seed, index)
        names = self.graph.node_ids
        if self.spec.model == "dmnai":
            topic = self.topics[0] if len(self.topics) == 1 else None
            res = run_simulation(self.graph, self.seeds, topic, self.spec.config, rng,
                                 self.edge_rates, record_states=True)
            final = {j: res.state.topic_view(self.graph, j) for j in self.topics}
            per_round = [{j: list(col) for j, col in snap.items()} for snap in res.snapshots]
            return ReplicaOutput(index, res.traces, final, per_round)
        j = self.topics[0]
        cfg = ICConfig(self.spec.ic_probability, master_seed=self.spec.master_seed)
        nodes = [s.node for s in self.seeds if s.topic == j]
        rounds = run_ic(self.graph, nodes, cfg, rng)
        traces = ic_traces(rounds, self.graph.n, j)
        per_round = [{j: ic_final_stances(rounds[: r + 1], self.graph.n)} for r in range(len(rounds))]
        final = {j: dict(zip(names, per_round[-1][j]))}
        return ReplicaOutput(index, traces, final, per_round)

    def run(self, workers: int = 1) -> list[ReplicaOutput]:
        indices = range(self.spec.replicas)
        if workers <= 1:
            return [self.run_replica(i) for i in indices]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.run_replica, indices))


def aggregate(outputs: list[ReplicaOutput]) -> list[list]:
    """Mean per (topic, round) over replicas; shorter traces carry their
    last record forward."""
    by_topic: dict[int, list[list[RoundTrace]]] = {}
    for out in outputs:
        per_topic: dict[int, list[RoundTrace]] = {}
        for t in out.traces:
            per_topic.setdefault(t.topic, []).append(t)
        for j, ts in per_topic.items():
            by_topic.setdefault(j, []).append(ts)
    rows = []
    for j in sorted(by_topic):
        runs = by_topic[j]
        length = max(len(r) for r in runs)
        for r in range(length):
            recs = [run[min(r, len(run) - 1)] for run in runs]
            means = [sum(rec.csv_row()[c] for rec in recs) / len(recs) for c in range(1, 8)]
            rows.append([r, *means, j])
    return rows


def aggregate_csv(outputs: list[ReplicaOutput], provenance: dict) -> str:
    lines = ["# config=" + json.dumps(provenance, sort_keys=True, separators=(",", ":")), ",".join(CSV_COLUMNS)]
    for row in aggregate(outputs):
        lines.append(",".join(f"{x:.6f}" if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_outputs(exp: Experiment, outputs: list[ReplicaOutput], out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    spec_doc = exp.spec.to_dict()
    written = []
    for out in outputs:
        prov = {"spec": spec_doc, "replica": out.index}
        stem = os.path.join(out_dir, f"replica_{out.index:03d}")
        doc = {
            "spec": spec_doc,
            "replica": out.index,
            "model": exp.spec.model,
            "master_seed": exp.spec.master_seed,
            "topics": list(exp.topics),
            "rounds": [t.to_dict() for t in out.traces],
            "final_state": {str(j): [col[name] for name in exp.graph.node_ids] for j, col in out.final.items()},
            "nodes": list(exp.graph.node_ids),
        }
        comment = "# config=" + json.dumps(prov, sort_keys=True, separators=(",", ":")) + "\n"
        files = {
            stem + ".json": canonical_json(doc),
            stem + ".csv": traces_to_csv(out.traces, prov),
            stem + "_final.csv": reference_csv(out.final, comment),
        }
        for path, text in files.items():
            _write(path, text)
            written.append(path)
    path = os.path.join(out_dir, "aggregate.csv")
    _write(path, aggregate_csv(outputs, {"spec": spec_doc}))
    written.append(path)
    return written


def spec_from_output(path: str) -> ExperimentSpec:
    """Recover the embedded spec from any file written by :func:`write_outputs`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        doc = json.loads(text)
    else:
        first = text.split("\n", 1)[0]
        if not first.startswith("# config="):
            raise ValueError(f"{path} carries no embedded config")
        doc = json.loads(first[len("# config="):])
    return ExperimentSpec.from_dict(doc["spec"])


def final_stances_from_file(path: str) -> tuple[list[str], dict[int, dict[str, float]]]:
    """Read final stances from a trace JSON or a reference-format CSV."""
    from .metrics import load_reference

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        doc = json.loads(text)
        nodes = doc["nodes"]
        return nodes, {int(j): dict(zip(nodes, col)) for j, col in doc["final_state"].items()}
    ref = load_reference(text)
    nodes = list(dict.fromkeys(node for node, _ in ref.stances))
    return nodes, {j: ref.for_topic(j, nodes) for j in sorted(ref.topics())}


def with_model(spec: ExperimentSpec, model: str) -> ExperimentSpec:
    return replace(spec, model=model)
