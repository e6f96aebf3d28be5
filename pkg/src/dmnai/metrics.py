"""Scoring simulated stances against a reference, and curve extraction."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

from .graph import UNKNOWN, GraphFormatError, is_stance, parse_stance
from .trace import RoundTrace


class UniverseMismatch(ValueError):
    """The simulated and reference node sets differ."""


@dataclass
class ReferenceTrace:
    """Final stances per ``(node_id, topic)``; absent pairs are unknown."""

    stances: dict[tuple[str, int], float] = field(default_factory=dict)

    def for_topic(self, topic: int, universe: Sequence[str]) -> dict[str, float]:
        names = set(universe)
        stray = sorted({node for node, _ in self.stances} - names)
        if stray:
            raise UniverseMismatch(f"reference mentions nodes outside the graph: {stray[:5]}")
        return {name: self.stances.get((name, topic), UNKNOWN) for name in universe}

    def topics(self) -> set[int]:
        return {t for _, t in self.stances}


def load_reference(stream: TextIO | str) -> ReferenceTrace:
    text = stream if isinstance(stream, str) else stream.read()
    rows = csv.reader(line for line in io.StringIO(text) if not line.startswith("#"))
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != ["node", "topic", "stance"]:
        raise GraphFormatError("reference file must start with header 'node,topic,stance'")
    ref = ReferenceTrace()
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise GraphFormatError(f"reference row {lineno}: expected 3 fields")
        node, topic, stance = (x.strip() for x in row)
        value = parse_stance(stance)
        if not is_stance(value):
            raise GraphFormatError(f"reference row {lineno}: stance {stance!r} off the grid")
        try:
            key = (node, int(topic))
        except ValueError:
            raise GraphFormatError(f"reference row {lineno}: bad topic {topic!r}") from None
        if key in ref.stances:
            raise GraphFormatError(f"reference row {lineno}: duplicate entry for {key}")
        ref.stances[key] = value
    return ref


def reference_csv(columns: Mapping[int, Mapping[str, float]], provenance: str | None = None) -> str:
    """Encode ``topic -> node -> stance`` in the reference format."""
    buf = io.StringIO()
    if provenance:
        buf.write(provenance)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "topic", "stance"])
    for topic in sorted(columns):
        for node, stance in columns[topic].items():
            w.writerow([node, topic, f"{stance:g}"])
    return buf.getvalue()


def _aligned(sim: Mapping[str, float], ref: Mapping[str, float]):
    if set(sim) != set(ref):
        raise UniverseMismatch(f"node universes differ ({len(sim)} vs {len(ref)} nodes)")
    if not sim:
        raise UniverseMismatch("empty node universe")
    return [(sim[k], ref[k]) for k in sim]


def range_accuracy(sim: Mapping[str, float], ref: Mapping[str, float]) -> float:
    """Share of nodes whose affected status (known vs unknown) matches."""
    pairs = _aligned(sim, ref)
    hits = sum((s != UNKNOWN) == (r != UNKNOWN) for s, r in pairs)
    return hits / len(pairs)


def stance_accuracy(sim: Mapping[str, float], ref: Mapping[str, float]) -> float:
    """Share of nodes whose exact stance matches."""
    pairs = _aligned(sim, ref)
    return sum(s == r for s, r in pairs) / len(pairs)


METRICS = {"range": range_accuracy, "stance": stance_accuracy}

AFFECTED_CUMULATIVE = "affected_cumulative"
STANCE_DISTRIBUTION = "stance_distribution"


def curve_extract(trace: Sequence[RoundTrace], kind: str, topic: int | None = None) -> list[tuple]:
    """Plot-ready rows from a trace.

    ``affected_cumulative`` gives ``(round, affected)``;
    ``stance_distribution`` gives ``(round, n_0, n_0.5, n_1, n_unknown)``.
    """
    if not trace:
        raise ValueError("empty trace")
    if topic is None:
        topic = trace[0].topic
    rows = [t for t in trace if t.topic == topic]
    if kind == AFFECTED_CUMULATIVE:
        return [(t.round, t.affected_total) for t in rows]
    if kind == STANCE_DISTRIBUTION:
        return [(t.round, t.count_0, t.count_05, t.count_1, t.count_unknown) for t in rows]
    raise ValueError(f"unknown curve kind {kind!r}")


CURVE_HEADERS = {
    AFFECTED_CUMULATIVE: ("round", "affected"),
    STANCE_DISTRIBUTION: ("round", "stance_0", "stance_0.5", "stance_1", "unknown"),
}


def curve_csv(rows: list[tuple], kind: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADERS[kind])
    w.writerows(rows)
    return buf.getvalue()
