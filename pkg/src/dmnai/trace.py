"""Per-round trace records and their CSV/JSON encodings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

CSV_COLUMNS = (
    "round",
    "affected_total",
    "new_adjacent",
    "new_nonadjacent",
    "count_stance_0",
    "count_stance_0.5",
    "count_stance_1",
    "count_unknown",
    "topic",
)


@dataclass(frozen=True)
class RoundTrace:
    """State of one topic at the end of one round.

    Round 0 is the seeded initial state.  ``new_*`` count activations
    (unknown to known) and ``*_updates`` count every stance change.
    """

    round: int
    topic: int
    count_0: int
    count_05: int
    count_1: int
    count_unknown: int
    new_adjacent: int = 0
    new_nonadjacent: int = 0
    adjacent_updates: int = 0
    nonadjacent_updates: int = 0

    @property
    def affected_total(self) -> int:
        return self.count_0 + self.count_05 + self.count_1

    @property
    def new_affected(self) -> int:
        return self.new_adjacent + self.new_nonadjacent

    @property
    def n(self) -> int:
        return self.affected_total + self.count_unknown

    def csv_row(self) -> list:
        return [
            self.round,
            self.affected_total,
            self.new_adjacent,
            self.new_nonadjacent,
            self.count_0,
            self.count_05,
            self.count_1,
            self.count_unknown,
            self.topic,
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["affected_total"] = self.affected_total
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RoundTrace":
        d = dict(d)
        d.pop("affected_total", None)
        return cls(**d)


def canonical_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def traces_to_csv(traces: list[RoundTrace], provenance: dict | None = None) -> str:
    buf = io.StringIO()
    if provenance is not None:
        buf.write("# config=" + json.dumps(provenance, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t in traces:
        w.writerow(t.csv_row())
    return buf.getvalue()


def read_csv_provenance(text: str) -> dict | None:
    first = text.split("\n", 1)[0]
    if first.startswith("# config="):
        return json.loads(first[len("# config="):])
    return None
