"""Perseverance updates and the stance-transition rule applied when one
user receives information from another."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import KNOWN_STANCES, NEUTRAL, UNKNOWN, is_stance


@dataclass(frozen=True)
class InfluenceEvent:
    source: int
    source_stance: float
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if not is_stance(self.source_stance):
            raise ValueError(f"source stance {self.source_stance} off the grid")


def agreement_indicator(t_u: float, t_v: float) -> int:
    """1 when both stances are identical, else 0."""
    return 1 if t_u == t_v else 0


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def update_perseverance(a: float, events: Sequence[InfluenceEvent], t_v: float) -> float:
    """Lower ``a`` for conflicting information, raise it for agreeing
    information, averaged over the events and clamped to [0, 1]."""
    if not events:
        raise ValueError("perseverance update needs at least one event")
    total = 0.0
    for ev in events:
        t_u = ev.source_stance
        total += abs(t_u - t_v) * ev.probability - agreement_indicator(t_u, t_v) * ev.probability
    return _clamp01(a - total / len(events))


def perseverance_step(a: float, t_u: float, t_v: float, p: float) -> float:
    """Single-event form of :func:`update_perseverance`, without allocation."""
    if t_u == t_v:
        return _clamp01(a + p)
    return _clamp01(a - abs(t_u - t_v) * p)


def att_update(t_v: float, t_u: float, p: float, a: float, exposed_before: bool | None = None) -> float:
    """New stance of ``v`` after receiving ``u``'s stance with influence ``p``.

    First contact (``t_v`` unknown or neutral unless ``exposed_before`` says
    otherwise) adopts ``t_u`` when ``p >= a`` and falls back to neutral.
    Later contacts move half a step towards ``t_u`` when ``p >= a``.
    """
    if t_u not in KNOWN_STANCES:
        raise ValueError(f"influencer stance must be known, got {t_u}")
    if not is_stance(t_v):
        raise ValueError(f"stance {t_v} off the grid")
    if exposed_before is None:
        exposed_before = t_v not in (UNKNOWN, NEUTRAL)
    elif exposed_before and t_v == UNKNOWN:
        raise ValueError("an unknown stance cannot have been exposed before")

    if not exposed_before:
        return t_u if p >= a else NEUTRAL

    if t_u == t_v or p < a:
        return t_v
    new = t_v + 0.5 if t_u > t_v else t_v - 0.5
    assert new in KNOWN_STANCES, (t_v, t_u, new)
    return new
