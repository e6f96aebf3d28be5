"""Influence kernel: similarity, transfer weight, stance factor and the
composed influence probability between two users on one topic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .graph import NEUTRAL, UNKNOWN

LITERAL = "literal"
COMPLEMENT = "complement"


@dataclass(frozen=True)
class KernelParams:
    """Free parameters of the influence probability.

    ``transfer_interpretation`` selects between multiplying by ``1 - W``
    (``literal``, the formula as printed) and by ``W`` (``complement``).
    """

    lambda_: float = 0.5
    mu: float = 0.25
    rate: float = 1.0
    horizon: float = 1.0
    transfer_interpretation: str = LITERAL

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lambda_}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.rate < 0:
            raise ValueError(f"rate must be non-negative, got {self.rate}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.transfer_interpretation not in (LITERAL, COMPLEMENT):
            raise ValueError(f"unknown transfer interpretation {self.transfer_interpretation!r}")


def attitude_similarity(t_u: Sequence[float], t_v: Sequence[float]) -> float:
    """sqrt(z) / (sqrt(z) + ||t_u - t_v||). Unknown entries count at face value."""
    z = len(t_u)
    if z != len(t_v):
        raise ValueError(f"stance vectors differ in length ({z} vs {len(t_v)})")
    if z == 0:
        raise ValueError("stance vectors must have at least one topic")
    if z == 1:
        dist = abs(t_u[0] - t_v[0])
    else:
        dist = math.sqrt(sum((a - b) * (a - b) for a, b in zip(t_u, t_v)))
    root = math.sqrt(z)
    return root / (root + dist)


def transfer_weight(rate: float, horizon: float) -> float:
    if rate < 0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    return -math.expm1(-rate * horizon)


def stance_factor(t_v: float, t_u: float, params: KernelParams) -> float:
    # case order matters: the first matching branch wins
    if t_v == UNKNOWN or t_v == NEUTRAL or t_v == t_u:
        return 1.0
    if abs(t_v - t_u) <= 0.5:
        return params.lambda_
    return params.mu


def influence_probability(
    t_u: Sequence[float],
    t_v: Sequence[float],
    topic: int,
    params: KernelParams,
    rate: float | None = None,
) -> float:
    """Influence of ``u`` on ``v``'s stance towards ``topic``.

    ``rate`` overrides ``params.rate`` for this pair.
    """
    if not 0 <= topic < len(t_v):
        raise IndexError(f"topic {topic} out of range")
    w = transfer_weight(params.rate if rate is None else rate, params.horizon)
    carry = 1.0 - w if params.transfer_interpretation == LITERAL else w
    p = carry * attitude_similarity(t_u, t_v) * stance_factor(t_v[topic], t_u[topic], params)
    assert 0.0 <= p <= 1.0, p
    return p
