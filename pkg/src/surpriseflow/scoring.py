"""Quadratic scoring of belief curves and the budget-fixed reward rule.

The accuracy score of a curve is the time average of ``1 - (p(t) - o)^2``
over the game, computed exactly piece by piece.  Rewards are a
mean-centered affine transform of scores: subject ``i`` receives
``(1 + s_i - mean(s)) * B / M``, which sums to the budget ``B`` and is
non-negative for scores in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .curves import CurveError, StepCurve

__all__ = [
    "ScoringError",
    "Settlement",
    "quadratic_score",
    "settle_rewards",
    "expected_report_score",
    "round_payouts_to_cents",
]


class ScoringError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Settlement:
    """Per-game payout: scores and budget-fixed rewards keyed by subject id."""

    game_id: str
    budget: float
    scores: dict[str, float]
    rewards: dict[str, float]
    mean_score: float


def quadratic_score(
    curve: StepCurve, outcome: int, span: tuple[float, float] | None = None
) -> float:
    """Duration-averaged quadratic score of a belief curve against the outcome.

    Exact closed form: each piece of width w contributes
    ``(1 - (p - o)^2) * w``.  ``span`` optionally pins the expected game
    domain; a curve that does not cover it is rejected.
    """
    if outcome not in (0, 1):
        raise ScoringError("invalid_outcome", f"outcome must be 0 or 1, got {outcome!r}")
    if span is not None and (curve.start, curve.end) != (float(span[0]), float(span[1])):
        raise ScoringError(
            "incomplete_curve",
            f"curve covers [{curve.start}, {curve.end}], game spans [{span[0]}, {span[1]}]",
        )
    edges = (curve.start,) + curve.breakpoints + (curve.end,)
    acc = math.fsum(
        (1.0 - (p - outcome) ** 2) * (b - a)
        for p, a, b in zip(curve.values, edges, edges[1:])
    )
    return acc / curve.duration


def settle_rewards(scores: Sequence[float], budget: float) -> list[float]:
    """Budget-fixed rewards: ``(1 + s_i - mean(s)) * budget / len(scores)``."""
    if not scores:
        raise ScoringError("empty_scores", "cannot settle a game with no scored subjects")
    if budget < 0:
        raise ScoringError("negative_budget", f"budget {budget} must be >= 0")
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ScoringError("score_out_of_range", f"score {s} outside [0, 1]")
    m = len(scores)
    mean = math.fsum(scores) / m
    return [(1.0 + s - mean) * budget / m for s in scores]


def expected_report_score(p: float, q: float) -> float:
    """Expected quadratic score of reporting ``p`` under true belief ``q``.

    ``q*(1-(p-1)^2) + (1-q)*(1-p^2)``; maximized at p = q, which is what
    makes the rule incentive compatible.
    """
    for v in (p, q):
        if not 0.0 <= v <= 1.0:
            raise CurveError("probability_out_of_range", f"probability {v} outside [0, 1]")
    return q * (1.0 - (p - 1.0) ** 2) + (1.0 - q) * (1.0 - p * p)


def round_payouts_to_cents(rewards: Sequence[float], budget: float) -> list[float]:
    """Round rewards to 0.01 currency units, preserving the budget total.

    Largest-remainder rule: floor everything to cents, then hand the
    leftover cents to the largest fractional remainders (earliest index on
    ties).  The rounded payouts sum to the budget rounded to cents.
    """
    if not rewards:
        return []
    target = round(budget * 100)
    floors = [math.floor(r * 100 + 1e-9) for r in rewards]
    remainders = [r * 100 - f for r, f in zip(rewards, floors)]
    shortfall = target - sum(floors)
    cents = list(floors)
    if shortfall >= 0:
        order = sorted(range(len(rewards)), key=lambda i: (-remainders[i], i))
        for k in range(shortfall):
            cents[order[k % len(rewards)]] += 1
    else:
        order = sorted(range(len(rewards)), key=lambda i: (remainders[i], i))
        for k in range(-shortfall):
            cents[order[k % len(rewards)]] -= 1
    return [c / 100.0 for c in cents]
