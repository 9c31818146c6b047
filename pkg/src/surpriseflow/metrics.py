"""Per-game derived metrics: surprise statistics, auxiliary shape factors,
and the win/lose/neutral preference category.

All statistics are computed on the pointwise median of the participating
subjects' belief curves, using game-relative seconds.  Minutes appear only
in the exported summary fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .curves import (
    END_WINDOW_SECONDS,
    PEAK_GRID_SECONDS,
    CurveError,
    StepCurve,
    end_surprise,
    half_surprises,
    median_curve,
    peak_window,
)

__all__ = [
    "MetricsError",
    "SubjectRecord",
    "GameRecord",
    "SurpriseSummary",
    "comeback_size",
    "leader_changes",
    "rubbish_time",
    "summarize_game",
    "RUBBISH_THRESHOLD",
]

RUBBISH_THRESHOLD = 0.7
PREFERENCES = ("blue", "red", "neutral")
CATEGORIES = ("win", "lose", "neutral")


class MetricsError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class SubjectRecord:
    """One participant: team preference, belief curve, and post-game rating."""

    preference: str = "neutral"
    curve: StepCurve | None = None
    rating: float | None = None


@dataclass(frozen=True)
class GameRecord:
    """A finished game with its participating subjects.

    Curves live on game-relative ``[0, duration]`` seconds; outcome is 1
    iff the blue team won.  Wall-clock start/end are audit metadata only.
    """

    game_id: str
    blue_team: str
    red_team: str
    duration: float
    outcome: int
    subjects: Mapping[str, SubjectRecord] = field(default_factory=dict)
    wall_start: float | None = None
    wall_end: float | None = None

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise MetricsError("empty_domain", f"duration {self.duration} must be positive")
        if self.outcome not in (0, 1):
            raise MetricsError("invalid_outcome", f"outcome must be 0 or 1, got {self.outcome!r}")
        for sid, rec in self.subjects.items():
            if rec.preference not in PREFERENCES:
                raise MetricsError("invalid_preference", f"{sid}: {rec.preference!r}")

    def participant_curves(self) -> dict[str, StepCurve]:
        return {sid: rec.curve for sid, rec in self.subjects.items() if rec.curve is not None}


@dataclass(frozen=True)
class SurpriseSummary:
    """One analysis row per game; the regression suites consume these.

    ``overall_surprise`` is defined as the sum of the two half surprises,
    so the half-split identity holds exactly.
    """

    game_id: str
    n_subjects: int
    avg_rating: float
    duration_min: float
    peak_time_min: float
    surp_first_half: float
    surp_second_half: float
    peak_surprise: float
    end_surprise: float
    overall_surprise: float
    comeback_size: float
    leader_changes: int
    rubbish_time: float
    category: str


def winner_curve_values(median: StepCurve, outcome: int) -> tuple[float, ...]:
    """Piece values of the eventual winner's probability curve."""
    if outcome == 1:
        return median.values
    return tuple(1.0 - v for v in median.values)


def comeback_size(median: StepCurve, outcome: int) -> float:
    """One minus the winner's minimum in-game win probability."""
    return 1.0 - min(winner_curve_values(median, outcome))


def leader_changes(median: StepCurve) -> int:
    """Number of flips of the >50% team.

    A piece at exactly 0.5 has no leader and carries no state: a plateau
    that returns to the same leader does not count.
    """
    count = 0
    current: str | None = None
    for v in median.values:
        leader = "blue" if v > 0.5 else "red" if v < 0.5 else None
        if leader is None:
            continue
        if current is not None and leader != current:
            count += 1
        current = leader
    return count


def rubbish_time(median: StepCurve, outcome: int, threshold: float = RUBBISH_THRESHOLD) -> float:
    """Fraction of the game after the winner's probability last sat below
    ``threshold``: the settled stretch before the end.

    Returns 1.0 when the winner never drops below the threshold and 0.0
    when it stays below until the final instant.
    """
    if not 0.5 < threshold <= 1.0:
        raise MetricsError("invalid_threshold", f"threshold {threshold} outside (0.5, 1]")
    values = winner_curve_values(median, outcome)
    edges = (median.start,) + median.breakpoints + (median.end,)
    last_below = median.start
    for i in range(len(values) - 1, -1, -1):
        if values[i] < threshold:
            last_below = edges[i + 1]
            break
    return (median.end - last_below) / median.duration


def summarize_game(
    record: GameRecord,
    rubbish_threshold: float = RUBBISH_THRESHOLD,
    end_window: float = END_WINDOW_SECONDS,
    peak_width: float = END_WINDOW_SECONDS,
    peak_grid: float = PEAK_GRID_SECONDS,
) -> SurpriseSummary:
    """Reduce one finished game to its analysis row.

    The category is ``win`` (``lose``) when the winning (losing) team was
    preferred by a strict majority of the game's subjects, ``neutral``
    otherwise; neutral preferences stay in the denominator.
    """
    curves = record.participant_curves()
    if not curves:
        raise MetricsError("no_participants", f"game {record.game_id} has no belief curves")
    ratings = [rec.rating for rec in record.subjects.values() if rec.rating is not None]
    if not ratings:
        raise MetricsError("no_ratings", f"game {record.game_id} has no rated subjects")
    for sid, curve in curves.items():
        if (curve.start, curve.end) != (0.0, record.duration):
            raise CurveError(
                "mismatched_domains",
                f"subject {sid} curve covers [{curve.start}, {curve.end}],"
                f" game lasts {record.duration}",
            )

    median = median_curve(list(curves.values()))
    surp1, surp2 = half_surprises(median)
    peak_time, peak_surp = peak_window(median, width=peak_width, grid_step=peak_grid)

    counts = {"blue": 0, "red": 0}
    for rec in record.subjects.values():
        if rec.preference in counts:
            counts[rec.preference] += 1
    majority_side = None
    for side, c in counts.items():
        if 2 * c > len(record.subjects):
            majority_side = side
    winning_side = "blue" if record.outcome == 1 else "red"
    if majority_side is None:
        category = "neutral"
    elif majority_side == winning_side:
        category = "win"
    else:
        category = "lose"

    return SurpriseSummary(
        game_id=record.game_id,
        n_subjects=len(curves),
        avg_rating=math.fsum(ratings) / len(ratings),
        duration_min=record.duration / 60.0,
        peak_time_min=peak_time / 60.0,
        surp_first_half=surp1,
        surp_second_half=surp2,
        peak_surprise=peak_surp,
        end_surprise=end_surprise(median, width=end_window),
        overall_surprise=surp1 + surp2,
        comeback_size=comeback_size(median, record.outcome),
        leader_changes=leader_changes(median),
        rubbish_time=rubbish_time(median, record.outcome, rubbish_threshold),
        category=category,
    )
