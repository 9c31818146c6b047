"""Piecewise-constant probability curves and windowed surprise measures.

A curve is a right-continuous step function on a closed time domain
``[start, end]``: the value on ``[x_i, x_{i+1})`` is ``values[i]`` and the
last piece is closed at ``end``.  Belief curves, their pointwise medians,
and every surprise statistic in this package are built on this one type.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CurveError",
    "BeliefUpdate",
    "StepCurve",
    "belief_curve",
    "median_curve",
    "window_surprise",
    "total_surprise",
    "half_surprises",
    "end_surprise",
    "peak_window",
    "END_WINDOW_SECONDS",
    "PEAK_GRID_SECONDS",
]

# 2.5-minute window used for both the peak search and the end-of-game window.
END_WINDOW_SECONDS = 150.0
PEAK_GRID_SECONDS = 0.5


class CurveError(ValueError):
    """Validation failure; ``code`` is a stable machine-readable token."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _check_probability(p: float, code: str = "probability_out_of_range") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise CurveError(code, f"probability {p!r} outside [0, 1]")
    return p


@dataclass(frozen=True)
class BeliefUpdate:
    """One reported belief: blue-team win probability ``p`` at time ``t``."""

    t: float
    p: float


@dataclass(frozen=True)
class StepCurve:
    """Canonical step function: no two adjacent pieces share a value.

    ``breakpoints`` are strictly increasing and strictly inside
    ``(start, end)``; ``values`` has exactly one more entry.
    """

    start: float
    end: float
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.end > self.start:
            raise CurveError("empty_domain", f"domain [{self.start}, {self.end}] has no extent")
        if len(self.values) != len(self.breakpoints) + 1:
            raise CurveError(
                "piece_mismatch",
                f"{len(self.breakpoints)} breakpoints need {len(self.breakpoints) + 1} values,"
                f" got {len(self.values)}",
            )
        prev = self.start
        for x in self.breakpoints:
            if not prev < x:
                raise CurveError("breakpoints_not_increasing", f"breakpoint {x} after {prev}")
            prev = x
        if self.breakpoints and not self.breakpoints[-1] < self.end:
            raise CurveError(
                "breakpoint_outside_domain",
                f"breakpoint {self.breakpoints[-1]} not inside ({self.start}, {self.end})",
            )
        for v in self.values:
            _check_probability(v)
        for a, b in zip(self.values, self.values[1:]):
            if a == b:
                raise CurveError("not_canonical", f"adjacent pieces share value {a}")

    @classmethod
    def from_steps(
        cls,
        start: float,
        end: float,
        breakpoints: Sequence[float],
        values: Sequence[float],
    ) -> "StepCurve":
        """Build a curve, merging adjacent equal-valued pieces to canonical form."""
        if len(values) != len(breakpoints) + 1:
            raise CurveError(
                "piece_mismatch",
                f"{len(breakpoints)} breakpoints need {len(breakpoints) + 1} values",
            )
        cuts: list[float] = []
        vals: list[float] = [float(values[0])]
        for x, v in zip(breakpoints, values[1:]):
            v = float(v)
            if v != vals[-1]:
                cuts.append(float(x))
                vals.append(v)
        return cls(float(start), float(end), tuple(cuts), tuple(vals))

    @property
    def duration(self) -> float:
        return self.end - self.start

    def value_at(self, t: float) -> float:
        """Value of the piece containing ``t``; a breakpoint starts its new piece."""
        if not (self.start <= t <= self.end):
            raise CurveError("outside_domain", f"t={t} outside [{self.start}, {self.end}]")
        return self.values[bisect.bisect_right(self.breakpoints, t)]

    def jumps(self) -> tuple[float, ...]:
        """|value change| at each breakpoint, in breakpoint order."""
        return tuple(abs(b - a) for a, b in zip(self.values, self.values[1:]))

    def shifted(self, new_start: float) -> "StepCurve":
        """Same shape translated so the domain begins at ``new_start``."""
        d = new_start - self.start
        return StepCurve(
            new_start, self.end + d, tuple(x + d for x in self.breakpoints), self.values
        )


def belief_curve(
    updates: Iterable[BeliefUpdate | tuple[float, float]], duration: float
) -> StepCurve:
    """Turn a subject's report sequence into a step curve on ``[0, duration]``.

    The first report is the prior and must sit at t=0; later reports must be
    strictly increasing in time.  A report exactly at ``duration`` would
    occupy a zero-width piece and is dropped.
    """
    if duration <= 0:
        raise CurveError("empty_domain", f"duration {duration} must be positive")
    pairs: list[tuple[float, float]] = []
    for u in updates:
        if isinstance(u, BeliefUpdate):
            pairs.append((float(u.t), float(u.p)))
        else:
            t, p = u
            pairs.append((float(t), float(p)))
    if not pairs:
        raise CurveError("empty_updates", "at least the prior report is required")
    if pairs[0][0] != 0.0:
        raise CurveError("prior_not_at_start", f"first report at t={pairs[0][0]}, expected 0")
    prev = -math.inf
    for t, p in pairs:
        if t <= prev:
            raise CurveError("non_monotonic_time", f"report at t={t} does not follow t={prev}")
        if t > duration:
            raise CurveError("outside_domain", f"report at t={t} beyond duration {duration}")
        _check_probability(p)
        prev = t
    pairs = [(t, p) for t, p in pairs if t < duration]
    return StepCurve.from_steps(
        0.0, float(duration), [t for t, _ in pairs[1:]], [p for _, p in pairs]
    )


def median_curve(curves: Sequence[StepCurve]) -> StepCurve:
    """Pointwise sample median of curves sharing one domain.

    On every piece of the union breakpoint grid the value is the sample
    median of the member values there (mean of the two central values for
    an even count).  At an exact breakpoint the post-jump member values are
    used, matching right-continuous evaluation.
    """
    if not curves:
        raise CurveError("empty_curve_set", "median of zero curves is undefined")
    start, end = curves[0].start, curves[0].end
    for c in curves[1:]:
        if c.start != start or c.end != end:
            raise CurveError(
                "mismatched_domains",
                f"curve domain [{c.start}, {c.end}] differs from [{start}, {end}]",
            )
    cuts = sorted({x for c in curves for x in c.breakpoints})
    probes = np.array([start] + cuts, dtype=float)
    rows = []
    for c in curves:
        idx = np.searchsorted(np.asarray(c.breakpoints, dtype=float), probes, side="right")
        rows.append(np.asarray(c.values, dtype=float)[idx])
    med = np.median(np.vstack(rows), axis=0)
    return StepCurve.from_steps(start, end, cuts, med.tolist())


def _window_indices(curve: StepCurve, a: float, b: float) -> tuple[int, int]:
    if not a < b:
        raise CurveError("degenerate_window", f"window ({a}, {b}] is empty")
    if a < curve.start or b > curve.end:
        raise CurveError(
            "outside_domain", f"window ({a}, {b}] outside [{curve.start}, {curve.end}]"
        )
    lo = bisect.bisect_right(curve.breakpoints, a)
    hi = bisect.bisect_right(curve.breakpoints, b)
    return lo, hi


def window_surprise(curve: StepCurve, window: tuple[float, float]) -> float:
    """Sum of |value change| at breakpoints inside the half-open window ``(a, b]``."""
    a, b = window
    lo, hi = _window_indices(curve, a, b)
    return math.fsum(curve.jumps()[lo:hi])


def total_surprise(curve: StepCurve) -> float:
    """Whole-domain surprise: every breakpoint counts."""
    return math.fsum(curve.jumps())


def half_surprises(curve: StepCurve) -> tuple[float, float]:
    """Surprise split at the midpoint: windows ``(start, mid]`` and ``(mid, end]``.

    A jump exactly at the midpoint belongs to the first half.
    """
    mid = (curve.start + curve.end) / 2.0
    return window_surprise(curve, (curve.start, mid)), window_surprise(curve, (mid, curve.end))


def end_surprise(curve: StepCurve, width: float = END_WINDOW_SECONDS) -> float:
    """Surprise in the final ``width`` seconds, clamped to the domain start."""
    a = max(curve.start, curve.end - width)
    return window_surprise(curve, (a, curve.end))


def peak_window(
    curve: StepCurve,
    width: float = END_WINDOW_SECONDS,
    grid_step: float = PEAK_GRID_SECONDS,
) -> tuple[float, float]:
    """Most surprising fixed-width window: ``(center, surprise)`` at the argmax.

    Window centers run on a uniform grid over
    ``[start + width/2, end - width/2]``; each candidate window is
    ``(c - width/2, c + width/2]``.  Ties resolve to the earliest center.
    Prefix sums are accumulated exactly (rationals), so equal-valued windows
    compare equal and the argmax is deterministic.

    Domains shorter than ``width`` fall back to the whole domain: the
    midpoint is reported with the total surprise.
    """
    if width <= 0 or grid_step <= 0:
        raise CurveError("invalid_window_width", "width and grid_step must be positive")
    if curve.duration < width:
        return (curve.start + curve.end) / 2.0, total_surprise(curve)
    half = width / 2.0
    first = curve.start + half
    count = int(math.floor((curve.duration - width) / grid_step + 1e-9)) + 1

    prefix = [Fraction(0)]
    for j in curve.jumps():
        prefix.append(prefix[-1] + Fraction(j))
    breaks = curve.breakpoints

    best_value = Fraction(-1)
    best_center = first
    for i in range(count):
        c = first + i * grid_step
        lo = bisect.bisect_right(breaks, c - half)
        hi = bisect.bisect_right(breaks, c + half)
        v = prefix[hi] - prefix[lo]
        if v > best_value:
            best_value = v
            best_center = c
    return best_center, float(best_value)
