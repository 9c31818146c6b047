"""Per-game summary statistics and the auxiliary curve-shape factors."""

from __future__ import annotations

import numpy as np
import pytest

from surpriseflow.curves import StepCurve, belief_curve
from surpriseflow.metrics import (
    GameRecord,
    MetricsError,
    SubjectRecord,
    comeback_size,
    leader_changes,
    rubbish_time,
    summarize_game,
)


def curve(values, duration=100.0):
    n = len(values)
    cuts = [duration * i / n for i in range(1, n)]
    return StepCurve.from_steps(0.0, duration, cuts, list(values))


def three_subject_record(**kw):
    """The median of these three curves steps 0.5 -> 0.7 -> 0.5."""
    subjects = {
        "a": SubjectRecord("blue", belief_curve([(0, 0.3), (10, 0.7)], 20), 6),
        "b": SubjectRecord("neutral", belief_curve([(0, 0.5)], 20), 5),
        "c": SubjectRecord("red", belief_curve([(0, 0.9), (15, 0.2)], 20), 7),
    }
    base = dict(
        game_id="g1",
        blue_team="G2",
        red_team="SN",
        duration=20.0,
        outcome=1,
        subjects=subjects,
    )
    base.update(kw)
    return GameRecord(**base)


# --- comeback size ------------------------------------------------------------


def test_comeback_zero_for_certain_winner():
    assert comeback_size(curve([1.0]), 1) == 0.0


def test_comeback_from_deep_dip():
    assert comeback_size(curve([0.8, 0.15, 0.9]), 1) == pytest.approx(0.85)


def test_comeback_at_exact_half():
    assert comeback_size(curve([0.9, 0.5, 0.8]), 1) == pytest.approx(0.5)


def test_comeback_uses_winner_side():
    c = curve([0.8, 0.15, 0.9])
    # red winning flips the curve: red's probability dips to 1-0.9
    assert comeback_size(c, 0) == pytest.approx(0.9)
    assert comeback_size(c, 0) >= 1 - (1 - c.value_at(50))


# --- leader changes --------------------------------------------------------------


@pytest.mark.parametrize(
    "values, expected",
    [
        ([0.9], 0),
        ([0.6, 0.4, 0.7], 2),
        ([0.6, 0.5, 0.6], 0),
        ([0.6, 0.5, 0.4], 1),
        ([0.4, 0.5, 0.6, 0.2], 2),
        ([0.5, 0.4], 1 - 1),  # no leader yet, then red: no flip
    ],
)
def test_leader_change_counting(values, expected):
    assert leader_changes(curve(values)) == expected


def test_leader_change_parity():
    rng = np.random.default_rng(31)
    for _ in range(60):
        n = int(rng.integers(1, 12))
        vals = rng.integers(0, 1025, size=n) / 1024.0
        c = curve(vals.tolist())
        first = next((v for v in c.values if v != 0.5), None)
        last = next((v for v in reversed(c.values) if v != 0.5), None)
        if first is None or last is None:
            continue
        flips = leader_changes(c)
        same_side = (first > 0.5) == (last > 0.5)
        assert flips % 2 == (0 if same_side else 1)


# --- rubbish time ------------------------------------------------------------------


def test_rubbish_full_when_never_below_threshold():
    assert rubbish_time(curve([0.8, 0.9]), 1, 0.7) == 1.0


def test_rubbish_fraction_after_last_crossing():
    # 50-minute game: below 0.7 until minute 30, at or above after
    c = StepCurve.from_steps(0, 3000, [1800.0], [0.5, 0.9])
    assert rubbish_time(c, 1, 0.7) == pytest.approx(0.4)


def test_rubbish_zero_when_below_until_the_end():
    assert rubbish_time(curve([0.9, 0.6]), 1, 0.7) == 0.0


def test_rubbish_threshold_validation():
    with pytest.raises(MetricsError):
        rubbish_time(curve([0.9]), 1, 0.5)
    with pytest.raises(MetricsError):
        rubbish_time(curve([0.9]), 1, 1.1)


def test_rubbish_monotone_in_threshold():
    rng = np.random.default_rng(37)
    for _ in range(40):
        n = int(rng.integers(1, 10))
        vals = (rng.integers(0, 1025, size=n) / 1024.0).tolist()
        c = curve(vals)
        o = int(rng.integers(0, 2))
        samples = [rubbish_time(c, o, p) for p in (0.55, 0.7, 0.85, 1.0)]
        assert all(a >= b - 1e-12 for a, b in zip(samples, samples[1:]))


# --- summaries -------------------------------------------------------------------


def test_single_correct_subject_summary():
    record = GameRecord(
        game_id="solo",
        blue_team="A",
        red_team="B",
        duration=600.0,
        outcome=1,
        subjects={"s": SubjectRecord("neutral", belief_curve([(0, 1.0)], 600), 7)},
    )
    s = summarize_game(record)
    assert s.overall_surprise == 0.0
    assert s.comeback_size == 0.0
    assert s.category == "neutral"
    assert s.avg_rating == 7.0
    assert s.n_subjects == 1
    assert s.leader_changes == 0
    assert s.rubbish_time == 1.0


def test_three_subject_summary_composes_curve_metrics():
    s = summarize_game(three_subject_record())
    assert s.overall_surprise == pytest.approx(0.4)
    assert s.surp_first_half == pytest.approx(0.2)
    assert s.surp_second_half == pytest.approx(0.2)
    assert s.surp_first_half + s.surp_second_half == s.overall_surprise
    assert s.end_surprise <= s.overall_surprise
    assert s.duration_min == pytest.approx(1 / 3)
    assert s.n_subjects == 3
    assert s.avg_rating == pytest.approx(6.0)
    # blue wins, one blue / one red / one neutral preference: no majority
    assert s.category == "neutral"


def test_majority_categories():
    rec = three_subject_record(
        subjects={
            "a": SubjectRecord("blue", belief_curve([(0, 0.6)], 20), 5),
            "b": SubjectRecord("blue", belief_curve([(0, 0.5)], 20), 5),
            "c": SubjectRecord("red", belief_curve([(0, 0.4)], 20), 5),
        }
    )
    assert summarize_game(rec).category == "win"
    lose = three_subject_record(
        outcome=0,
        subjects={
            "a": SubjectRecord("blue", belief_curve([(0, 0.6)], 20), 5),
            "b": SubjectRecord("blue", belief_curve([(0, 0.5)], 20), 5),
            "c": SubjectRecord("red", belief_curve([(0, 0.4)], 20), 5),
        },
    )
    assert summarize_game(lose).category == "lose"


def test_neutral_preferences_stay_in_denominator():
    rec = three_subject_record(
        subjects={
            "a": SubjectRecord("blue", belief_curve([(0, 0.6)], 20), 5),
            "b": SubjectRecord("neutral", belief_curve([(0, 0.5)], 20), 5),
            "c": SubjectRecord("neutral", belief_curve([(0, 0.4)], 20), 5),
            "d": SubjectRecord("neutral", belief_curve([(0, 0.4)], 20), 5),
        }
    )
    assert summarize_game(rec).category == "neutral"


def test_summary_requires_curves_and_ratings():
    with pytest.raises(MetricsError) as err:
        summarize_game(three_subject_record(subjects={}))
    assert err.value.code == "no_participants"
    unrated = three_subject_record(
        subjects={"a": SubjectRecord("blue", belief_curve([(0, 0.5)], 20), None)}
    )
    with pytest.raises(MetricsError) as err:
        summarize_game(unrated)
    assert err.value.code == "no_ratings"


def test_team_relabel_leaves_metrics_unchanged():
    rng = np.random.default_rng(41)
    for _ in range(15):
        duration = float(rng.integers(400, 1200))
        subjects = {}
        flipped = {}
        for j in range(int(rng.integers(1, 8))):
            m = int(rng.integers(0, 6))
            cuts = np.sort(rng.choice(np.arange(1, int(duration)), size=m, replace=False))
            vals = (rng.integers(0, 1025, size=m + 1) / 1024.0).tolist()
            c = StepCurve.from_steps(0.0, duration, cuts.astype(float).tolist(), vals)
            mirror = StepCurve(0.0, duration, c.breakpoints, tuple(1 - v for v in c.values))
            rating = int(rng.integers(1, 10))
            pref = ("blue", "red", "neutral")[int(rng.integers(0, 3))]
            anti = {"blue": "red", "red": "blue", "neutral": "neutral"}[pref]
            subjects[f"s{j}"] = SubjectRecord(pref, c, rating)
            flipped[f"s{j}"] = SubjectRecord(anti, mirror, rating)
        o = int(rng.integers(0, 2))
        a = summarize_game(
            GameRecord("g", "X", "Y", duration, o, subjects), peak_grid=2.0
        )
        b = summarize_game(
            GameRecord("g", "Y", "X", duration, 1 - o, flipped), peak_grid=2.0
        )
        for field in (
            "n_subjects",
            "avg_rating",
            "duration_min",
            "peak_time_min",
            "surp_first_half",
            "surp_second_half",
            "peak_surprise",
            "end_surprise",
            "overall_surprise",
            "comeback_size",
            "leader_changes",
            "rubbish_time",
            "category",
        ):
            assert getattr(a, field) == getattr(b, field), field


def test_record_validation():
    with pytest.raises(MetricsError):
        GameRecord("g", "A", "B", 0.0, 1)
    with pytest.raises(MetricsError):
        GameRecord("g", "A", "B", 10.0, 2)
    with pytest.raises(MetricsError):
        GameRecord("g", "A", "B", 10.0, 1, subjects={"s": SubjectRecord("maybe")})
