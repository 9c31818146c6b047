"""Lifecycle state machine, submission validation, settlement, snapshots,
and log replay identity."""

from __future__ import annotations

import numpy as np
import pytest

from surpriseflow.service import (
    ElicitationEngine,
    ServiceError,
    replay_events,
)


class FakeClock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt
        return self.now


@pytest.fixture
def rig():
    clock = FakeClock()
    events = []
    engine = ElicitationEngine(clock=clock, sink=events.append)
    return engine, clock, events


def play_to_live(engine, clock, gid="g1", subjects=("a", "b", "c"), priors=(0.3, 0.5, 0.9)):
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    for sid, p in zip(subjects, priors):
        engine.submit_preference(gid, sid, "blue")
        engine.submit_prior(gid, sid, p)
    clock.advance(10)
    engine.start_game(gid)
    return gid


# --- lifecycle --------------------------------------------------------------


def test_create_game_starts_in_created(rig):
    engine, clock, events = rig
    session = engine.create_game("G2", "SN", 600.0)
    assert session.stage == "created"
    assert events[0].kind == "game_created"
    assert events[0].seq == 1


def test_duplicate_game_id_rejected(rig):
    engine, clock, _ = rig
    engine.create_game("G2", "SN", 600.0, game_id="g1")
    with pytest.raises(ServiceError) as err:
        engine.create_game("FPX", "IG", 100.0, game_id="g1")
    assert err.value.code == "duplicate_game"


def test_create_game_validation(rig):
    engine, _, _ = rig
    with pytest.raises(ServiceError) as err:
        engine.create_game("G2", "G2", 10.0)
    assert err.value.code == "invalid_teams"
    with pytest.raises(ServiceError) as err:
        engine.create_game("G2", "SN", -1.0)
    assert err.value.code == "out_of_range"


def test_zero_budget_settles_to_zero_rewards(rig):
    engine, clock, _ = rig
    gid = "g0"
    engine.create_game("G2", "SN", 0.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_prior(gid, "a", 0.4)
    engine.start_game(gid)
    clock.advance(100)
    engine.end_game(gid)
    engine.declare_outcome(gid, "blue")
    settlement = engine.settle(gid)
    assert settlement.rewards == {"a": 0.0}


def test_stage_transitions_strictly_forward(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock)
    session = engine.sessions[gid]
    assert session.stage == "live"
    with pytest.raises(ServiceError) as err:
        engine.open_preferences(gid)
    assert err.value.code == "wrong_state"
    with pytest.raises(ServiceError):
        engine.start_game(gid)
    clock.advance(1200)
    engine.end_game(gid)
    assert session.stage == "ended"
    assert session.duration == pytest.approx(1200.0)
    with pytest.raises(ServiceError):
        engine.end_game(gid)


def test_unknown_game_rejected(rig):
    engine, _, _ = rig
    with pytest.raises(ServiceError) as err:
        engine.start_game("nope")
    assert err.value.code == "unknown_game"


# --- submissions -------------------------------------------------------------


def test_update_flow_and_wrong_state(rig):
    engine, clock, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_prior(gid, "a", 0.4)
    with pytest.raises(ServiceError) as err:
        engine.submit_update(gid, "a", 0.8)
    assert err.value.code == "wrong_state"
    engine.start_game(gid)
    clock.advance(5)
    event = engine.submit_update(gid, "a", 0.8)
    assert event.payload == {"t": 5.0, "p": 0.8}


def test_update_requires_prior(rig):
    engine, clock, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_preference(gid, "noprior", "red")
    engine.submit_prior(gid, "a", 0.4)
    engine.start_game(gid)
    clock.advance(5)
    with pytest.raises(ServiceError) as err:
        engine.submit_update(gid, "noprior", 0.5)
    assert err.value.code == "missing_prior"
    with pytest.raises(ServiceError) as err:
        engine.submit_update(gid, "stranger", 0.5)
    assert err.value.code == "unknown_subject"


def test_update_times_strictly_increase(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock, subjects=("a",), priors=(0.4,))
    clock.advance(5)
    engine.submit_update(gid, "a", 0.8)
    with pytest.raises(ServiceError) as err:
        engine.submit_update(gid, "a", 0.7)  # same clock instant
    assert err.value.code == "non_monotonic_time"
    clock.advance(0.001)
    engine.submit_update(gid, "a", 0.7)


def test_prior_overwrite_allowed_until_start(rig):
    engine, clock, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_prior(gid, "a", 0.4)
    engine.submit_prior(gid, "a", 0.6)
    assert engine.sessions[gid].subjects["a"].prior == 0.6
    engine.start_game(gid)
    with pytest.raises(ServiceError) as err:
        engine.submit_prior(gid, "a", 0.7)
    assert err.value.code == "wrong_state"


def test_probability_range_checked(rig):
    engine, _, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    for bad in (-0.1, 1.1):
        with pytest.raises(ServiceError) as err:
            engine.submit_prior(gid, "a", bad)
        assert err.value.code == "out_of_range"


def test_preference_validation(rig):
    engine, _, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_preference(gid, "a", "G2")  # team name maps to its side
    assert engine.sessions[gid].subjects["a"].preference == "blue"
    with pytest.raises(ServiceError) as err:
        engine.submit_preference(gid, "a", "purple")
    assert err.value.code == "invalid_preference"


def test_rating_matrix(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock, subjects=("a", "b"), priors=(0.4, 0.6))
    with pytest.raises(ServiceError) as err:
        engine.submit_rating(gid, "a", 5)
    assert err.value.code == "wrong_state"
    clock.advance(600)
    engine.end_game(gid)
    for bad in (0, 9.5, 0.5):
        with pytest.raises(ServiceError) as err:
            engine.submit_rating(gid, "a", bad)
        assert err.value.code == "out_of_range"
    engine.submit_rating(gid, "a", 9)
    with pytest.raises(ServiceError) as err:
        engine.submit_rating(gid, "a", 9)
    assert err.value.code == "duplicate_rating"
    with pytest.raises(ServiceError) as err:
        engine.submit_rating(gid, "stranger", 5)
    assert err.value.code == "unknown_subject"


# --- snapshot ------------------------------------------------------------------


def test_snapshot_single_subject_constant(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock, subjects=("a",), priors=(0.4,))
    clock.advance(100)
    snap = engine.snapshot(gid)
    assert snap.blue_probability == 0.4
    assert snap.red_probability == pytest.approx(0.6)
    assert snap.n_subjects == 1
    assert snap.median.values == (0.4,)


def test_snapshot_matches_median_example(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock)
    clock.advance(10)
    engine.submit_update(gid, "a", 0.7)
    # c's drop to 0.2 happens at t=15, after the probe at t=12
    snap = engine.snapshot(gid, at=clock.now + 2)
    assert snap.blue_probability == pytest.approx(0.7)
    clock.advance(5)
    engine.submit_update(gid, "c", 0.2)
    snap = engine.snapshot(gid, at=clock.now + 5)
    assert snap.blue_probability == pytest.approx(0.5)


def test_snapshot_requires_live_with_data(rig):
    engine, clock, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    with pytest.raises(ServiceError) as err:
        engine.snapshot(gid)
    assert err.value.code == "wrong_state"
    engine.open_preferences(gid)
    engine.submit_preference(gid, "a", "blue")  # preference only, no prior
    engine.start_game(gid)
    with pytest.raises(ServiceError) as err:
        engine.snapshot(gid)
    assert err.value.code == "no_data"


def test_snapshot_does_not_mutate_log(rig):
    engine, clock, events = rig
    gid = play_to_live(engine, clock)
    before = len(events)
    clock.advance(50)
    engine.snapshot(gid)
    assert len(events) == before


# --- settlement ------------------------------------------------------------------


def settle_scripted_game(engine, clock):
    gid = "g1"
    engine.create_game("G2", "SN", 20.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_prior(gid, "a", 1.0)
    engine.submit_prior(gid, "b", 0.5)
    engine.submit_preference(gid, "pref_only", "red")
    engine.start_game(gid)
    clock.advance(1000)
    engine.end_game(gid)
    engine.declare_outcome(gid, "blue")
    return gid


def test_settlement_scores_and_rewards(rig):
    engine, clock, _ = rig
    gid = settle_scripted_game(engine, clock)
    settlement = engine.settle(gid)
    # scores 1.0 and 0.75 -> rewards (1 +/- 0.125) * 10
    assert settlement.scores == {"a": 1.0, "b": 0.75}
    assert settlement.rewards["a"] == pytest.approx(11.25)
    assert settlement.rewards["b"] == pytest.approx(8.75)
    assert "pref_only" not in settlement.scores
    assert engine.sessions[gid].stage == "settled"


def test_settlement_worked_reward_split(rig):
    # scores 0.9 and 0.7 from two-piece truthful-then-wrong curves, B=20
    engine, clock, _ = rig
    gid = "g1"
    engine.create_game("G2", "SN", 20.0, game_id=gid)
    engine.open_preferences(gid)
    engine.submit_prior(gid, "a", 1.0)
    engine.submit_prior(gid, "b", 1.0)
    engine.start_game(gid)
    clock.advance(700)
    engine.submit_update(gid, "b", 0.0)
    clock.advance(200)
    engine.submit_update(gid, "a", 0.0)
    clock.advance(100)
    engine.end_game(gid)
    engine.declare_outcome(gid, "blue")
    settlement = engine.settle(gid)
    assert settlement.scores["a"] == pytest.approx(0.9)
    assert settlement.scores["b"] == pytest.approx(0.7)
    assert settlement.rewards["a"] == pytest.approx(11.0)
    assert settlement.rewards["b"] == pytest.approx(9.0)


def test_settlement_idempotent(rig):
    engine, clock, events = rig
    gid = settle_scripted_game(engine, clock)
    first = engine.settle(gid)
    n_events = len(events)
    again = engine.settle(gid)
    assert again == first
    assert len(events) == n_events


def test_settlement_guards(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock)
    with pytest.raises(ServiceError) as err:
        engine.settle(gid)
    assert err.value.code == "wrong_state"
    clock.advance(100)
    engine.end_game(gid)
    with pytest.raises(ServiceError) as err:
        engine.settle(gid)
    assert err.value.code == "no_outcome"


def test_outcome_declared_once_for_a_real_team(rig):
    engine, clock, _ = rig
    gid = play_to_live(engine, clock)
    clock.advance(100)
    engine.end_game(gid)
    with pytest.raises(ServiceError) as err:
        engine.declare_outcome(gid, "neutral")
    assert err.value.code == "invalid_teams"
    engine.declare_outcome(gid, "SN")  # team name accepted
    assert engine.sessions[gid].outcome == 0
    with pytest.raises(ServiceError) as err:
        engine.declare_outcome(gid, "blue")
    assert err.value.code == "outcome_already_declared"


# --- replay ------------------------------------------------------------------------


def scripted_full_game(events_sink=None):
    clock = FakeClock()
    events = [] if events_sink is None else events_sink
    engine = ElicitationEngine(clock=clock, sink=events.append)
    gid = "g1"
    engine.create_game("G2", "SN", 600.0, game_id=gid)
    engine.open_preferences(gid)
    for sid, side, p in (("a", "blue", 0.3), ("b", "neutral", 0.5), ("c", "red", 0.9)):
        engine.submit_preference(gid, sid, side)
        engine.submit_prior(gid, sid, p)
    engine.start_game(gid)
    clock.advance(10)
    engine.submit_update(gid, "a", 0.7)
    clock.advance(5)
    engine.submit_update(gid, "c", 0.2)
    clock.advance(5)
    engine.end_game(gid)
    engine.declare_outcome(gid, "blue")
    for sid, rating in (("a", 6), ("b", 5), ("c", 7)):
        engine.submit_rating(gid, sid, rating)
    engine.settle(gid)
    return engine, events


def test_replay_reproduces_sessions_and_settlements():
    engine, events = scripted_full_game()
    replayed = replay_events(events)
    original = engine.sessions["g1"]
    mirror = replayed.sessions["g1"]
    assert mirror.stage == original.stage == "settled"
    assert mirror.duration == original.duration
    assert mirror.settlement == original.settlement
    assert {s: st.updates for s, st in mirror.subjects.items()} == {
        s: st.updates for s, st in original.subjects.items()
    }
    assert replayed.game_record("g1").subjects == engine.game_record("g1").subjects


def test_replay_rejects_reordered_or_dropped_events():
    _, events = scripted_full_game()
    truncated = [e for e in events if e.kind != "game_started"]
    with pytest.raises(ServiceError) as err:
        replay_events(truncated)
    assert err.value.code == "tampered_log"

    swapped = list(events)
    i = next(k for k, e in enumerate(swapped) if e.kind == "game_started")
    swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
    with pytest.raises(ServiceError):
        replay_events(swapped)


def test_replay_rejects_update_before_start():
    _, events = scripted_full_game()
    update = next(e for e in events if e.kind == "update")
    start_idx = next(i for i, e in enumerate(events) if e.kind == "game_started")
    moved = [e for e in events if e is not update]
    moved.insert(start_idx, update)
    with pytest.raises(ServiceError) as err:
        replay_events(moved)
    assert err.value.code == "tampered_log"
    assert f"seq={update.seq}" in str(err.value)


def test_replay_rejects_forged_settlement():
    _, events = scripted_full_game()
    settled = events[-1]
    forged = settled.payload | {"mean_score": 0.123}
    events[-1] = type(settled)(
        settled.seq, settled.ts, settled.game_id, settled.kind, None, forged
    )
    with pytest.raises(ServiceError) as err:
        replay_events(events)
    assert err.value.code == "tampered_log"


# --- state-machine fuzz -----------------------------------------------------------

ACTIONS = (
    "open",
    "start",
    "end",
    "preference",
    "prior",
    "update",
    "rating",
    "outcome",
    "settle",
)

# stage -> actions the matrix allows, before per-action validation
ALLOWED = {
    "created": {"open"},
    "preferences_open": {"start", "preference", "prior"},
    "live": {"end", "update"},
    "ended": {"rating", "outcome", "settle"},
    "settled": {"settle"},  # idempotent read-back
}


def fuzz_once(seed, steps=400):
    rng = np.random.default_rng(seed)
    clock = FakeClock()
    events = []
    engine = ElicitationEngine(clock=clock, sink=events.append)
    gid = "fz"
    engine.create_game("L", "R", 100.0, game_id=gid)
    subjects = [f"s{i}" for i in range(4)]
    checked = 0
    for _ in range(steps):
        action = ACTIONS[int(rng.integers(0, len(ACTIONS)))]
        stage = engine.sessions[gid].stage
        sid = subjects[int(rng.integers(0, len(subjects)))]
        clock.advance(float(rng.uniform(0, 5)))
        try:
            if action == "open":
                engine.open_preferences(gid)
            elif action == "start":
                engine.start_game(gid)
            elif action == "end":
                engine.end_game(gid)
            elif action == "preference":
                engine.submit_preference(gid, sid, ("blue", "red", "neutral", "bogus")[int(rng.integers(0, 4))])
            elif action == "prior":
                engine.submit_prior(gid, sid, float(rng.uniform(-0.2, 1.2)))
            elif action == "update":
                engine.submit_update(gid, sid, float(rng.uniform(-0.2, 1.2)))
            elif action == "rating":
                engine.submit_rating(gid, sid, float(rng.uniform(-1, 11)))
            elif action == "outcome":
                engine.declare_outcome(gid, ("blue", "red", "nobody")[int(rng.integers(0, 3))])
            elif action == "settle":
                engine.settle(gid)
            accepted = True
        except ServiceError:
            accepted = False
        if accepted:
            assert action in ALLOWED[stage], f"{action} accepted in stage {stage}"
            checked += 1
        else:
            # nothing may leak into the log on rejection
            pass
    return engine, events, checked


def test_fuzzed_acceptances_obey_the_matrix_and_replay():
    total_checked = 0
    for seed in range(50):
        engine, events, checked = fuzz_once(seed)
        total_checked += checked
        replayed = replay_events(events)
        assert replayed.sessions["fz"].stage == engine.sessions["fz"].stage
        assert replayed.sessions["fz"].last_seq == engine.sessions["fz"].last_seq
    assert total_checked > 200
