"""Live elicitation engine: game lifecycle, event validation, settlement.

Every accepted action appends exactly one event to the per-game log with a
contiguous sequence number; rejected actions raise :class:`ServiceError`
with a machine-readable code and leave no trace.  Replaying a log through
:func:`replay_events` re-derives every session, curve, and settlement, and
any divergence from the recorded events signals a tampered log.

Stages move strictly forward::

    created -> preferences_open -> live -> ended -> settled

Preferences and priors are accepted (and may be overwritten) only while
preferences are open; belief updates only while live, from subjects holding
a prior; ratings only after the game ends, once per participant.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from .curves import StepCurve, belief_curve, median_curve
from .metrics import GameRecord, SubjectRecord
from .scoring import Settlement, quadratic_score, settle_rewards

__all__ = [
    "ServiceError",
    "ElicitationEvent",
    "SubjectState",
    "GameSession",
    "LiveSnapshot",
    "ElicitationEngine",
    "replay_events",
    "STAGES",
    "EVENT_KINDS",
    "SIDES",
]

STAGES = ("created", "preferences_open", "live", "ended", "settled")
EVENT_KINDS = (
    "game_created",
    "preferences_opened",
    "game_started",
    "preference",
    "prior",
    "update",
    "game_ended",
    "rating",
    "outcome_declared",
    "settled",
)
SIDES = ("blue", "red", "neutral")

# game-relative seconds carry millisecond precision
TIME_DECIMALS = 3


class ServiceError(ValueError):
    """Rejected action; ``code`` is the wire-level rejection reason."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ElicitationEvent:
    """One append-only log entry."""

    seq: int
    ts: float
    game_id: str
    kind: str
    subject_id: str | None = None
    payload: dict = field(default_factory=dict)


@dataclass
class SubjectState:
    preference: str | None = None
    prior: float | None = None
    updates: list[tuple[float, float]] = field(default_factory=list)
    rating: float | None = None


@dataclass
class GameSession:
    game_id: str
    blue_team: str
    red_team: str
    budget: float
    stage: str = "created"
    created_ts: float | None = None
    start_ts: float | None = None
    end_ts: float | None = None
    duration: float | None = None
    outcome: int | None = None
    subjects: dict[str, SubjectState] = field(default_factory=dict)
    settlement: Settlement | None = None
    last_seq: int = 0

    def participants(self) -> dict[str, SubjectState]:
        return {sid: s for sid, s in self.subjects.items() if s.prior is not None}


@dataclass(frozen=True)
class LiveSnapshot:
    median: StepCurve
    blue_probability: float
    red_probability: float
    n_subjects: int
    elapsed: float


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ServiceError("out_of_range", f"probability {p!r} outside [0, 1]")
    return p


class ElicitationEngine:
    """In-memory session store; all mutation goes through validated actions.

    ``sink`` receives each accepted event (the durable log writer).  The
    clock is injectable; replay passes explicit timestamps instead.
    Events for one game must be applied in order - callers serialize.
    """

    def __init__(
        self,
        clock: Callable[[], float] = time.time,
        sink: Callable[[ElicitationEvent], None] | None = None,
    ):
        self._clock = clock
        self._sink = sink
        self.sessions: dict[str, GameSession] = {}

    # -- internals ------------------------------------------------------

    def _session(self, game_id: str) -> GameSession:
        try:
            return self.sessions[game_id]
        except KeyError:
            raise ServiceError("unknown_game", f"no game {game_id!r}") from None

    def _require_stage(self, session: GameSession, *stages: str) -> None:
        if session.stage not in stages:
            raise ServiceError(
                "wrong_state",
                f"game {session.game_id} is {session.stage}, action needs {'/'.join(stages)}",
            )

    def _append(
        self,
        session: GameSession,
        kind: str,
        subject_id: str | None = None,
        payload: dict | None = None,
        ts: float | None = None,
    ) -> ElicitationEvent:
        event = ElicitationEvent(
            seq=session.last_seq + 1,
            ts=self._clock() if ts is None else float(ts),
            game_id=session.game_id,
            kind=kind,
            subject_id=subject_id,
            payload=payload or {},
        )
        session.last_seq = event.seq
        if self._sink is not None:
            self._sink(event)
        return event

    def _subject(self, session: GameSession, subject_id: str) -> SubjectState:
        if not subject_id:
            raise ServiceError("unknown_subject", "subject id required")
        try:
            return session.subjects[subject_id]
        except KeyError:
            raise ServiceError(
                "unknown_subject", f"subject {subject_id!r} never registered"
            ) from None

    # -- lifecycle ------------------------------------------------------

    def create_game(
        self,
        blue_team: str,
        red_team: str,
        budget: float,
        game_id: str | None = None,
        ts: float | None = None,
    ) -> GameSession:
        if not blue_team or not red_team or blue_team == red_team:
            raise ServiceError("invalid_teams", f"need two distinct teams, got {blue_team!r} vs {red_team!r}")
        if budget < 0:
            raise ServiceError("out_of_range", f"budget {budget} must be >= 0")
        if game_id is None:
            game_id = uuid.uuid4().hex[:12]
        if game_id in self.sessions:
            raise ServiceError("duplicate_game", f"game {game_id!r} already exists")
        session = GameSession(game_id, blue_team, red_team, float(budget))
        self.sessions[game_id] = session
        event = self._append(
            session,
            "game_created",
            payload={"blue": blue_team, "red": red_team, "budget": float(budget)},
            ts=ts,
        )
        session.created_ts = event.ts
        return session

    def open_preferences(self, game_id: str, ts: float | None = None) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "created")
        event = self._append(session, "preferences_opened", ts=ts)
        session.stage = "preferences_open"
        return event

    def start_game(self, game_id: str, ts: float | None = None) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "preferences_open")
        event = self._append(session, "game_started", ts=ts)
        session.stage = "live"
        session.start_ts = event.ts
        return event

    def end_game(self, game_id: str, ts: float | None = None) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "live")
        end_ts = self._clock() if ts is None else float(ts)
        duration = round(end_ts - session.start_ts, TIME_DECIMALS)
        if duration <= 0:
            raise ServiceError("out_of_range", f"game duration {duration} not positive")
        event = self._append(session, "game_ended", payload={"duration": duration}, ts=end_ts)
        session.stage = "ended"
        session.end_ts = event.ts
        session.duration = duration
        return event

    def declare_outcome(self, game_id: str, winner: str, ts: float | None = None) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "ended")
        side = self._normalize_side(session, winner)
        if side not in ("blue", "red"):
            raise ServiceError("invalid_teams", f"winner must be one team, got {winner!r}")
        if session.outcome is not None:
            raise ServiceError("outcome_already_declared", f"game {game_id} already has an outcome")
        outcome = 1 if side == "blue" else 0
        event = self._append(
            session, "outcome_declared", payload={"winner": side, "o": outcome}, ts=ts
        )
        session.outcome = outcome
        return event

    @staticmethod
    def _normalize_side(session: GameSession, value: str) -> str:
        if value == session.blue_team:
            return "blue"
        if value == session.red_team:
            return "red"
        return value

    # -- subject submissions ---------------------------------------------

    def submit_preference(
        self, game_id: str, subject_id: str, side: str, ts: float | None = None
    ) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "preferences_open")
        if not subject_id:
            raise ServiceError("unknown_subject", "subject id required")
        side = self._normalize_side(session, side)
        if side not in SIDES:
            raise ServiceError("invalid_preference", f"preference {side!r} not in {SIDES}")
        event = self._append(session, "preference", subject_id, {"side": side}, ts=ts)
        session.subjects.setdefault(subject_id, SubjectState()).preference = side
        return event

    def submit_prior(
        self, game_id: str, subject_id: str, p: float, ts: float | None = None
    ) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "preferences_open")
        if not subject_id:
            raise ServiceError("unknown_subject", "subject id required")
        p = _check_probability(p)
        event = self._append(session, "prior", subject_id, {"p": p}, ts=ts)
        session.subjects.setdefault(subject_id, SubjectState()).prior = p
        return event

    def submit_update(
        self,
        game_id: str,
        subject_id: str,
        p: float,
        ts: float | None = None,
        t: float | None = None,
    ) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "live")
        subject = self._subject(session, subject_id)
        if subject.prior is None:
            raise ServiceError("missing_prior", f"subject {subject_id} holds no prior")
        p = _check_probability(p)
        wall = self._clock() if ts is None else float(ts)
        rel = round(wall - session.start_ts, TIME_DECIMALS) if t is None else float(t)
        if rel <= 0:
            raise ServiceError("non_monotonic_time", f"update time {rel} not after the prior")
        if subject.updates and rel <= subject.updates[-1][0]:
            raise ServiceError(
                "non_monotonic_time",
                f"update time {rel} not after previous {subject.updates[-1][0]}",
            )
        event = self._append(session, "update", subject_id, {"t": rel, "p": p}, ts=wall)
        subject.updates.append((rel, p))
        return event

    def submit_rating(
        self, game_id: str, subject_id: str, value: float, ts: float | None = None
    ) -> ElicitationEvent:
        session = self._session(game_id)
        self._require_stage(session, "ended")
        subject = self._subject(session, subject_id)
        if subject.prior is None:
            raise ServiceError("missing_prior", f"subject {subject_id} never participated")
        value = float(value)
        if not 1.0 <= value <= 9.0:
            raise ServiceError("out_of_range", f"rating {value!r} outside [1, 9]")
        if subject.rating is not None:
            raise ServiceError("duplicate_rating", f"subject {subject_id} already rated")
        event = self._append(session, "rating", subject_id, {"value": value}, ts=ts)
        subject.rating = value
        return event

    # -- reads ------------------------------------------------------------

    def snapshot(self, game_id: str, at: float | None = None) -> LiveSnapshot:
        """Median of the curves accumulated so far; read-only."""
        session = self._session(game_id)
        self._require_stage(session, "live")
        participants = session.participants()
        if not participants:
            raise ServiceError("no_data", f"game {game_id} has no subjects with priors")
        elapsed = (self._clock() if at is None else float(at)) - session.start_ts
        elapsed = max(elapsed, 10 ** -TIME_DECIMALS)
        curves = []
        for subject in participants.values():
            reports = [(0.0, subject.prior)] + [(t, p) for t, p in subject.updates if t < elapsed]
            curves.append(belief_curve(reports, elapsed))
        median = median_curve(curves)
        blue = median.value_at(median.end)
        return LiveSnapshot(
            median=median,
            blue_probability=blue,
            red_probability=1.0 - blue,
            n_subjects=len(participants),
            elapsed=elapsed,
        )

    def subject_curve(self, game_id: str, subject_id: str) -> StepCurve:
        session = self._session(game_id)
        if session.duration is None:
            raise ServiceError("wrong_state", f"game {game_id} has not ended")
        subject = self._subject(session, subject_id)
        if subject.prior is None:
            raise ServiceError("missing_prior", f"subject {subject_id} holds no prior")
        return belief_curve([(0.0, subject.prior)] + subject.updates, session.duration)

    # -- settlement --------------------------------------------------------

    def settle(self, game_id: str, ts: float | None = None) -> Settlement:
        """Score every participant and fix the payout; idempotent."""
        session = self._session(game_id)
        if session.stage == "settled":
            return session.settlement
        self._require_stage(session, "ended")
        if session.outcome is None:
            raise ServiceError("no_outcome", f"game {game_id} has no declared outcome")
        participants = session.participants()
        if not participants:
            raise ServiceError("no_participants", f"game {game_id} has no eligible subjects")
        sids = sorted(participants)
        scores = {
            sid: quadratic_score(self.subject_curve(game_id, sid), session.outcome)
            for sid in sids
        }
        rewards = settle_rewards([scores[sid] for sid in sids], session.budget)
        settlement = Settlement(
            game_id=game_id,
            budget=session.budget,
            scores=scores,
            rewards=dict(zip(sids, rewards)),
            mean_score=sum(scores.values()) / len(sids),
        )
        self._append(
            session,
            "settled",
            payload={
                "budget": session.budget,
                "mean_score": settlement.mean_score,
                "scores": settlement.scores,
                "rewards": settlement.rewards,
            },
            ts=ts,
        )
        session.stage = "settled"
        session.settlement = settlement
        return settlement

    # -- export -------------------------------------------------------------

    def game_record(self, game_id: str) -> GameRecord:
        """Immutable analysis view of an ended game."""
        session = self._session(game_id)
        if session.stage not in ("ended", "settled") or session.outcome is None:
            raise ServiceError(
                "wrong_state", f"game {game_id} is {session.stage} without a final outcome"
            )
        subjects = {}
        for sid, state in session.participants().items():
            subjects[sid] = SubjectRecord(
                preference=state.preference or "neutral",
                curve=self.subject_curve(game_id, sid),
                rating=state.rating,
            )
        return GameRecord(
            game_id=game_id,
            blue_team=session.blue_team,
            red_team=session.red_team,
            duration=session.duration,
            outcome=session.outcome,
            subjects=subjects,
            wall_start=session.start_ts,
            wall_end=session.end_ts,
        )


def _event_identity(event: ElicitationEvent) -> tuple:
    return (event.seq, event.game_id, event.kind, event.subject_id, event.payload)


def replay_events(events: list[ElicitationEvent]) -> ElicitationEngine:
    """Rebuild engine state from a log; the log must re-derive exactly.

    Each event is re-applied through the same validation paths used live;
    the re-derived event must match the recorded one (including contiguous
    sequence numbers and recomputed settlement figures), otherwise the log
    has been tampered with.
    """
    engine = ElicitationEngine(clock=lambda: 0.0)
    for event in events:
        try:
            derived = _apply(engine, event)
        except (ServiceError, KeyError, TypeError) as exc:
            raise ServiceError(
                "tampered_log",
                f"event seq={event.seq} game={event.game_id} kind={event.kind}"
                f" rejected on replay: {exc}",
            ) from exc
        if _event_identity(derived) != _event_identity(event):
            raise ServiceError(
                "tampered_log",
                f"event seq={event.seq} game={event.game_id} kind={event.kind}"
                f" does not re-derive from the preceding log",
            )
    return engine


def _apply(engine: ElicitationEngine, event: ElicitationEvent) -> ElicitationEvent:
    kind, gid, sid, pl, ts = event.kind, event.game_id, event.subject_id, event.payload, event.ts
    if kind == "game_created":
        session = engine.create_game(pl["blue"], pl["red"], pl["budget"], game_id=gid, ts=ts)
        return ElicitationEvent(
            1,
            ts,
            session.game_id,
            "game_created",
            None,
            {"blue": session.blue_team, "red": session.red_team, "budget": session.budget},
        )
    if kind == "preferences_opened":
        return engine.open_preferences(gid, ts=ts)
    if kind == "game_started":
        return engine.start_game(gid, ts=ts)
    if kind == "game_ended":
        derived = engine.end_game(gid, ts=ts)
        return derived
    if kind == "preference":
        return engine.submit_preference(gid, sid, pl["side"], ts=ts)
    if kind == "prior":
        return engine.submit_prior(gid, sid, pl["p"], ts=ts)
    if kind == "update":
        return engine.submit_update(gid, sid, pl["p"], ts=ts, t=pl["t"])
    if kind == "rating":
        return engine.submit_rating(gid, sid, pl["value"], ts=ts)
    if kind == "outcome_declared":
        return engine.declare_outcome(gid, pl["winner"], ts=ts)
    if kind == "settled":
        session = engine._session(gid)
        engine.settle(gid, ts=ts)
        return ElicitationEvent(
            session.last_seq,
            ts,
            gid,
            "settled",
            None,
            {
                "budget": session.settlement.budget,
                "mean_score": session.settlement.mean_score,
                "scores": session.settlement.scores,
                "rewards": session.settlement.rewards,
            },
        )
    raise ServiceError("invalid_event", f"unknown event kind {kind!r}")
