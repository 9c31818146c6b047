"""Durable append-only event log and analysis-ready file exports.

The log is newline-delimited JSON, one event per line, UTF-8.  Each line
parses independently, so a crash can only damage the final line; that tail
is quarantined (warning + truncate) while everything before it stays
readable.  A bad line anywhere else is a hard error.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import GameRecord, SurpriseSummary, summarize_game
from .scoring import Settlement, round_payouts_to_cents
from .service import ElicitationEngine, ElicitationEvent, ServiceError, replay_events

__all__ = [
    "LogCorruptionError",
    "EventLogWriter",
    "event_to_json",
    "event_from_json",
    "read_event_log",
    "append_events",
    "import_log",
    "replay_engine",
    "export_summaries",
    "export_payouts",
    "SUMMARY_HEADER",
]

logger = logging.getLogger(__name__)

SUMMARY_HEADER = (
    "game_id",
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
    "rubbish_time_p70",
    "category",
)


class LogCorruptionError(ValueError):
    def __init__(self, path: os.PathLike | str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def event_to_json(event: ElicitationEvent) -> str:
    record = {
        "seq": event.seq,
        "ts": event.ts,
        "game": event.game_id,
        "subject": event.subject_id,
        "kind": event.kind,
        "payload": event.payload,
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def event_from_json(line: str) -> ElicitationEvent:
    record = json.loads(line)
    return ElicitationEvent(
        seq=record["seq"],
        ts=record["ts"],
        game_id=record["game"],
        kind=record["kind"],
        subject_id=record.get("subject"),
        payload=record.get("payload") or {},
    )


class EventLogWriter:
    """Single-writer append channel; each event is written and flushed as
    one line.  ``durable=True`` additionally fsyncs per event."""

    def __init__(self, path: os.PathLike | str, durable: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._durable = durable

    def append(self, event: ElicitationEvent) -> None:
        self._fh.write(event_to_json(event) + "\n")
        self._fh.flush()
        if self._durable:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def append_events(path: os.PathLike | str, events: Iterable[ElicitationEvent]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for event in events:
            fh.write(event_to_json(event) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_event_log(path: os.PathLike | str, truncate_partial: bool = True) -> list[ElicitationEvent]:
    """Parse the log; quarantine a partial trailing line, fail on mid-file rot.

    The writer terminates every record with a newline, so a final line
    without one is a crash artifact regardless of its content.
    """
    path = Path(path)
    raw = path.read_bytes()
    tail = b""
    if raw and not raw.endswith(b"\n"):
        cut = raw.rfind(b"\n") + 1
        raw, tail = raw[:cut], raw[cut:]
    events: list[ElicitationEvent] = []
    for line_no, chunk in enumerate(raw.split(b"\n"), start=1):
        stripped = chunk.strip()
        if not stripped:
            continue
        try:
            events.append(event_from_json(stripped.decode("utf-8")))
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            raise LogCorruptionError(path, line_no, f"unparseable event line: {exc}") from exc
    if tail:
        logger.warning(
            "%s: quarantined %d-byte partial trailing line (crash artifact)", path, len(tail)
        )
        if truncate_partial:
            with open(path, "r+b") as fh:
                fh.truncate(len(raw))
    return events


def replay_engine(path: os.PathLike | str) -> ElicitationEngine:
    """Rebuild the full engine state from a log file."""
    events = read_event_log(path)
    by_game: dict[str, int] = {}
    for event in events:
        last = by_game.get(event.game_id, 0)
        if event.seq != last + 1:
            raise ServiceError(
                "tampered_log",
                f"game {event.game_id}: sequence {event.seq} after {last}",
            )
        by_game[event.game_id] = event.seq
    return replay_events(events)


def import_log(path: os.PathLike | str) -> list[GameRecord]:
    """Replay a log and return analysis records for every finished game.

    Finished means ended with a declared outcome (settled or not).  Games
    still in progress are skipped.
    """
    engine = replay_engine(path)
    records = []
    for gid in sorted(engine.sessions):
        session = engine.sessions[gid]
        if session.stage in ("ended", "settled") and session.outcome is not None:
            records.append(engine.game_record(gid))
    return records


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def export_summaries(
    records: Sequence[GameRecord],
    path: os.PathLike | str,
    rubbish_threshold: float = 0.7,
) -> list[SurpriseSummary]:
    """Write the per-game summary table; one row per game, ordered by id."""
    summaries = [
        summarize_game(r, rubbish_threshold=rubbish_threshold)
        for r in sorted(records, key=lambda r: r.game_id)
    ]
    lines = [",".join(SUMMARY_HEADER)]
    for s in summaries:
        lines.append(
            ",".join(
                (
                    s.game_id,
                    str(s.n_subjects),
                    _fmt(s.avg_rating),
                    _fmt(s.duration_min),
                    _fmt(s.peak_time_min),
                    _fmt(s.surp_first_half),
                    _fmt(s.surp_second_half),
                    _fmt(s.peak_surprise),
                    _fmt(s.end_surprise),
                    _fmt(s.overall_surprise),
                    _fmt(s.comeback_size),
                    str(s.leader_changes),
                    _fmt(s.rubbish_time),
                    s.category,
                )
            )
        )
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return summaries


def export_payouts(settlements: Sequence[Settlement], path: os.PathLike | str) -> None:
    """Payout file: rewards rounded to cents, per-game totals preserved."""
    lines = ["subject_id,game_id,reward"]
    for settlement in sorted(settlements, key=lambda s: s.game_id):
        sids = sorted(settlement.rewards)
        cents = round_payouts_to_cents([settlement.rewards[sid] for sid in sids], settlement.budget)
        for sid, amount in zip(sids, cents):
            lines.append(f"{sid},{settlement.game_id},{amount:.2f}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
