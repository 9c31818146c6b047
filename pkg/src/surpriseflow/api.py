"""HTTP and push-channel surface of the elicitation engine.

Request/response endpoints mirror the engine actions one-to-one; every
rejection carries the engine's machine-readable reason code.  A WebSocket
channel per game broadcasts state transitions immediately and live median
snapshots on a configurable interval, so dashboards never poll.
"""

from __future__ import annotations

import asyncio
import json
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .curves import CurveError
from .scoring import ScoringError
from .service import ElicitationEngine, ServiceError
from .storage import EventLogWriter

__all__ = ["ServiceConfig", "load_config", "create_app"]

ENV_PREFIX = "SURPRISEFLOW_"

ERROR_STATUS = {
    "unknown_game": 404,
    "unknown_subject": 404,
    "wrong_state": 409,
    "duplicate_game": 409,
    "duplicate_rating": 409,
    "outcome_already_declared": 409,
    "no_outcome": 409,
}


@dataclass(frozen=True)
class ServiceConfig:
    bind: str = "127.0.0.1"
    port: int = 8400
    default_budget: float = 600.0
    data_dir: str = "data"
    broadcast_interval: float = 1.0
    durable_log: bool = True

    @property
    def log_path(self) -> Path:
        return Path(self.data_dir) / "events.log"


def load_config(path: str | os.PathLike | None = None) -> ServiceConfig:
    """Read the JSON config file, then apply environment overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(raw) - {f.name for f in ServiceConfig.__dataclass_fields__.values()}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    env_casts = {
        "bind": str,
        "port": int,
        "default_budget": float,
        "data_dir": str,
        "broadcast_interval": float,
        "durable_log": lambda v: v.lower() in ("1", "true", "yes"),
    }
    for key, cast in env_casts.items():
        value = os.environ.get(ENV_PREFIX + key.upper())
        if value is not None:
            raw[key] = cast(value)
    return ServiceConfig(**raw)


class CreateGameBody(BaseModel):
    blue: str
    red: str
    budget: float | None = None
    game_id: str | None = None


class PreferenceBody(BaseModel):
    subject_id: str
    side: str


class ProbabilityBody(BaseModel):
    subject_id: str
    p: float


class RatingBody(BaseModel):
    subject_id: str
    rating: float


class OutcomeBody(BaseModel):
    winner: str


@dataclass
class GameChannel:
    """WebSocket fan-out for one game."""

    sockets: set[WebSocket] = field(default_factory=set)

    async def send(self, message: dict) -> None:
        dead = []
        for ws in self.sockets:
            try:
                await ws.send_json(message)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.sockets.discard(ws)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    writer = EventLogWriter(config.log_path, durable=config.durable_log)
    engine = ElicitationEngine(sink=writer.append)
    channels: dict[str, GameChannel] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(broadcast_loop())
        yield
        task.cancel()
        writer.close()

    app = FastAPI(title="surpriseflow", version="0.1.0", lifespan=lifespan)
    app.state.engine = engine
    app.state.config = config

    def channel(game_id: str) -> GameChannel:
        return channels.setdefault(game_id, GameChannel())

    async def announce(game_id: str, message: dict) -> None:
        await channel(game_id).send(message)

    def state_message(game_id: str) -> dict:
        session = engine.sessions[game_id]
        return {
            "type": "state",
            "game_id": game_id,
            "state": session.stage,
            "blue": session.blue_team,
            "red": session.red_team,
            "outcome": session.outcome,
        }

    def snapshot_message(game_id: str) -> dict | None:
        try:
            snap = engine.snapshot(game_id)
        except ServiceError:
            return None
        return {
            "type": "snapshot",
            "game_id": game_id,
            "blue_probability": snap.blue_probability,
            "red_probability": snap.red_probability,
            "n_subjects": snap.n_subjects,
            "elapsed": snap.elapsed,
            "curve": {
                "breakpoints": list(snap.median.breakpoints),
                "values": list(snap.median.values),
                "start": snap.median.start,
                "end": snap.median.end,
            },
        }

    @app.exception_handler(ServiceError)
    async def service_error(_, exc: ServiceError):
        return JSONResponse(
            status_code=ERROR_STATUS.get(exc.code, 400),
            content={"error": exc.code, "detail": str(exc)},
        )

    @app.exception_handler(CurveError)
    async def curve_error(_, exc: CurveError):
        return JSONResponse(status_code=400, content={"error": exc.code, "detail": str(exc)})

    @app.exception_handler(ScoringError)
    async def scoring_error(_, exc: ScoringError):
        return JSONResponse(status_code=400, content={"error": exc.code, "detail": str(exc)})

    @app.post("/games", status_code=201)
    async def create_game(body: CreateGameBody):
        budget = config.default_budget if body.budget is None else body.budget
        session = engine.create_game(body.blue, body.red, budget, game_id=body.game_id)
        return {"game_id": session.game_id, "state": session.stage, "budget": session.budget}

    async def transition(game_id: str, action) -> dict:
        action(game_id)
        message = state_message(game_id)
        await announce(game_id, message)
        return message

    @app.post("/games/{game_id}/open")
    async def open_preferences(game_id: str):
        return await transition(game_id, engine.open_preferences)

    @app.post("/games/{game_id}/start")
    async def start_game(game_id: str):
        return await transition(game_id, engine.start_game)

    @app.post("/games/{game_id}/end")
    async def end_game(game_id: str):
        return await transition(game_id, engine.end_game)

    @app.post("/games/{game_id}/preference")
    async def submit_preference(game_id: str, body: PreferenceBody):
        event = engine.submit_preference(game_id, body.subject_id, body.side)
        return {"accepted": True, "seq": event.seq, "side": event.payload["side"]}

    @app.post("/games/{game_id}/prior")
    async def submit_prior(game_id: str, body: ProbabilityBody):
        event = engine.submit_prior(game_id, body.subject_id, body.p)
        return {"accepted": True, "seq": event.seq}

    @app.post("/games/{game_id}/update")
    async def submit_update(game_id: str, body: ProbabilityBody):
        event = engine.submit_update(game_id, body.subject_id, body.p)
        return {"accepted": True, "seq": event.seq, "t": event.payload["t"]}

    @app.post("/games/{game_id}/rating")
    async def submit_rating(game_id: str, body: RatingBody):
        event = engine.submit_rating(game_id, body.subject_id, body.rating)
        return {"accepted": True, "seq": event.seq}

    @app.post("/games/{game_id}/outcome")
    async def declare_outcome(game_id: str, body: OutcomeBody):
        engine.declare_outcome(game_id, body.winner)
        message = state_message(game_id)
        await announce(game_id, message)
        return message

    @app.get("/games/{game_id}/snapshot")
    async def snapshot(game_id: str):
        message = snapshot_message(game_id)
        if message is None:
            # surface the underlying rejection
            engine.snapshot(game_id)
        return message

    @app.get("/games/{game_id}/settlement")
    async def settlement(game_id: str):
        result = engine.settle(game_id)
        await announce(game_id, state_message(game_id))
        return {
            "game_id": result.game_id,
            "budget": result.budget,
            "mean_score": result.mean_score,
            "scores": result.scores,
            "rewards": result.rewards,
        }

    @app.get("/games/{game_id}/state")
    async def game_state(game_id: str):
        engine._session(game_id)
        return state_message(game_id)

    @app.websocket("/ws")
    async def push_channel(ws: WebSocket, game: str):
        await ws.accept()
        chan = channel(game)
        chan.sockets.add(ws)
        try:
            if game in engine.sessions:
                await ws.send_json(state_message(game))
                snap = snapshot_message(game)
                if snap is not None:
                    await ws.send_json(snap)
            while True:
                await ws.receive_text()
        except WebSocketDisconnect:
            pass
        finally:
            chan.sockets.discard(ws)

    async def broadcast_loop():
        while True:
            await asyncio.sleep(config.broadcast_interval)
            for game_id, session in list(engine.sessions.items()):
                if session.stage == "live" and channels.get(game_id, GameChannel()).sockets:
                    snap = snapshot_message(game_id)
                    if snap is not None:
                        await announce(game_id, snap)

    return app
