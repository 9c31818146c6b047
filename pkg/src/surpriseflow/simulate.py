"""Synthetic game generator with a planted rating model.

Games are driven through the real elicitation engine, so the emitted event
stream is state-machine-legal by construction and replays cleanly.  A
latent blue-win probability follows a clamped random walk that is pulled
toward the drawn outcome as the game closes; subjects observe it with
noise at Poisson-distributed times.  Post-game ratings follow

    rating = beta0 + beta_surp2 * (second-half surprise of the median curve) + N(0, sigma)

rounded to the 1..9 Likert grid when sigma > 0.  With sigma = 0 the exact
planted value is emitted instead, which lets the analysis pipeline verify
coefficient recovery with R^2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .curves import half_surprises, median_curve
from .service import ElicitationEngine, ElicitationEvent

__all__ = ["SimulationConfig", "simulate_events"]

LATENT_STEP_SECONDS = 20.0


@dataclass(frozen=True)
class SimulationConfig:
    games: int = 10
    subjects: int = 12
    update_rate: float = 5.87
    beta0: float = 4.783
    beta_surp2: float = 1.743
    sigma: float = 1.0
    seed: int = 42
    duration_range: tuple[float, float] = (1700.0, 2600.0)
    budget: float = 600.0

    def __post_init__(self) -> None:
        if self.games <= 0 or self.subjects <= 0:
            raise ValueError("games and subjects must be positive")
        if self.update_rate < 0 or self.sigma < 0 or self.budget < 0:
            raise ValueError("update_rate, sigma and budget must be >= 0")
        lo, hi = self.duration_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad duration range {self.duration_range}")


def _latent_path(rng: np.random.Generator, duration: float, outcome: int) -> np.ndarray:
    """Clamped random walk on [0.02, 0.98], forced to the outcome at the end."""
    steps = int(duration // LATENT_STEP_SECONDS) + 2
    target = 0.97 if outcome else 0.03
    w = float(np.clip(0.5 + rng.normal(0.0, 0.18), 0.15, 0.85))
    path = np.empty(steps)
    for k in range(steps):
        frac = min(k * LATENT_STEP_SECONDS / duration, 1.0)
        # movement picks up as the game develops; the pull settles the winner
        scale = 0.035 * (0.5 + 1.1 * frac)
        w += rng.normal(0.0, scale) + (frac**3) * 0.35 * (target - w)
        w = float(np.clip(w, 0.02, 0.98))
        path[k] = w
    path[-1] = target
    return path


def _latent_at(path: np.ndarray, t: float) -> float:
    idx = min(int(t // LATENT_STEP_SECONDS), len(path) - 1)
    return float(path[idx])


def _observe(rng: np.random.Generator, latent: float, noise: float) -> float:
    # subjects report on a whole-percent slider
    p = float(np.clip(latent + rng.normal(0.0, noise), 0.0, 1.0))
    return round(p * 100) / 100.0


def simulate_events(config: SimulationConfig) -> list[ElicitationEvent]:
    """Produce the full event log of ``config.games`` synthetic games."""
    rng = np.random.default_rng(config.seed)
    events: list[ElicitationEvent] = []
    engine = ElicitationEngine(sink=events.append)
    obs_noise = 0.06

    for g in range(config.games):
        gid = f"sim{g:04d}"
        base = 1_600_000_000.0 + g * 100_000.0
        duration = round(float(rng.uniform(*config.duration_range)), 3)
        outcome = int(rng.integers(0, 2))
        path = _latent_path(rng, duration, outcome)
        pref_bias = float(rng.uniform(0.1, 0.9))

        engine.create_game(f"blue{g:04d}", f"red{g:04d}", config.budget, game_id=gid, ts=base)
        engine.open_preferences(gid, ts=base + 10.0)

        start_ts = base + 600.0
        subject_ids = [f"s{j:03d}" for j in range(config.subjects)]
        updates: list[tuple[float, str, float]] = []
        for j, sid in enumerate(subject_ids):
            u = rng.random()
            side = "blue" if u < 0.8 * pref_bias else "red" if u < 0.8 else "neutral"
            engine.submit_preference(gid, sid, side, ts=base + 20.0 + j)
            prior = _observe(rng, _latent_at(path, 0.0), obs_noise)
            engine.submit_prior(gid, sid, prior, ts=base + 21.0 + j)
            n_updates = int(rng.poisson(config.update_rate))
            times = np.sort(rng.uniform(0.0, duration, size=n_updates))
            last = 0.0
            for t in times:
                t = round(float(t), 3)
                if t <= last or t >= duration:
                    continue
                updates.append((t, sid, _observe(rng, _latent_at(path, t), obs_noise)))
                last = t

        engine.start_game(gid, ts=start_ts)
        updates.sort(key=lambda item: (item[0], item[1]))
        for t, sid, p in updates:
            engine.submit_update(gid, sid, p, ts=start_ts + t, t=t)
        engine.end_game(gid, ts=start_ts + duration)
        engine.declare_outcome(gid, "blue" if outcome else "red", ts=start_ts + duration + 30.0)

        session = engine.sessions[gid]
        curves = [engine.subject_curve(gid, sid) for sid in subject_ids]
        _, surp2 = half_surprises(median_curve(curves))
        planted = config.beta0 + config.beta_surp2 * surp2
        for j, sid in enumerate(subject_ids):
            if config.sigma > 0:
                value = float(np.clip(planted + rng.normal(0.0, config.sigma), 1.0, 9.0))
                value = float(round(value))
            else:
                value = float(np.clip(planted, 1.0, 9.0))
            engine.submit_rating(gid, sid, value, ts=start_ts + duration + 60.0 + j)
        engine.settle(gid, ts=start_ts + duration + 120.0)
        assert session.stage == "settled"
    return events


def write_simulation(config: SimulationConfig, path) -> list[ElicitationEvent]:
    from .storage import append_events

    events = simulate_events(config)
    append_events(path, events)
    return events
