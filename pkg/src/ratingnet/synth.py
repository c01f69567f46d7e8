"""Deterministic synthetic rating streams for desk-scale runs.

Each item gets a first-rating time drawn uniformly over ``span`` and then a
Poisson stream of further ratings (exponential gaps of mean ``gap_scale``)
until ``item_lifetime`` has passed.  The expected number of ratings inside a
window ``W <= item_lifetime`` after the first one is ``1 + W / gap_scale``,
provided there are enough users to draw distinct raters from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import DAY, RatingEvent


@dataclass(frozen=True)
class SynthConfig:
    users: int = 200
    items: int = 50
    seed: int = 42
    start: int = 1_100_000_000
    span: int = 60 * DAY
    gap_scale: float = 1 * DAY
    item_lifetime: int = 30 * DAY
    rating_sd: float = 0.8
    quality_range: tuple[float, float] = (2.0, 4.6)
    activity_shape: float = 1.5
    half_stars: bool = True

    def __post_init__(self) -> None:
        if self.users < 0 or self.items < 0:
            raise ValueError("users and items must be nonnegative")
        if self.items > 0 and self.users == 0:
            raise ValueError("items need at least one user to rate them")
        if self.span < 0 or self.item_lifetime < 0 or self.start < 0:
            raise ValueError("start, span and item_lifetime must be nonnegative")
        if not self.gap_scale > 0:
            raise ValueError("gap_scale must be positive")
        if self.rating_sd < 0 or not self.activity_shape > 0:
            raise ValueError("rating_sd must be >= 0 and activity_shape > 0")
        lo, hi = self.quality_range
        if not 1.0 <= lo <= hi <= 5.0:
            raise ValueError("quality_range must lie inside [1, 5]")

    def expected_window_count(self, window: int) -> float:
        """Mean ratings per item in ``[t0, t0 + window)``, ignoring the user cap."""
        return 1.0 + min(window, self.item_lifetime) / self.gap_scale


def generate(config: SynthConfig) -> list[RatingEvent]:
    rng = np.random.default_rng(config.seed)
    activity = rng.pareto(config.activity_shape, size=config.users) + 1.0
    activity /= activity.sum() if config.users else 1.0
    step = 0.5 if config.half_stars else 1.0
    events: list[RatingEvent] = []
    for j in range(config.items):
        t0 = config.start + int(rng.integers(0, config.span + 1))
        quality = rng.uniform(*config.quality_range)
        times = [t0]
        t = float(t0)
        while True:
            t += rng.exponential(config.gap_scale)
            if t >= t0 + config.item_lifetime:
                break
            times.append(int(t))
        times = times[: config.users]
        raters = rng.choice(config.users, size=len(times), replace=False, p=activity)
        raw = rng.normal(quality, config.rating_sd, size=len(times))
        ratings = np.clip(np.round(raw / step) * step, 1.0, 5.0)
        for u, ts, r in zip(raters, times, ratings):
            events.append(RatingEvent(str(int(u) + 1), str(j + 1), float(r), int(ts)))
    events.sort(key=lambda e: (e.timestamp, int(e.user_id), int(e.item_id)))
    return events


def format_movielens(events: list[RatingEvent]) -> str:
    def rating(r: float) -> str:
        return str(int(r)) if r == int(r) else repr(r)

    return "".join(f"{e.user_id}::{e.item_id}::{rating(e.rating)}::{e.timestamp}\n" for e in events)
