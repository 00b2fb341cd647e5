"""Query scenarios: who asks what, when, and about where.

A scenario fixes everything the downstream rules need: the requested
range relative to the reference time, whether the query is boolean, any
activity mention, and the two failure flags (out of range, unknown
location).  Query text itself is templated; nothing ever parses it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime

HOURLY_THRESHOLD_HOURS = 24  # requested start under this uses hourly points

KNOWN_LOCATIONS = (
    "parker", "dallas", "seattle", "boston", "denver",
    "austin", "portland", "chicago",
)
UNKNOWN_LOCATIONS = ("zyrford", "quopolis", "blorenge")

ACTIVITIES = ("hike", "run", "picnic", "bike ride", "camping trip")
BOOLEAN_TOPICS = ("rain", "snow")

DEFAULT_OPPOSITION = (
    ("sunny", "cloudy"),
    ("sunny", "rain"),
    ("clear", "fog"),
    ("warm", "cold-snap"),
    ("dry", "rain"),
    ("dry", "snow"),
)


@dataclass(frozen=True)
class SynthConfig:
    """Everything tunable about synthesis, JSON-overridable."""

    temp_mean: float = 60.0
    temp_sd: float = 18.0
    temp_min: float = 0.0
    temp_max: float = 110.0
    cloud_mean: float = 45.0
    cloud_sd: float = 30.0
    wind_mean: float = 8.0
    wind_sd: float = 7.0
    horizon_days: int = 7  # beyond this a query is out of range
    ellipsis_probability: float = 0.35
    temp_bucket_degrees: int = 10
    opposition: tuple[tuple[str, str], ...] = DEFAULT_OPPOSITION

    def opposes(self, a: str, b: str) -> bool:
        return (a, b) in self.opposition or (b, a) in self.opposition

    @classmethod
    def from_json(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "opposition" in data:
            data = dict(data)
            data["opposition"] = tuple((a, b) for a, b in data["opposition"])
        return cls(**data)


@dataclass(frozen=True)
class QueryScenario:
    query: str
    reference: datetime
    location: str
    start_hours: int  # requested range start, hours after the reference
    duration_hours: int
    boolean_topic: str | None = None  # precipitation type asked about
    activity: str | None = None  # activity mention, drives recommendations
    out_of_range: bool = False
    unknown_location: bool = False

    @property
    def hourly(self) -> bool:
        return self.start_hours < HOURLY_THRESHOLD_HOURS


REFERENCE = datetime(2025, 4, 7, 8, 0)


def _day_phrase(start_hours: int, duration_hours: int) -> str:
    if start_hours < HOURLY_THRESHOLD_HOURS:
        return "later today"
    days = start_hours // 24
    if days == 1 and duration_hours <= 24:
        return "tomorrow"
    return f"over the next {days + duration_hours // 24} days"


def sample_scenario(rng: random.Random, config: SynthConfig) -> QueryScenario:
    """Draw one scenario; all randomness comes from the provided rng."""
    kind = rng.choices(
        ("forecast", "boolean", "activity", "out_of_range", "unknown_location"),
        weights=(46, 22, 22, 5, 5),
    )[0]
    location = rng.choice(KNOWN_LOCATIONS)
    if kind == "out_of_range":
        start_days = config.horizon_days + rng.randint(1, 7)
        start, duration = start_days * 24, 24
        query = f"What will the weather be in {location} in {start_days} days ?"
        return QueryScenario(
            query, REFERENCE, location, start, duration, out_of_range=True
        )
    if kind == "unknown_location":
        location = rng.choice(UNKNOWN_LOCATIONS)
        query = f"How is the weather in {location} tomorrow ?"
        return QueryScenario(
            query, REFERENCE, location, 24, 24, unknown_location=True
        )
    if rng.random() < 0.3:
        start = rng.randint(2, 20)  # hourly
        duration = rng.randint(3, 8)
    else:
        start = 24 * rng.randint(1, max(1, config.horizon_days - 3))
        duration = 24 * rng.randint(1, 3)
    phrase = _day_phrase(start, duration)
    if kind == "boolean":
        topic = rng.choice(BOOLEAN_TOPICS)
        query = f"Will it {topic} in {location} {phrase} ?"
        return QueryScenario(
            query, REFERENCE, location, start, duration, boolean_topic=topic
        )
    if kind == "activity":
        activity = rng.choice(ACTIVITIES)
        query = f"Is it a good time for a {activity} in {location} {phrase} ?"
        return QueryScenario(
            query, REFERENCE, location, start, duration, activity=activity
        )
    query = rng.choice(
        (
            f"What is the forecast for {location} {phrase} ?",
            f"How will the weather be in {location} {phrase} ?",
            f"Weather for {location} {phrase} ?",
        )
    )
    return QueryScenario(query, REFERENCE, location, start, duration)
