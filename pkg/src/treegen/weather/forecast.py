"""Synthetic forecast data backing each scenario.

Points are hourly when the requested range starts within a day,
otherwise daily.  Attributes are Gaussian draws clamped to plausible
bounds; precipitation and rare conditions are derived from temperature
and cloud cover so the corpus never contains 80-degree snow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta

from .scenario import QueryScenario, SynthConfig

FREEZING_F = 32.0
FOG_CLOUD_THRESHOLD = 70.0
STORM_PRECIP_THRESHOLD = 60.0
STORM_TEMP_THRESHOLD = 65.0


@dataclass(frozen=True)
class ForecastPoint:
    when: datetime
    temp: int
    cloud: int  # percent cover
    precip_chance: int  # percent
    precip_type: str  # "rain" | "snow" | "none"
    wind: int  # mph
    condition: str
    temp_high: int | None = None  # daily points only
    temp_low: int | None = None

    @property
    def daily(self) -> bool:
        return self.temp_high is not None


@dataclass(frozen=True)
class Forecast:
    location: str
    points: tuple[ForecastPoint, ...]
    sunrise: str = "6:44 am"
    sunset: str = "7:18 pm"

    @property
    def hourly(self) -> bool:
        return bool(self.points) and not self.points[0].daily


def _clamped_gauss(rng: random.Random, mean: float, sd: float,
                   lo: float, hi: float) -> float:
    return min(hi, max(lo, rng.gauss(mean, sd)))


def _condition(rng: random.Random, temp: float, cloud: float,
               precip_chance: float, precip_type: str) -> str:
    if precip_type == "snow" and precip_chance > 50:
        return "snow"
    if precip_type == "rain" and precip_chance > 50:
        if temp > STORM_TEMP_THRESHOLD and precip_chance > STORM_PRECIP_THRESHOLD \
                and rng.random() < 0.1:
            return "thunderstorms"
        return "rain"
    if cloud > FOG_CLOUD_THRESHOLD and rng.random() < 0.15:
        return "fog"
    if cloud > 60:
        return "cloudy"
    if cloud > 25:
        return "partly cloudy"
    return "sunny"


def _sample_point(rng: random.Random, when: datetime, config: SynthConfig,
                  base_temp: float, base_cloud: float, daily: bool) -> ForecastPoint:
    # round before deriving anything so stored values satisfy the same
    # thresholds the derivation used
    temp = round(_clamped_gauss(rng, base_temp, 4.0, config.temp_min, config.temp_max))
    cloud = round(_clamped_gauss(rng, base_cloud, 10.0, 0.0, 100.0))
    precip_chance = round(_clamped_gauss(rng, cloud * 0.6, 15.0, 0.0, 100.0))
    precip_type = "snow" if temp < FREEZING_F else "rain"
    if precip_chance < 20:
        precip_type = "none"
    wind = round(_clamped_gauss(rng, config.wind_mean, config.wind_sd, 0.0, 60.0))
    condition = _condition(rng, temp, cloud, precip_chance, precip_type)
    high = low = None
    if daily:
        spread = rng.uniform(5.0, 14.0)
        high = round(min(config.temp_max, temp + spread / 2))
        low = round(max(config.temp_min, temp - spread / 2))
    return ForecastPoint(
        when=when,
        temp=temp,
        cloud=cloud,
        precip_chance=precip_chance,
        precip_type=precip_type,
        wind=wind,
        condition=condition,
        temp_high=high,
        temp_low=low,
    )


def generate_forecast(scenario: QueryScenario, rng: random.Random | int,
                      config: SynthConfig | None = None) -> Forecast:
    """Sample weather covering the scenario's requested range."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    config = config or SynthConfig()
    # Day-level base values drift slowly so consecutive points often
    # group, which is what exercises range merging downstream.
    base_temp = _clamped_gauss(
        rng, config.temp_mean, config.temp_sd, config.temp_min, config.temp_max
    )
    base_cloud = _clamped_gauss(rng, config.cloud_mean, config.cloud_sd, 0.0, 100.0)
    points: list[ForecastPoint] = []
    if scenario.hourly:
        start = scenario.reference + timedelta(hours=scenario.start_hours)
        for h in range(scenario.duration_hours):
            when = start + timedelta(hours=h)
            points.append(
                _sample_point(rng, when, config, base_temp, base_cloud, daily=False)
            )
            base_temp += rng.gauss(0.0, 1.5)
            base_cloud += rng.gauss(0.0, 4.0)
    else:
        start_day = scenario.reference.replace(hour=12, minute=0) + timedelta(
            days=scenario.start_hours // 24
        )
        n_days = max(1, scenario.duration_hours // 24)
        for d in range(n_days):
            when = start_day + timedelta(days=d)
            points.append(
                _sample_point(rng, when, config, base_temp, base_cloud, daily=True)
            )
            base_temp += rng.gauss(0.0, 4.0)
            base_cloud += rng.gauss(0.0, 12.0)
    return Forecast(location=scenario.location, points=tuple(points))
