"""Daily weather series driving the LNAS growth model."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

WEATHER_HEADER = ("day", "temp_c", "rad_mj")


@dataclass(frozen=True)
class Weather:
    """Temperature (deg C) and radiation (MJ/m2) for days 1..len."""

    temp_c: np.ndarray
    rad_mj: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.temp_c, dtype=float)
        r = np.asarray(self.rad_mj, dtype=float)
        if t.shape != r.shape or t.ndim != 1:
            raise ConfigurationError("temperature and radiation series must be 1-d and of equal length")
        if np.any(r < 0):
            raise ConfigurationError("radiation must be non-negative")
        object.__setattr__(self, "temp_c", t)
        object.__setattr__(self, "rad_mj", r)

    def __len__(self):
        return len(self.temp_c)

    def day(self, n: int) -> tuple[float, float]:
        """Weather on day ``n`` (1-based, matching the filtering step)."""
        if not 1 <= n <= len(self):
            raise ConfigurationError(f"weather series has {len(self)} days, step {n} requested")
        return float(self.temp_c[n - 1]), float(self.rad_mj[n - 1])


def synthetic_weather(
    horizon: int,
    seed: int,
    temp_mean: float = 12.0,
    temp_amp: float = 8.0,
    temp_sd: float = 2.0,
    rad_mean: float = 15.0,
    rad_amp: float = 10.0,
    rad_sd: float = 3.0,
) -> Weather:
    """Seasonal sinusoid plus seeded Gaussian noise.

    Temperature is clipped to [-5, 35] deg C and radiation to >= 0.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    days = np.arange(1, horizon + 1)
    season = np.sin(2 * np.pi * days / 365.0)
    temp = temp_mean + temp_amp * season + temp_sd * rng.standard_normal(horizon)
    rad = rad_mean + rad_amp * season + rad_sd * rng.standard_normal(horizon)
    return Weather(np.clip(temp, -5.0, 35.0), np.maximum(rad, 0.0))


def read_weather_csv(path) -> Weather:
    """Parse a ``day,temp_c,rad_mj`` file; errors carry the offending line number."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"weather file not found: {path}")
    temps, rads = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != WEATHER_HEADER:
            raise ConfigurationError(f"{path}:1: expected header {','.join(WEATHER_HEADER)}, got {header}")
        prev_day = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ConfigurationError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                day = int(row[0])
                t = float(row[1])
                r = float(row[2])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
            if day != prev_day + 1:
                raise ConfigurationError(
                    f"{path}:{lineno}: day must increase by one from 1, got {day} after {prev_day}"
                )
            if r < 0 or not np.isfinite(t) or not np.isfinite(r):
                raise ConfigurationError(f"{path}:{lineno}: invalid values {row}")
            prev_day = day
            temps.append(t)
            rads.append(r)
    if not temps:
        raise ConfigurationError(f"{path}: no data rows")
    return Weather(np.array(temps), np.array(rads))


def write_weather_csv(weather: Weather, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WEATHER_HEADER)
        for i, (t, r) in enumerate(zip(weather.temp_c, weather.rad_mj), start=1):
            w.writerow([i, f"{t:.17g}", f"{r:.17g}"])
