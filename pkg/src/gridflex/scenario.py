"""Net-load stress profiles.

Values are per-unit of the resource's rated power: positive means extra
demand the resource must serve, negative means extra generation it must
absorb. Each profile is sampled at the start of every ``dt_minutes``
interval.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

PEAK_PU = 0.5

INTERMITTENCY_MINUTES = 120
INTERMITTENCY_BLOCK_MINUTES = 5
PEAK_SHAVING_MINUTES = 1440
ENERGY_RESERVE_MINUTES = 1200

# Duck-curve shape: (center hour, full width in hours, signed peak).
DUCK_TROUGH = (12.0, 8.0, -PEAK_PU)
DUCK_PEAK = (19.0, 6.0, +PEAK_PU)

# Energy reserve steps as (start hour, end hour, value).
RESERVE_STEPS = ((0, 6, +PEAK_PU), (6, 12, 0.0), (12, 18, -PEAK_PU), (18, 20, 0.0))


class ProfileKind(str, Enum):
    INTERMITTENCY = "intermittency"
    PEAK_SHAVING = "peak-shaving"
    ENERGY_RESERVE = "energy-reserve"
    CUSTOM = "custom"


class ProfileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NetLoadProfile:
    dt_minutes: int
    values: np.ndarray
    kind: ProfileKind = ProfileKind.CUSTOM
    seed: int | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.dt_minutes <= 0:
            raise ProfileError(f"dt_minutes must be positive, got {self.dt_minutes}")
        if values.ndim != 1 or values.size == 0:
            raise ProfileError("profile must be a non-empty 1-D series")
        if not np.all(np.isfinite(values)):
            raise ProfileError("profile values must be finite")

    @property
    def steps(self) -> int:
        return int(self.values.size)

    @property
    def horizon_minutes(self) -> int:
        return self.steps * self.dt_minutes

    @property
    def minutes(self) -> np.ndarray:
        return np.arange(self.steps) * self.dt_minutes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetLoadProfile):
            return NotImplemented
        return self.dt_minutes == other.dt_minutes and np.array_equal(self.values, other.values)


def _check_dt(dt_minutes: int, horizon: int, *, must_divide: int, why: str) -> None:
    if not isinstance(dt_minutes, (int, np.integer)) or dt_minutes <= 0:
        raise ProfileError(f"dt must be a positive integer number of minutes, got {dt_minutes!r}")
    if horizon % dt_minutes:
        raise ProfileError(f"dt={dt_minutes} min does not divide the {horizon}-minute horizon")
    if must_divide % dt_minutes:
        raise ProfileError(f"dt={dt_minutes} min must divide {must_divide} min ({why})")


def gen_intermittency(seed: int, dt_minutes: int = 1) -> NetLoadProfile:
    """Two hours of sign-alternating piecewise-constant blocks.

    Block values are uniform magnitudes in [0, 0.5] with alternating sign;
    one positive block is set to exactly +0.5 and one negative block to
    exactly -0.5. Blocks last 5 minutes, or lcm(5, dt) when dt is not a
    divisor of 5, so that every block is a whole number of intervals. The
    draws depend only on the seed and the block count, so dt=1 and dt=5
    yield the same waveform.
    """
    _check_dt(dt_minutes, INTERMITTENCY_MINUTES, must_divide=INTERMITTENCY_MINUTES,
              why="horizon")
    block = math.lcm(INTERMITTENCY_BLOCK_MINUTES, int(dt_minutes))
    n_blocks = INTERMITTENCY_MINUTES // block
    if n_blocks < 2:
        raise ProfileError(
            f"dt={dt_minutes} min leaves a single {block}-minute block; "
            "at least two blocks are needed for both signed extremes"
        )
    rng = np.random.default_rng(seed)
    first_sign = 1.0 if rng.random() < 0.5 else -1.0
    signs = first_sign * (-1.0) ** np.arange(n_blocks)
    magnitudes = rng.uniform(0.0, PEAK_PU, size=n_blocks)
    pos = np.flatnonzero(signs > 0)
    neg = np.flatnonzero(signs < 0)
    magnitudes[pos[rng.integers(pos.size)]] = PEAK_PU
    magnitudes[neg[rng.integers(neg.size)]] = PEAK_PU
    blocks = signs * magnitudes
    values = np.repeat(blocks, block // dt_minutes)
    return NetLoadProfile(int(dt_minutes), values, ProfileKind.INTERMITTENCY, seed=int(seed))


def raised_cosine(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    """Unit-height raised-cosine bump supported on [center - width/2, center + width/2]."""
    x = (np.asarray(hours, dtype=float) - center) / width
    return np.where(np.abs(x) <= 0.5, 0.5 * (1.0 + np.cos(2.0 * np.pi * x)), 0.0)


def peak_shaving_value(hours: np.ndarray) -> np.ndarray:
    total = np.zeros_like(np.asarray(hours, dtype=float))
    for center, width, peak in (DUCK_TROUGH, DUCK_PEAK):
        total = total + peak * raised_cosine(hours, center, width)
    return total


def gen_peak_shaving(dt_minutes: int = 1) -> NetLoadProfile:
    """24-hour duck curve: midday generation trough plus evening demand peak."""
    _check_dt(dt_minutes, PEAK_SHAVING_MINUTES, must_divide=720,
              why="the 12:00 trough must fall on a sample")
    hours = np.arange(0, PEAK_SHAVING_MINUTES, dt_minutes) / 60.0
    return NetLoadProfile(int(dt_minutes), peak_shaving_value(hours), ProfileKind.PEAK_SHAVING)


def gen_energy_reserve(dt_minutes: int = 1) -> NetLoadProfile:
    """20-hour step profile: +0.5 for 6 h, 0 for 6 h, -0.5 for 6 h, 0 for 2 h."""
    _check_dt(dt_minutes, ENERGY_RESERVE_MINUTES, must_divide=120,
              why="the step changes at 6, 12 and 18 h must fall on interval boundaries")
    minutes = np.arange(0, ENERGY_RESERVE_MINUTES, dt_minutes)
    values = np.zeros(minutes.size)
    for start, end, level in RESERVE_STEPS:
        values[(minutes >= start * 60) & (minutes < end * 60)] = level
    return NetLoadProfile(int(dt_minutes), values, ProfileKind.ENERGY_RESERVE)


def builtin_profile(kind: ProfileKind | str, dt_minutes: int = 1, seed: int = 0) -> NetLoadProfile:
    kind = ProfileKind(kind)
    if kind is ProfileKind.INTERMITTENCY:
        return gen_intermittency(seed, dt_minutes)
    if kind is ProfileKind.PEAK_SHAVING:
        return gen_peak_shaving(dt_minutes)
    if kind is ProfileKind.ENERGY_RESERVE:
        return gen_energy_reserve(dt_minutes)
    raise ProfileError("custom profiles are loaded from CSV, not generated")


PROFILE_COLUMNS = ("minute", "net_pu")


def write_profile_csv(profile: NetLoadProfile, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for minute, value in zip(profile.minutes, profile.values):
            writer.writerow([int(minute), format(float(value), ".17g")])


def load_profile_csv(path: str | Path) -> NetLoadProfile:
    """Read a two-column (minute, per-unit value) CSV with a header row.

    Row numbers in error messages count data rows from 1, excluding the header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ProfileError(f"{path}: no data rows")
    minutes: list[float] = []
    values: list[float] = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) < 2:
            raise ProfileError(f"{path}: row {i}: expected 2 columns, got {len(row)}")
        for col, (text, sink) in enumerate(((row[0], minutes), (row[1], values)), start=1):
            try:
                sink.append(float(text))
            except ValueError:
                raise ProfileError(
                    f"{path}: row {i}, column {col} ({PROFILE_COLUMNS[col - 1]}): "
                    f"not a number: {text.strip()!r}"
                ) from None
            if not math.isfinite(sink[-1]):
                raise ProfileError(f"{path}: row {i}, column {col}: value is not finite")
    if len(minutes) < 2:
        raise ProfileError(f"{path}: need at least two rows to infer the interval length")
    dt = minutes[1] - minutes[0]
    if dt <= 0 or not float(dt).is_integer():
        raise ProfileError(f"{path}: row 2: interval must be a positive whole number of minutes")
    for i in range(2, len(minutes)):
        if minutes[i] - minutes[i - 1] != dt:
            raise ProfileError(
                f"{path}: row {i + 1}: non-uniform spacing "
                f"({minutes[i] - minutes[i - 1]:g} min after row {i}, expected {dt:g})"
            )
    return NetLoadProfile(int(dt), np.array(values), ProfileKind.CUSTOM)
