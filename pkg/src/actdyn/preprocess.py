"""Raw contribution events to the smoothed weekly activity the estimator eats.

Pipeline: count events per user per UTC day, smooth with a trailing rolling
mean, sum per ISO calendar week, then drop near-silent users and partially
covered boundary weeks and keep the trailing estimation window.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .graph import ContributionEvent

_SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class PreprocessConfig:
    rolling_window_days: int = 7
    min_total_activity: float = 1.0
    window_weeks: int = 52
    lead_weeks: int = 3

    def __post_init__(self):
        if self.rolling_window_days < 1:
            raise InputError("rolling_window_days must be >= 1")
        if self.min_total_activity < 0:
            raise InputError("min_total_activity must be >= 0")
        if self.window_weeks < 1 or self.lead_weeks < 0:
            raise InputError("window_weeks/lead_weeks out of range")


@dataclass(frozen=True)
class DailySeries:
    """Per-user activity on a dense range of UTC days."""

    users: list[str]
    days: list[date]
    values: np.ndarray  # (n_users, n_days)
    provenance: str  # raw | smoothed

    def __post_init__(self):
        if self.values.shape != (len(self.users), len(self.days)):
            raise InputError("daily matrix shape mismatch")


@dataclass(frozen=True)
class ActivitySeries:
    """Per-user, per-week activity with calendar metadata.

    weeks are consecutive ISO weeks, each labeled by its Monday.
    week_day_counts (when known) records how many days of data fell into
    each week; it is what filter_and_trim uses to drop boundary weeks.
    """

    users: list[str]
    weeks: list[date]
    values: np.ndarray  # (n_users, n_weeks)
    provenance: str = "raw"
    week_day_counts: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.values.shape != (len(self.users), len(self.weeks)):
            raise InputError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.users)} users x {len(self.weeks)} weeks"
            )
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise InputError("activity values must be finite and >= 0")
        for prev, cur in zip(self.weeks, self.weeks[1:]):
            if cur - prev != timedelta(days=7):
                raise InputError(f"weeks not consecutive: {prev} -> {cur}")
        if self.week_day_counts is not None and len(self.week_day_counts) != len(
            self.weeks
        ):
            raise InputError("week_day_counts length mismatch")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_weeks(self) -> int:
        return len(self.weeks)

    def aggregate(self) -> np.ndarray:
        """Total activity per week, summed over users."""
        return self.values.sum(axis=0)

    def window(self, start: int, stop: int) -> "ActivitySeries":
        """Consecutive-week slice [start, stop)."""
        counts = (
            self.week_day_counts[start:stop]
            if self.week_day_counts is not None
            else None
        )
        return ActivitySeries(
            users=list(self.users),
            weeks=self.weeks[start:stop],
            values=self.values[:, start:stop].copy(),
            provenance=self.provenance,
            week_day_counts=counts,
        )


def _utc_day(timestamp: float) -> int:
    return int(np.floor(timestamp / _SECONDS_PER_DAY))


def _day_to_date(day: int) -> date:
    return date(1970, 1, 1) + timedelta(days=day)


def iso_week_start(d: date) -> date:
    """Monday of d's ISO calendar week."""
    year, week, _ = d.isocalendar()
    return date.fromisocalendar(year, week, 1)


def bin_daily(events: Sequence[ContributionEvent]) -> DailySeries:
    """Integer event counts per user per UTC day, dense over the full range."""
    if not events:
        raise InputError("no events")
    days = [_utc_day(ev.timestamp) for ev in events]
    day_min, day_max = min(days), max(days)
    n_days = day_max - day_min + 1

    users: dict[str, int] = {}
    for ev in sorted(events, key=lambda e: (e.timestamp, e.user)):
        users.setdefault(ev.user, len(users))

    values = np.zeros((len(users), n_days))
    for ev, day in zip(events, days):
        values[users[ev.user], day - day_min] += 1

    dates = [_day_to_date(d) for d in range(day_min, day_max + 1)]
    return DailySeries(list(users), dates, values, provenance="raw")


def rolling_mean(daily: DailySeries, window_days: int) -> DailySeries:
    """Trailing rolling mean; the first window_days-1 days average over
    whatever history exists."""
    if window_days < 1:
        raise InputError("window_days must be >= 1")
    values = daily.values
    n_days = values.shape[1]
    csum = np.cumsum(values, axis=1)
    out = np.empty_like(values, dtype=float)
    for d in range(n_days):
        lo = d - window_days + 1
        total = csum[:, d] - (csum[:, lo - 1] if lo > 0 else 0.0)
        out[:, d] = total / (d - max(lo, 0) + 1)
    return DailySeries(list(daily.users), list(daily.days), out, provenance="smoothed")


def bin_weekly(daily: DailySeries) -> ActivitySeries:
    """Sum daily values into ISO calendar weeks (labeled by their Monday)."""
    week_of = [iso_week_start(d) for d in daily.days]
    weeks: list[date] = []
    for w in week_of:
        if not weeks or w != weeks[-1]:
            weeks.append(w)
    index = {w: i for i, w in enumerate(weeks)}

    values = np.zeros((len(daily.users), len(weeks)))
    counts = [0] * len(weeks)
    for col, w in enumerate(week_of):
        values[:, index[w]] += daily.values[:, col]
        counts[index[w]] += 1

    return ActivitySeries(
        users=list(daily.users),
        weeks=weeks,
        values=values,
        provenance=daily.provenance,
        week_day_counts=tuple(counts),
    )


def filter_and_trim(series: ActivitySeries, cfg: PreprocessConfig) -> ActivitySeries:
    """Trim boundary weeks and the observation window, then drop quiet users.

    Boundary weeks with fewer than 7 days of data are removed (only possible
    when day coverage is known), the series is cut to the last
    window_weeks + lead_weeks weeks (with a warning if it is shorter), and
    users whose total activity within that span is below min_total_activity
    are dropped. Trimming first keeps the operation idempotent and matches
    filtering "during the observation period".
    """
    start, stop = 0, series.n_weeks
    if series.week_day_counts is not None:
        if stop - start > 0 and series.week_day_counts[start] < 7:
            start += 1
        if stop - start > 0 and series.week_day_counts[stop - 1] < 7:
            stop -= 1
    if stop <= start:
        raise InputError("no fully covered weeks left after boundary trimming")

    keep = cfg.window_weeks + cfg.lead_weeks
    if stop - start > keep:
        start = stop - keep
    elif stop - start < keep:
        warnings.warn(
            f"series has only {stop - start} usable weeks, fewer than the "
            f"requested {keep} ({cfg.window_weeks}+{cfg.lead_weeks})",
            stacklevel=2,
        )
    trimmed = series.window(start, stop)

    totals = trimmed.values.sum(axis=1)
    mask = totals >= cfg.min_total_activity
    if not np.any(mask):
        raise InputError("empty dataset: no user meets the activity threshold")
    kept = [u for u, keep_u in zip(trimmed.users, mask) if keep_u]
    return ActivitySeries(
        users=kept,
        weeks=trimmed.weeks,
        values=trimmed.values[mask],
        provenance=trimmed.provenance,
        week_day_counts=trimmed.week_day_counts,
    )


def preprocess_events(
    events: Sequence[ContributionEvent], cfg: PreprocessConfig | None = None
) -> ActivitySeries:
    """The full pipeline: daily counts -> rolling mean -> weekly -> trim/filter."""
    cfg = cfg or PreprocessConfig()
    daily = bin_daily(events)
    smoothed = rolling_mean(daily, cfg.rolling_window_days)
    weekly = bin_weekly(smoothed)
    return filter_and_trim(weekly, cfg)


# -- CSV interchange ------------------------------------------------------------


def write_activity_csv(series: ActivitySeries, path: str | Path) -> None:
    """Long-format export: user,week_start,value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "week_start", "value"])
        for i, user in enumerate(series.users):
            for j, week in enumerate(series.weeks):
                writer.writerow([user, week.isoformat(), repr(float(series.values[i, j]))])


def read_activity_csv(path: str | Path) -> ActivitySeries:
    users: dict[str, int] = {}
    weeks: dict[date, None] = {}
    cells: list[tuple[str, date, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != [
            "user",
            "week_start",
            "value",
        ]:
            raise InputError(f"{path}: expected header user,week_start,value")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 fields")
            user, week_raw, value_raw = (c.strip() for c in row)
            try:
                week = date.fromisoformat(week_raw)
                value = float(value_raw)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            users.setdefault(user, len(users))
            weeks.setdefault(week, None)
            cells.append((user, week, value))
    if not cells:
        raise InputError(f"{path}: no activity rows")

    week_list = sorted(weeks)
    week_index = {w: i for i, w in enumerate(week_list)}
    values = np.zeros((len(users), len(week_list)))
    for user, week, value in cells:
        values[users[user], week_index[week]] = value
    return ActivitySeries(list(users), week_list, values)
