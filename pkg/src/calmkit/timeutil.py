"""Time constants and helpers.

All timestamps are integer epoch milliseconds (UTC). Participants carry a
fixed UTC offset in minutes; "local" quantities are derived by shifting the
epoch by that offset. No DST handling.
"""

from __future__ import annotations

SECOND_MS = 1_000
MINUTE_MS = 60 * SECOND_MS
HOUR_MS = 60 * MINUTE_MS
DAY_MS = 24 * HOUR_MS
WINDOW_MS = 5 * MINUTE_MS
LOOKBACK_MS = HOUR_MS

# Intraday delivery window, minutes of local day: [08:00, 20:00)
DAY_WINDOW_START_MIN = 8 * 60
DAY_WINDOW_END_MIN = 20 * 60


def to_local_ms(t_ms: int, utc_offset_minutes: int) -> int:
    return t_ms + utc_offset_minutes * MINUTE_MS


def local_day_index(t_ms: int, utc_offset_minutes: int) -> int:
    return to_local_ms(t_ms, utc_offset_minutes) // DAY_MS


def local_minute_of_day(t_ms: int, utc_offset_minutes: int) -> int:
    return (to_local_ms(t_ms, utc_offset_minutes) % DAY_MS) // MINUTE_MS


def day_minute_to_utc_ms(day_index: int, minute_of_day: int, utc_offset_minutes: int) -> int:
    """UTC epoch ms of a local (day, minute-of-day) pair."""
    return day_index * DAY_MS + minute_of_day * MINUTE_MS - utc_offset_minutes * MINUTE_MS


def align_window_start(t_ms: int) -> int:
    """Largest 5-minute grid point <= t_ms."""
    return (t_ms // WINDOW_MS) * WINDOW_MS


def in_delivery_window(t_ms: int, utc_offset_minutes: int) -> bool:
    m = local_minute_of_day(t_ms, utc_offset_minutes)
    return DAY_WINDOW_START_MIN <= m < DAY_WINDOW_END_MIN
