"""Prompting policy: study schedules, day planners, rate limiting, expiry.

All decisions are pure functions of (state, event) so the simulator and the
live service behave identically. Intraday prompts only exist inside the
local [08:00, 20:00) delivery window, never closer than 60 minutes apart,
and calm-triggered prompts are capped at 5 per local day.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .calibration import CalibrationModel, predict
from .sensing import MIN_COVERAGE_WINDOWS, LookbackFeature
from .timeutil import (
    DAY_WINDOW_END_MIN,
    DAY_WINDOW_START_MIN,
    HOUR_MS,
    MINUTE_MS,
)

CALM_THRESHOLD = 3.0
CALM_DAILY_CAP = 5
MIN_GAP_MIN = 60
RANDOM_SLOTS_PER_DAY = 5

EXPIRY_MS = {
    "intraday": 30 * MINUTE_MS,
    "end_of_day": 12 * HOUR_MS,
    "end_of_week": 48 * HOUR_MS,
}


class Condition(str, Enum):
    NONE = "none"
    HOURLY = "hourly"
    RANDOM = "random"
    CALM_ONLY = "calm_only"


# The two counterbalanced week-3/4 orders.
WEEK34_ORDERS = (
    (Condition.RANDOM, Condition.CALM_ONLY),
    (Condition.CALM_ONLY, Condition.RANDOM),
)


@dataclass(frozen=True)
class StudySchedule:
    participant_id: str
    week_plan: tuple[tuple[int, Condition], ...]  # (week_index 1..4, condition)
    assignment_block: int

    def __post_init__(self):
        plan = dict(self.week_plan)
        if plan.get(1) != Condition.NONE or plan.get(2) != Condition.HOURLY:
            raise ValueError("weeks 1-2 must be (none, hourly)")
        if {plan.get(3), plan.get(4)} != {Condition.RANDOM, Condition.CALM_ONLY}:
            raise ValueError("weeks 3-4 must be a permutation of (random, calm_only)")

    def condition_for_week(self, week_index: int) -> Condition:
        for w, c in self.week_plan:
            if w == week_index:
                return c
        # past the planned study: keep the final week's condition
        return self.week_plan[-1][1]


def counterbalanced_schedule(participant_id: str, position: int, seed: int) -> StudySchedule:
    """Schedule for the participant at 0-based enrollment position.

    Blocks of 2: the first member's week-3/4 order is drawn from the seed,
    the second gets the complement, so every completed block contains both
    orders. Stateless in the seed, so enrollment can resume after a restart.
    """
    block, slot = divmod(position, 2)
    first = day_seed(seed, "__block__", block) & 1
    order = first if slot == 0 else 1 - first
    c3, c4 = WEEK34_ORDERS[order]
    plan = ((1, Condition.NONE), (2, Condition.HOURLY), (3, c3), (4, c4))
    return StudySchedule(participant_id, plan, block)


class BlockRandomizer:
    """Counterbalanced assignment in blocks of 2, tracking enrollment order."""

    def __init__(self, seed: int):
        self._seed = seed
        self._count = 0
        self._lock = threading.Lock()

    def make_schedule(self, participant_id: str) -> StudySchedule:
        with self._lock:
            position = self._count
            self._count += 1
        return counterbalanced_schedule(participant_id, position, self._seed)


class StateError(Exception):
    """Illegal prompt-event state transition."""


@dataclass
class PromptEvent:
    id: str
    participant_id: str
    kind: str  # intraday | end_of_day | end_of_week
    condition_at_send: Condition
    scheduled_at_ms: int
    sent_at_ms: int
    expires_at_ms: int
    trigger: str  # fixed_slot | random_slot | calm_trigger | daily | weekly
    predicted: Optional[float] = None  # set for calm_trigger
    state: str = "pending"  # pending | answered | expired
    answered_at_ms: Optional[int] = None
    expired_at_ms: Optional[int] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def mark_answered(self, now_ms: int) -> bool:
        """Transition pending->answered. Closed expiry boundary: an answer at
        exactly expires_at is rejected. Returns False if already answered."""
        with self._lock:
            if self.state == "answered":
                return False
            if self.state == "expired" or now_ms >= self.expires_at_ms:
                raise StateError(
                    f"event {self.id} expired at {self.expires_at_ms}; cannot answer at {now_ms}"
                )
            self.state = "answered"
            self.answered_at_ms = now_ms
            return True

    def mark_expired(self, now_ms: int) -> bool:
        """Transition pending->expired when due; idempotent; never clobbers
        an answered event. Returns True iff a transition happened."""
        with self._lock:
            if self.state != "pending":
                return False
            if now_ms < self.expires_at_ms:
                return False
            self.state = "expired"
            self.expired_at_ms = now_ms
            return True


def make_prompt(
    event_id: str,
    participant_id: str,
    kind: str,
    condition: Condition,
    scheduled_at_ms: int,
    sent_at_ms: int,
    trigger: str,
    predicted: Optional[float] = None,
) -> PromptEvent:
    return PromptEvent(
        id=event_id,
        participant_id=participant_id,
        kind=kind,
        condition_at_send=condition,
        scheduled_at_ms=scheduled_at_ms,
        sent_at_ms=sent_at_ms,
        expires_at_ms=sent_at_ms + EXPIRY_MS[kind],
        trigger=trigger,
        predicted=predicted,
    )


@dataclass
class RateLimiterState:
    participant_id: str
    last_intraday_sent_ms: Optional[int] = None
    sent_today: int = 0
    day_anchor: int = -1  # local day index

    def roll(self, local_day: int) -> None:
        if local_day != self.day_anchor:
            self.day_anchor = local_day
            self.sent_today = 0

    def gap_ok(self, now_ms: int) -> bool:
        return (
            self.last_intraday_sent_ms is None
            or now_ms - self.last_intraday_sent_ms >= MIN_GAP_MIN * MINUTE_MS
        )

    def record_send(self, now_ms: int) -> None:
        self.last_intraday_sent_ms = now_ms
        self.sent_today += 1


def plan_hourly_day() -> list[int]:
    """Fixed intraday slots as minutes of local day: 08:00..19:00, 12 slots."""
    return [h * 60 for h in range(8, 20)]


def plan_random_day(seed: int) -> list[int]:
    """5 slot minutes in [08:00, 20:00), pairwise >= 60 min apart, uniform
    subject to the spacing constraint (rejection sampling), sorted."""
    rng = np.random.default_rng(seed)
    span = DAY_WINDOW_END_MIN - DAY_WINDOW_START_MIN
    while True:
        mins = np.sort(rng.integers(0, span, size=RANDOM_SLOTS_PER_DAY))
        if np.all(np.diff(mins) >= MIN_GAP_MIN):
            return [int(m) + DAY_WINDOW_START_MIN for m in mins]


def day_seed(study_seed: int, participant_id: str, day_index: int) -> int:
    """Stable per-participant-per-day sub-seed."""
    h = hashlib.sha256(f"{study_seed}:{participant_id}:{day_index}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def calm_tick(
    now_ms: int,
    feature: LookbackFeature,
    model: CalibrationModel,
    limiter: RateLimiterState,
    event_id: str,
    condition: Condition = Condition.CALM_ONLY,
    threshold: float = CALM_THRESHOLD,
    cap: int = CALM_DAILY_CAP,
    min_coverage: int = MIN_COVERAGE_WINDOWS,
) -> Optional[PromptEvent]:
    """Emit a calm-triggered intraday prompt iff the prediction is strictly
    below the threshold and spacing/cap allow. Low-coverage features never
    trigger. Does not check the delivery window; the caller owns local time."""
    pred = predict(model, feature, min_coverage)
    if pred is None or pred >= threshold:
        return None
    if not limiter.gap_ok(now_ms) or limiter.sent_today >= cap:
        return None
    ev = make_prompt(
        event_id,
        limiter.participant_id,
        "intraday",
        condition,
        scheduled_at_ms=now_ms,
        sent_at_ms=now_ms,
        trigger="calm_trigger",
        predicted=pred,
    )
    limiter.record_send(now_ms)
    return ev


def expire_sweep(now_ms: int, events: Iterable[PromptEvent]) -> list[PromptEvent]:
    """Expire every pending event whose deadline has passed (closed boundary:
    expires_at == now expires). Idempotent. Returns the transitioned events."""
    return [ev for ev in events if ev.mark_expired(now_ms)]


def plan_daily_weekly(study_day: int, days_per_week: int = 7) -> list[str]:
    """Survey kinds due at local 20:00 of a study day (0-based day index):
    end_of_day every day, plus end_of_week on the week's final day."""
    kinds = ["end_of_day"]
    if (study_day + 1) % days_per_week == 0:
        kinds.append("end_of_week")
    return kinds
