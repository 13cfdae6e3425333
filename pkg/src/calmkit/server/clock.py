"""Injected clock so the simulator can drive the service at virtual time."""

from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now_ms(self) -> int: ...


class RealClock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)


class VirtualClock:
    """Manually advanced clock; time never moves on its own."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def set(self, t_ms: int) -> None:
        if t_ms < self._now:
            raise ValueError(f"virtual time cannot go backwards ({t_ms} < {self._now})")
        self._now = t_ms

    def advance(self, delta_ms: int) -> int:
        self.set(self._now + delta_ms)
        return self._now
