"""Synthetic watch and parent clients driving the server at virtual time."""

from __future__ import annotations

import bisect
import hashlib
import heapq
from typing import Callable, Sequence

import numpy as np

from ..sensing import EnergyWindow, write_windows_csv
from ..server.core import ConflictError, ExpiredError, StudyServer
from ..timeutil import (
    HOUR_MS,
    MINUTE_MS,
    WINDOW_MS,
    local_day_index,
    local_minute_of_day,
)
from .profiles import FamilyProfile

BATCH_MINUTE = 20 * 60 + 5  # one-tap end-of-day upload at 20:05 local


def make_connectivity(seed: int, p_outage_per_day: float = 0.4) -> Callable[[int], bool]:
    """Daily seeded outages: with probability p a 1-3h offline interval at a
    random daytime position. Pure function of the timestamp."""

    def online(t_ms: int) -> bool:
        day = t_ms // (24 * HOUR_MS)
        h = hashlib.sha256(f"conn:{seed}:{day}".encode()).digest()
        if h[0] / 255.0 >= p_outage_per_day:
            return True
        start_min = 8 * 60 + int.from_bytes(h[1:3], "big") % (10 * 60)
        dur_min = 60 + h[3] % 121
        minute = (t_ms % (24 * HOUR_MS)) // MINUTE_MS
        return not (start_min <= minute < start_min + dur_min)

    return online


class WatchClient:
    """Streams each 5-minute window at its timestamp when online, buffers
    offline, and performs a resumable chunked batch upload at day end."""

    def __init__(
        self,
        participant_id: str,
        utc_offset_minutes: int,
        windows: Sequence[EnergyWindow],
        server: StudyServer,
        connectivity: Callable[[int], bool],
        seed: int,
        chunk_size: int = 512,
    ):
        self.pid = participant_id
        self.offset = utc_offset_minutes
        self.server = server
        self.online = connectivity
        self.chunk_size = chunk_size
        self._rng = np.random.default_rng([seed, 0x3C])
        self._queue = sorted(windows, key=lambda w: w.window_start_ms)
        self._idx = 0
        self._unacked: list[EnergyWindow] = []
        self._last_batch_day = -1
        self.log = {"streamed": 0, "batched": 0, "sessions": 0, "resume_rounds": 0}

    def step(self, now_ms: int) -> None:
        while self._idx < len(self._queue) and (
            self._queue[self._idx].window_start_ms + WINDOW_MS <= now_ms
        ):
            w = self._queue[self._idx]
            self._idx += 1
            if self.online(now_ms):
                self.server.ingest_window(w)
                self.log["streamed"] += 1
            else:
                self._unacked.append(w)
        day = local_day_index(now_ms, self.offset)
        if (
            local_minute_of_day(now_ms, self.offset) >= BATCH_MINUTE
            and day != self._last_batch_day
        ):
            self._last_batch_day = day
            self._batch_upload(now_ms)

    def _batch_upload(self, now_ms: int) -> None:
        if not self._unacked or not self.online(now_ms):
            return
        payload = write_windows_csv(self._unacked).encode("utf-8")
        import hashlib as _h

        checksum = _h.sha256(payload).hexdigest()
        sid = self.server.open_upload(self.pid, len(payload), checksum)
        self.log["sessions"] += 1
        chunks = [
            (off, payload[off : off + self.chunk_size])
            for off in range(0, len(payload), self.chunk_size)
        ]
        order = self._rng.permutation(len(chunks))
        # first pass may disconnect mid-transfer and drop a suffix; duplicates
        # of already-sent chunks are resent to exercise idempotency
        cut = len(chunks)
        if len(chunks) > 1 and self._rng.random() < 0.5:
            cut = int(self._rng.integers(1, len(chunks)))
        for i in order[:cut]:
            off, data = chunks[i]
            self.server.upload_chunk(sid, off, data)
        if cut < len(chunks):
            # resume: query the gaps and resend, plus one duplicate
            self.log["resume_rounds"] += 1
            dup_i = int(order[int(self._rng.integers(0, cut))])
            self.server.upload_chunk(sid, chunks[dup_i][0], chunks[dup_i][1])
            for a, b in self.server.upload_status(sid)["missing"]:
                self.server.upload_chunk(sid, a, payload[a:b])
        result = self.server.finish_upload(sid)
        self.log["batched"] += result["ingested"]
        self._unacked = []

    def undelivered(self) -> list[EnergyWindow]:
        return self._unacked + self._queue[self._idx :]


SCRIPTED_END_OF_WEEK = {
    "behavior_text": "typical week",
    "efficacy_confident": 4,
    "efficacy_overwhelmed": 2,
    "efficacy_supported": 4,
    "relationship_closeness": 4,
    "relationship_positive_reinforcement": 3,
    "tech_notification_awareness": 4,
    "tech_connection_quality": 4,
    "tech_manageability": 3,
    "tech_helped_connect": 3,
    "reflection_learning_text": "noticed calm stretches",
    "reflection_change_text": "praised more often",
}


class ParentClient:
    """Polls pending prompts each virtual minute and answers per the
    perception law evaluated on the true (generated) lookback energy."""

    def __init__(
        self,
        profile: FamilyProfile,
        participant_id: str,
        server: StudyServer,
        trace_windows: Sequence[EnergyWindow],
        seed: int,
    ):
        self.profile = profile
        self.pid = participant_id
        self.server = server
        self._rng = np.random.default_rng([seed, 0x9E])
        ws = sorted(trace_windows, key=lambda w: w.window_start_ms)
        self._starts = [w.window_start_ms for w in ws]
        self._energies = np.array([w.energy for w in ws])
        self._cum = np.concatenate([[0.0], np.cumsum(self._energies)])
        self._seen: set[str] = set()
        self._heap: list[tuple[int, str, str]] = []
        self.log = {"answered": 0, "declined": 0, "missed": 0}

    def true_lookback(self, t_ms: int) -> float:
        lo = bisect.bisect_left(self._starts, t_ms - HOUR_MS)
        hi = bisect.bisect_left(self._starts, t_ms)
        if hi <= lo:
            return 0.0
        return float((self._cum[hi] - self._cum[lo]) / (hi - lo))

    def step(self, now_ms: int) -> None:
        while self._heap and self._heap[0][0] <= now_ms:
            at, eid, kind = heapq.heappop(self._heap)
            self._answer(eid, kind, at)
        if not self.server.has_pending(self.pid):
            return
        for ev in self.server.deliver_pending(self.pid, now_ms):
            if ev.id in self._seen:
                continue
            self._seen.add(ev.id)
            if ev.kind == "intraday":
                if self._rng.random() < self.profile.responsiveness:
                    # whole minutes so the answer lands on a poll tick before expiry
                    delay_ms = int(self._rng.uniform(0, 30)) * MINUTE_MS
                    at = max(now_ms, ev.sent_at_ms + delay_ms)
                    if at < ev.expires_at_ms:
                        heapq.heappush(self._heap, (at, ev.id, ev.kind))
                    else:
                        self.log["missed"] += 1
                else:
                    self.log["declined"] += 1
            else:
                if self._rng.random() < self.profile.daily_responsiveness:
                    delay_ms = int(self._rng.uniform(5, 120) * MINUTE_MS)
                    heapq.heappush(self._heap, (now_ms + delay_ms, ev.id, ev.kind))
                else:
                    self.log["declined"] += 1

    def _answer(self, eid: str, kind: str, now_ms: int) -> None:
        if kind == "intraday":
            noise = float(self._rng.normal(0, self.profile.noise_sd)) if self.profile.noise_sd > 0 else 0.0
            rating = self.profile.rating_for(self.true_lookback(now_ms), noise)
            items = {"activity_rating": rating, "activity_text": "playing"}
        elif kind == "end_of_day":
            items = {
                "medication_taken": bool(self._rng.random() < 0.9),
                "communication_rating": int(self._rng.integers(2, 6)),
                "reflection_text": "fine day",
            }
        else:
            items = dict(SCRIPTED_END_OF_WEEK)
        try:
            self.server.submit_response(eid, items, now_ms)
            self.log["answered"] += 1
        except (ExpiredError, ConflictError):
            self.log["missed"] += 1
