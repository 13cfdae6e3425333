"""The study service hub.

Holds the participant registry, energy-window store, prompt queues,
calibration dataset, and experimenter controls. Every mutation is an event
appended to an NDJSON log; replaying the log into a fresh instance rebuilds
identical state (crash durability). Randomized decisions (schedules, random
slots) are resolved before logging, so replay is pure application.
"""

from __future__ import annotations

import bisect
import hashlib
import threading
from dataclasses import dataclass, field
from typing import Optional

from .. import policy
from ..calibration import (
    DEFAULT_MIN_LABELS,
    ModelRegistry,
    PerceptionLabel,
    RegistryError,
    fit_all_scopes,
)
from ..policy import Condition, PromptEvent, RateLimiterState, StateError, StudySchedule
from ..sensing import MIN_COVERAGE_WINDOWS, EnergyWindow, LookbackFeature, read_windows_csv
from ..timeutil import (
    LOOKBACK_MS,
    day_minute_to_utc_ms,
    in_delivery_window,
    local_day_index,
)
from .clock import Clock, RealClock
from .store import EventLog
from .surveys import validate_items
from .uploads import UploadSession


class ServerError(Exception):
    pass


class NotFoundError(ServerError):
    pass


class ConflictError(ServerError):
    pass


class ExpiredError(ServerError):
    pass


class BadRequestError(ServerError):
    pass


@dataclass
class Participant:
    id: str
    alias: str
    utc_offset_minutes: int
    enrolled_at_ms: int
    schedule: StudySchedule
    study_start_day: int  # local day index of study day 0
    active: bool = True
    pin_salt: str = ""
    pin_hash: str = ""


@dataclass
class DeviceStatus:
    participant_id: str
    last_seen_ms: int = 0
    battery_pct: int = 100
    recording: bool = True
    pin_set: bool = False


@dataclass
class ServerConfig:
    study_seed: int = 0
    min_labels: int = DEFAULT_MIN_LABELS
    calm_threshold: float = policy.CALM_THRESHOLD
    calm_cap: int = policy.CALM_DAILY_CAP
    min_coverage: int = MIN_COVERAGE_WINDOWS
    study_weeks: int = 4
    days_per_week: int = 7

    @property
    def study_days(self) -> int:
        return self.study_weeks * self.days_per_week


def _pin_hash(salt: str, pin: str) -> str:
    return hashlib.sha256((salt + ":" + pin).encode()).hexdigest()


@dataclass
class _DayPlan:
    condition: Condition
    slots: list[tuple[int, str]]  # (minute_of_day, trigger)
    evening: list[str]  # survey kinds due at 20:00
    sent_minutes: set[int] = field(default_factory=set)
    evening_sent: set[str] = field(default_factory=set)


class StudyServer:
    def __init__(
        self,
        clock: Optional[Clock] = None,
        log_path: Optional[str] = None,
        config: Optional[ServerConfig] = None,
    ):
        self.clock = clock or RealClock()
        self.config = config or ServerConfig()
        self.log = EventLog(log_path)
        self._lock = threading.RLock()

        self.participants: dict[str, Participant] = {}
        self._aliases: set[str] = set()
        self.device: dict[str, DeviceStatus] = {}
        self._windows: dict[str, dict[int, EnergyWindow]] = {}
        self._win_starts: dict[str, list[int]] = {}
        self.prompts: dict[str, PromptEvent] = {}
        self._pending: dict[str, dict[str, PromptEvent]] = {}
        self.responses: dict[str, dict] = {}
        self.labels: list[PerceptionLabel] = []
        self.registry = ModelRegistry()
        self._limiters: dict[str, RateLimiterState] = {}
        self._overrides: dict[str, list[tuple[int, Condition]]] = {}
        self._plans: dict[tuple[str, int], _DayPlan] = {}
        self._uploads: dict[str, UploadSession] = {}
        self.prestudy: dict[str, dict] = {}
        self.records: list[dict] = []  # full event history, also kept in memory

        self._next_event = 0
        self._next_session = 0

    # ---------- event plumbing ----------

    def _emit(self, kind: str, payload: dict) -> None:
        record = {"kind": kind, **payload}
        self.log.append(record)
        self.records.append(record)
        self._apply(record)

    def _apply(self, record: dict) -> None:
        getattr(self, "_apply_" + record["kind"])(record)

    @classmethod
    def replay(
        cls,
        log_path: str,
        clock: Optional[Clock] = None,
        config: Optional[ServerConfig] = None,
        new_log_path: Optional[str] = None,
    ) -> "StudyServer":
        """Rebuild a server from its event log. Pass new_log_path=log_path to
        continue appending to the same file."""
        srv = cls(clock=clock, log_path=None, config=config)
        for record in EventLog.read(log_path):
            srv.records.append(record)
            srv._apply(record)
        if new_log_path is not None:
            srv.log = EventLog(new_log_path)
        return srv

    def _new_event_id(self) -> str:
        self._next_event += 1
        return f"e{self._next_event:06d}"

    # ---------- participants ----------

    def register_participant(
        self, alias: str, utc_offset_minutes: int = 0, pin: str = "0000"
    ) -> Participant:
        with self._lock:
            if not alias:
                raise BadRequestError("alias must be nonempty")
            if alias in self._aliases:
                raise ConflictError(f"alias {alias!r} already registered")
            position = len(self.participants)
            pid = f"p{position + 1:02d}"
            schedule = policy.counterbalanced_schedule(pid, position, self.config.study_seed)
            now = self.clock.now_ms()
            salt = hashlib.sha256(f"{self.config.study_seed}:{alias}".encode()).hexdigest()[:16]
            self._emit(
                "participant_registered",
                {
                    "participant_id": pid,
                    "alias": alias,
                    "utc_offset_minutes": utc_offset_minutes,
                    "enrolled_at_ms": now,
                    "study_start_day": local_day_index(now, utc_offset_minutes) + 1,
                    "week_plan": [[w, c.value] for w, c in schedule.week_plan],
                    "assignment_block": schedule.assignment_block,
                    "pin_salt": salt,
                    "pin_hash": _pin_hash(salt, pin),
                },
            )
            return self.participants[pid]

    def _apply_participant_registered(self, r: dict) -> None:
        pid = r["participant_id"]
        schedule = StudySchedule(
            pid,
            tuple((w, Condition(c)) for w, c in r["week_plan"]),
            r["assignment_block"],
        )
        p = Participant(
            id=pid,
            alias=r["alias"],
            utc_offset_minutes=r["utc_offset_minutes"],
            enrolled_at_ms=r["enrolled_at_ms"],
            schedule=schedule,
            study_start_day=r["study_start_day"],
            pin_salt=r["pin_salt"],
            pin_hash=r["pin_hash"],
        )
        self.participants[pid] = p
        self._aliases.add(p.alias)
        self.device[pid] = DeviceStatus(pid, pin_set=True)
        self._windows[pid] = {}
        self._win_starts[pid] = []
        self._pending[pid] = {}
        self._limiters[pid] = RateLimiterState(pid)
        self._overrides[pid] = []

    def _participant(self, pid: str) -> Participant:
        p = self.participants.get(pid)
        if p is None:
            raise NotFoundError(f"unknown participant {pid}")
        return p

    def submit_prestudy(self, pid: str, items: dict) -> None:
        self._participant(pid)
        canonical = validate_items("pre_study", items)
        self._emit("prestudy_submitted", {"participant_id": pid, "items": canonical})

    def _apply_prestudy_submitted(self, r: dict) -> None:
        self.prestudy[r["participant_id"]] = r["items"]

    # ---------- study timeline ----------

    def study_day(self, p: Participant, t_ms: int) -> int:
        return local_day_index(t_ms, p.utc_offset_minutes) - p.study_start_day

    def condition_at(self, pid: str, t_ms: int) -> Condition:
        p = self._participant(pid)
        latest: Optional[Condition] = None
        for eff, cond in self._overrides[pid]:
            if eff <= t_ms:
                latest = cond
        if latest is not None:
            return latest
        sd = self.study_day(p, t_ms)
        if sd < 0 or sd >= self.config.study_days:
            return Condition.NONE
        week = sd // self.config.days_per_week + 1
        return p.schedule.condition_for_week(week)

    def switch_condition(self, pid: str, condition: Condition, effective_at_ms: int) -> None:
        self._participant(pid)
        now = self.clock.now_ms()
        if effective_at_ms < now:
            raise BadRequestError(f"effective_at {effective_at_ms} is in the past (now {now})")
        self._emit(
            "condition_switched",
            {
                "participant_id": pid,
                "condition": Condition(condition).value,
                "effective_at_ms": effective_at_ms,
            },
        )

    def _apply_condition_switched(self, r: dict) -> None:
        pid = r["participant_id"]
        eff = r["effective_at_ms"]
        cond = Condition(r["condition"])
        self._overrides[pid].append((eff, cond))
        self._overrides[pid].sort(key=lambda x: x[0])
        # force re-planning of the affected day: future slots follow the new
        # condition, already-sent minutes stay sent
        p = self.participants[pid]
        sd = self.study_day(p, eff)
        plan = self._plans.get((pid, sd))
        if plan is not None:
            new = self._build_plan(p, sd, cond)
            new.sent_minutes = plan.sent_minutes
            new.evening_sent = plan.evening_sent
            self._plans[(pid, sd)] = new

    # ---------- telemetry ----------

    def ingest_window(self, window: EnergyWindow) -> dict:
        """Idempotent on (participant, window_start): identical re-ingestion is
        a no-op; a different energy for the same key is a conflict."""
        with self._lock:
            p = self._participant(window.participant_id)
            if not p.active:
                raise BadRequestError(f"participant {p.id} is inactive")
            existing = self._windows[p.id].get(window.window_start_ms)
            now = self.clock.now_ms()
            if existing is not None:
                if (
                    existing.energy == window.energy
                    and existing.sample_count == window.sample_count
                ):
                    return {"stored": False, "duplicate": True}
                raise ConflictError(
                    f"window ({p.id}, {window.window_start_ms}) already stored "
                    f"with energy {existing.energy}"
                )
            self._emit(
                "window_ingested",
                {
                    "participant_id": p.id,
                    "window_start_ms": window.window_start_ms,
                    "energy": window.energy,
                    "sample_count": window.sample_count,
                    "received_at_ms": now,
                },
            )
            self._maybe_calm_trigger(p, now)
            return {"stored": True, "duplicate": False}

    def _apply_window_ingested(self, r: dict) -> None:
        pid = r["participant_id"]
        w = EnergyWindow(pid, r["window_start_ms"], r["energy"], r["sample_count"])
        self._windows[pid][w.window_start_ms] = w
        bisect.insort(self._win_starts[pid], w.window_start_ms)
        dev = self.device[pid]
        dev.last_seen_ms = max(dev.last_seen_ms, r["received_at_ms"])

    def lookback(self, pid: str, as_of_ms: int) -> LookbackFeature:
        self._participant(pid)
        starts = self._win_starts[pid]
        lo = bisect.bisect_left(starts, as_of_ms - LOOKBACK_MS)
        hi = bisect.bisect_left(starts, as_of_ms)
        vals = []
        for i in range(lo, hi):
            w = self._windows[pid][starts[i]]
            if not w.absent:
                vals.append(w.energy)
        if not vals:
            return LookbackFeature(as_of_ms, 0.0, 0)
        return LookbackFeature(as_of_ms, sum(vals) / len(vals), len(vals))

    # ---------- calm trigger (evaluated on every ingested window) ----------

    def _maybe_calm_trigger(self, p: Participant, now_ms: int) -> None:
        if self.condition_at(p.id, now_ms) != Condition.CALM_ONLY:
            return
        if not in_delivery_window(now_ms, p.utc_offset_minutes):
            return
        try:
            model = self.registry.select(p.id, self.config.min_labels)
        except RegistryError:
            return
        feature = self.lookback(p.id, now_ms)
        limiter = self._limiters[p.id]
        limiter.roll(local_day_index(now_ms, p.utc_offset_minutes))
        # dry-run against a copy: the real limiter update happens in apply
        probe = RateLimiterState(
            p.id, limiter.last_intraday_sent_ms, limiter.sent_today, limiter.day_anchor
        )
        ev = policy.calm_tick(
            now_ms,
            feature,
            model,
            probe,
            event_id="probe",
            threshold=self.config.calm_threshold,
            cap=self.config.calm_cap,
            min_coverage=self.config.min_coverage,
        )
        if ev is None:
            return
        self._create_prompt(
            p.id,
            "intraday",
            Condition.CALM_ONLY,
            scheduled_at_ms=now_ms,
            sent_at_ms=now_ms,
            trigger="calm_trigger",
            predicted=ev.predicted,
        )

    # ---------- prompting ----------

    def _create_prompt(
        self,
        pid: str,
        kind: str,
        condition: Condition,
        scheduled_at_ms: int,
        sent_at_ms: int,
        trigger: str,
        predicted: Optional[float] = None,
    ) -> PromptEvent:
        eid = self._new_event_id()
        self._emit(
            "prompt_created",
            {
                "event_id": eid,
                "participant_id": pid,
                "survey_kind": kind,
                "condition": condition.value,
                "scheduled_at_ms": scheduled_at_ms,
                "sent_at_ms": sent_at_ms,
                "trigger": trigger,
                "predicted": predicted,
            },
        )
        return self.prompts[eid]

    def _apply_prompt_created(self, r: dict) -> None:
        eid = r["event_id"]
        # keep the id counter ahead of everything seen (replay support)
        num = int(eid[1:])
        self._next_event = max(self._next_event, num)
        ev = policy.make_prompt(
            eid,
            r["participant_id"],
            r["survey_kind"],
            Condition(r["condition"]),
            r["scheduled_at_ms"],
            r["sent_at_ms"],
            r["trigger"],
            r["predicted"],
        )
        self.prompts[eid] = ev
        self._pending[ev.participant_id][eid] = ev
        if ev.kind == "intraday":
            p = self.participants[ev.participant_id]
            limiter = self._limiters[ev.participant_id]
            limiter.roll(local_day_index(ev.sent_at_ms, p.utc_offset_minutes))
            limiter.record_send(ev.sent_at_ms)
            if ev.trigger in ("fixed_slot", "random_slot"):
                sd = self.study_day(p, ev.sent_at_ms)
                plan = self._plans.get((p.id, sd))
                if plan is not None:
                    minute = (ev.scheduled_at_ms + p.utc_offset_minutes * 60_000) % 86_400_000 // 60_000
                    plan.sent_minutes.add(minute)
        elif ev.kind in ("end_of_day", "end_of_week"):
            p = self.participants[ev.participant_id]
            sd = self.study_day(p, ev.sent_at_ms)
            plan = self._plans.get((p.id, sd))
            if plan is not None:
                plan.evening_sent.add(ev.kind)

    def _build_plan(self, p: Participant, study_day: int, condition: Condition) -> _DayPlan:
        if condition == Condition.HOURLY:
            slots = [(m, "fixed_slot") for m in policy.plan_hourly_day()]
        elif condition == Condition.RANDOM:
            seed = policy.day_seed(self.config.study_seed, p.id, study_day)
            slots = [(m, "random_slot") for m in policy.plan_random_day(seed)]
        else:  # none and calm_only have no fixed intraday slots
            slots = []
        evening = policy.plan_daily_weekly(study_day, self.config.days_per_week)
        return _DayPlan(condition, slots, evening)

    def _apply_day_planned(self, r: dict) -> None:
        p = self.participants[r["participant_id"]]
        plan = _DayPlan(
            Condition(r["condition"]),
            [(m, t) for m, t in r["slots"]],
            list(r["evening"]),
        )
        self._plans[(p.id, r["study_day"])] = plan

    def tick(self, now_ms: Optional[int] = None) -> None:
        """Advance the scheduler: plan new local days, send due slots and
        evening surveys, expire overdue prompts. Idempotent per timestamp."""
        with self._lock:
            now = self.clock.now_ms() if now_ms is None else now_ms
            for p in self.participants.values():
                if not p.active:
                    continue
                sd = self.study_day(p, now)
                if 0 <= sd < self.config.study_days:
                    key = (p.id, sd)
                    if key not in self._plans:
                        cond = self.condition_at(p.id, now)
                        plan = self._build_plan(p, sd, cond)
                        self._emit(
                            "day_planned",
                            {
                                "participant_id": p.id,
                                "study_day": sd,
                                "condition": plan.condition.value,
                                "slots": plan.slots,
                                "evening": plan.evening,
                            },
                        )
                    self._send_due(p, sd, now)
                self._sweep(p.id, now)

    def _send_due(self, p: Participant, sd: int, now_ms: int) -> None:
        plan = self._plans[(p.id, sd)]
        day_index = p.study_start_day + sd
        limiter = self._limiters[p.id]
        limiter.roll(day_index)
        for minute, trigger in plan.slots:
            if minute in plan.sent_minutes:
                continue
            slot_utc = day_minute_to_utc_ms(day_index, minute, p.utc_offset_minutes)
            if slot_utc > now_ms:
                continue
            # condition may have been switched since planning
            if self.condition_at(p.id, slot_utc) != plan.condition:
                plan.sent_minutes.add(minute)
                continue
            if not limiter.gap_ok(slot_utc):
                plan.sent_minutes.add(minute)
                continue
            self._create_prompt(
                p.id, "intraday", plan.condition, slot_utc, slot_utc, trigger
            )
        for kind in plan.evening:
            if kind in plan.evening_sent:
                continue
            at = day_minute_to_utc_ms(day_index, 20 * 60, p.utc_offset_minutes)
            if at > now_ms:
                continue
            cond = self.condition_at(p.id, at)
            self._create_prompt(p.id, kind, cond, at, at, "daily" if kind == "end_of_day" else "weekly")

    def _sweep(self, pid: str, now_ms: int) -> None:
        due = [ev for ev in self._pending[pid].values() if now_ms >= ev.expires_at_ms]
        for ev in due:
            if ev.state == "pending":
                self._emit("prompt_expired", {"event_id": ev.id, "expired_at_ms": now_ms})

    def _apply_prompt_expired(self, r: dict) -> None:
        ev = self.prompts[r["event_id"]]
        if ev.mark_expired(r["expired_at_ms"]):
            self._pending[ev.participant_id].pop(ev.id, None)

    def has_pending(self, pid: str) -> bool:
        return bool(self._pending.get(pid))

    def deliver_pending(self, pid: str, now_ms: Optional[int] = None) -> list[PromptEvent]:
        with self._lock:
            self._participant(pid)
            now = self.clock.now_ms() if now_ms is None else now_ms
            self._sweep(pid, now)
            return sorted(self._pending[pid].values(), key=lambda e: (e.sent_at_ms, e.id))

    # ---------- survey responses ----------

    def submit_response(self, event_id: str, items: dict, submitted_at_ms: Optional[int] = None) -> dict:
        with self._lock:
            ev = self.prompts.get(event_id)
            if ev is None:
                raise NotFoundError(f"unknown event {event_id}")
            canonical = validate_items(ev.kind, items)
            now = self.clock.now_ms() if submitted_at_ms is None else submitted_at_ms
            try:
                fresh = ev.mark_answered(now)
            except StateError as e:
                raise ExpiredError(str(e)) from e
            if not fresh:
                raise ConflictError(f"event {event_id} already answered")
            record = {"kind": "prompt_answered", "event_id": event_id,
                      "submitted_at_ms": now, "items": canonical}
            self.log.append(record)
            self.records.append(record)
            label = self._finish_answer(ev, now, canonical)
            return {"answered": True, "label_created": label}

    def _apply_prompt_answered(self, r: dict) -> None:
        ev = self.prompts[r["event_id"]]
        ev.mark_answered(r["submitted_at_ms"])
        self._finish_answer(ev, r["submitted_at_ms"], r["items"])

    def _finish_answer(self, ev: PromptEvent, at_ms: int, items: dict) -> bool:
        self._pending[ev.participant_id].pop(ev.id, None)
        self.responses[ev.id] = items
        # hourly-condition intraday answers feed the calibration dataset
        if ev.kind == "intraday" and ev.condition_at_send == Condition.HOURLY:
            feature = self.lookback(ev.participant_id, at_ms)
            if feature.usable(self.config.min_coverage):
                self.labels.append(
                    PerceptionLabel(ev.participant_id, at_ms, items["activity_rating"], feature)
                )
                return True
        return False

    # ---------- model fitting ----------

    def fit_models(self, min_labels_per_scope: int = 2) -> ModelRegistry:
        with self._lock:
            now = self.clock.now_ms()
            registry = fit_all_scopes(self.labels, now, min_labels_per_scope)
            self._emit("models_fitted", {"registry": registry.to_json(), "fitted_at_ms": now})
            return self.registry

    def _apply_models_fitted(self, r: dict) -> None:
        self.registry = ModelRegistry.from_json(r["registry"])

    # ---------- uploads ----------

    def open_upload(self, pid: str, declared_total_bytes: int, checksum_hex: str) -> str:
        with self._lock:
            self._participant(pid)
            if declared_total_bytes <= 0:
                raise BadRequestError("declared_total_bytes must be positive")
            self._next_session += 1
            sid = f"u{self._next_session:06d}"
            self._uploads[sid] = UploadSession(sid, pid, declared_total_bytes, checksum_hex)
            return sid

    def _session(self, sid: str) -> UploadSession:
        s = self._uploads.get(sid)
        if s is None:
            raise NotFoundError(f"unknown upload session {sid}")
        return s

    def upload_chunk(self, sid: str, offset: int, data: bytes) -> dict:
        with self._lock:
            s = self._session(sid)
            s.put_chunk(offset, data)
            return {"received_bytes": s.received_bytes(), "missing": s.missing()}

    def upload_status(self, sid: str) -> dict:
        s = self._session(sid)
        return {
            "state": s.state,
            "received_bytes": s.received_bytes(),
            "missing": s.missing(),
            "declared_total_bytes": s.declared_total_bytes,
        }

    def finish_upload(self, sid: str) -> dict:
        """Assemble, verify, then parse the payload as an energy-window CSV
        batch and ingest each row idempotently."""
        with self._lock:
            s = self._session(sid)
            payload = s.assemble()  # raises on gaps / checksum, aborts on mismatch
            windows = read_windows_csv(payload.decode("utf-8"))
            stored = dup = 0
            for w in windows:
                ack = self.ingest_window(w)
                if ack["stored"]:
                    stored += 1
                else:
                    dup += 1
            return {"state": s.state, "ingested": stored, "duplicates": dup}

    # ---------- device status ----------

    def report_device_status(self, pid: str, battery_pct: int, recording: bool) -> None:
        self._participant(pid)
        if not 0 <= battery_pct <= 100:
            raise BadRequestError("battery_pct must be in [0,100]")
        self._emit(
            "device_status",
            {
                "participant_id": pid,
                "battery_pct": battery_pct,
                "recording": recording,
                "reported_at_ms": self.clock.now_ms(),
            },
        )

    def _apply_device_status(self, r: dict) -> None:
        dev = self.device[r["participant_id"]]
        dev.battery_pct = r["battery_pct"]
        dev.recording = r["recording"]
        dev.last_seen_ms = max(dev.last_seen_ms, r["reported_at_ms"])

    def stop_recording(self, pid: str, pin: str) -> None:
        p = self._participant(pid)
        if _pin_hash(p.pin_salt, pin) != p.pin_hash:
            raise BadRequestError("incorrect PIN")
        self._emit(
            "recording_stopped",
            {"participant_id": pid, "at_ms": self.clock.now_ms()},
        )

    def _apply_recording_stopped(self, r: dict) -> None:
        self.device[r["participant_id"]].recording = False

    # ---------- metrics ----------

    def metrics(
        self,
        participant_id: Optional[str] = None,
        t_range: Optional[tuple[int, int]] = None,
    ) -> dict:
        """Per condition: sent/answered/rate for intraday and evening surveys,
        plus the perceived-calm ratio (answered intraday with rating < 3).
        Rates over zero sent prompts are reported as None (undefined)."""
        with self._lock:
            out: dict = {}
            for cond in Condition:
                out[cond.value] = {
                    "intraday": {"sent": 0, "answered": 0, "rate_pct": None},
                    "end_of_day": {"sent": 0, "answered": 0, "rate_pct": None},
                    "end_of_week": {"sent": 0, "answered": 0, "rate_pct": None},
                    "calm_answered": 0,
                    "calm_ratio_pct": None,
                }
            for ev in self.prompts.values():
                if participant_id is not None and ev.participant_id != participant_id:
                    continue
                if t_range is not None and not (t_range[0] <= ev.sent_at_ms < t_range[1]):
                    continue
                bucket = out[ev.condition_at_send.value][ev.kind]
                bucket["sent"] += 1
                if ev.state == "answered":
                    bucket["answered"] += 1
                    if ev.kind == "intraday":
                        rating = self.responses[ev.id]["activity_rating"]
                        if rating < 3:
                            out[ev.condition_at_send.value]["calm_answered"] += 1
            for cond_stats in out.values():
                for kind in ("intraday", "end_of_day", "end_of_week"):
                    b = cond_stats[kind]
                    if b["sent"] > 0:
                        b["rate_pct"] = 100.0 * b["answered"] / b["sent"]
                n_ans = cond_stats["intraday"]["answered"]
                if n_ans > 0:
                    cond_stats["calm_ratio_pct"] = 100.0 * cond_stats["calm_answered"] / n_ans
            out["n_labels"] = len(self.labels)
            return out

    # ---------- export ----------

    def export_prompt_log(self) -> str:
        """Newline-delimited JSON of prompt transitions only."""
        import json

        lines = [
            json.dumps(r, sort_keys=True)
            for r in self.records
            if r["kind"] in ("prompt_created", "prompt_answered", "prompt_expired")
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def close(self) -> None:
        self.log.close()
