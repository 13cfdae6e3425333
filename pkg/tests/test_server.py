import hashlib

import numpy as np
import pytest

from calmkit.calibration import CalibrationModel
from calmkit.policy import Condition, WEEK34_ORDERS
from calmkit.sensing import EnergyWindow, write_windows_csv
from calmkit.server import (
    BadRequestError,
    ConflictError,
    ExpiredError,
    NotFoundError,
    SchemaError,
    ServerConfig,
    StudyServer,
    VirtualClock,
)
from calmkit.timeutil import HOUR_MS, MINUTE_MS, WINDOW_MS
from conftest import at, run_until


def fill_lookback(server, pid, t_ms, energy=0.05, n=12):
    """Ingest n contiguous windows ending just before t_ms."""
    for i in range(n):
        start = (t_ms // WINDOW_MS) * WINDOW_MS - (i + 1) * WINDOW_MS
        server.ingest_window(EnergyWindow(pid, start, energy, 300))


class TestRegistration:
    def test_first_registration_schedule(self, server):
        p = server.register_participant("fam-a")
        plan = dict(p.schedule.week_plan)
        assert plan[1] == Condition.NONE
        assert plan[2] == Condition.HOURLY
        assert {plan[3], plan[4]} == {Condition.RANDOM, Condition.CALM_ONLY}

    def test_duplicate_alias_conflict(self, server):
        server.register_participant("fam-a")
        with pytest.raises(ConflictError):
            server.register_participant("fam-a")

    def test_block_of_two_opposite_orders(self, server):
        a = server.register_participant("fam-a")
        b = server.register_participant("fam-b")
        orders = {tuple(c for _, c in p.schedule.week_plan[2:]) for p in (a, b)}
        assert orders == set(WEEK34_ORDERS)

    def test_empty_alias_rejected(self, server):
        with pytest.raises(BadRequestError):
            server.register_participant("")

    def test_prestudy_stored_verbatim(self, server):
        p = server.register_participant("fam-a")
        items = {f"vadrs_{i}": i % 4 for i in range(1, 6)}
        server.submit_prestudy(p.id, items)
        assert server.prestudy[p.id] == items


class TestIngest:
    def test_fresh_window_stored(self, server):
        p = server.register_participant("fam-a")
        ack = server.ingest_window(EnergyWindow(p.id, at(1, 480), 0.2, 300))
        assert ack == {"stored": True, "duplicate": False}

    def test_identical_duplicate_noop(self, server):
        p = server.register_participant("fam-a")
        w = EnergyWindow(p.id, at(1, 480), 0.2, 300)
        server.ingest_window(w)
        ack = server.ingest_window(w)
        assert ack == {"stored": False, "duplicate": True}

    def test_conflicting_duplicate_rejected(self, server):
        p = server.register_participant("fam-a")
        server.ingest_window(EnergyWindow(p.id, at(1, 480), 0.2, 300))
        with pytest.raises(ConflictError):
            server.ingest_window(EnergyWindow(p.id, at(1, 480), 0.3, 300))

    def test_unknown_participant(self, server):
        with pytest.raises(NotFoundError):
            server.ingest_window(EnergyWindow("nobody", at(1, 480), 0.2, 300))

    def test_at_least_once_resend_schedules(self, server):
        p = server.register_participant("fam-a")
        windows = [EnergyWindow(p.id, at(1, 480) + i * WINDOW_MS, 0.1 * (i + 1), 300)
                   for i in range(10)]
        rng = np.random.default_rng(0)
        sends = windows * 3
        rng.shuffle(sends)
        for w in sends:
            server.ingest_window(w)
        assert len(server._windows[p.id]) == 10

    def test_last_seen_updates(self, server, clock):
        p = server.register_participant("fam-a")
        clock.advance(HOUR_MS)
        server.ingest_window(EnergyWindow(p.id, at(1, 480), 0.2, 300))
        assert server.device[p.id].last_seen_ms == clock.now_ms()


class TestUploads:
    def payload(self, pid, n=20):
        windows = [EnergyWindow(pid, at(1, 480) + i * WINDOW_MS, 0.01 * (i + 1), 300)
                   for i in range(n)]
        data = write_windows_csv(windows).encode()
        return data, hashlib.sha256(data).hexdigest(), windows

    def test_out_of_order_reassembly(self, server):
        p = server.register_participant("fam-a")
        data, digest, windows = self.payload(p.id)
        sid = server.open_upload(p.id, len(data), digest)
        chunks = [(off, data[off:off + 100]) for off in range(0, len(data), 100)]
        for off, chunk in reversed(chunks):
            server.upload_chunk(sid, off, chunk)
        result = server.finish_upload(sid)
        assert result["state"] == "complete"
        assert result["ingested"] == len(windows)

    def test_duplicate_chunk_noop(self, server):
        p = server.register_participant("fam-a")
        data, digest, _ = self.payload(p.id)
        sid = server.open_upload(p.id, len(data), digest)
        server.upload_chunk(sid, 0, data[:50])
        server.upload_chunk(sid, 0, data[:50])
        assert server.upload_status(sid)["received_bytes"] == 50

    def test_mismatched_overlap_conflict(self, server):
        from calmkit.server import ChunkConflictError

        p = server.register_participant("fam-a")
        data, digest, _ = self.payload(p.id)
        sid = server.open_upload(p.id, len(data), digest)
        server.upload_chunk(sid, 0, data[:50])
        with pytest.raises(ChunkConflictError):
            server.upload_chunk(sid, 10, b"X" * 20)

    def test_gap_error_names_range(self, server):
        from calmkit.server import IncompleteUploadError

        p = server.register_participant("fam-a")
        data, digest, _ = self.payload(p.id)
        sid = server.open_upload(p.id, len(data), digest)
        server.upload_chunk(sid, 0, data[:100])
        server.upload_chunk(sid, 101, data[101:])
        with pytest.raises(IncompleteUploadError, match=r"missing \[100,101\)"):
            server.finish_upload(sid)

    def test_checksum_failure_aborts(self, server):
        from calmkit.server import ChecksumMismatchError

        p = server.register_participant("fam-a")
        data, _, _ = self.payload(p.id)
        sid = server.open_upload(p.id, len(data), "0" * 64)
        server.upload_chunk(sid, 0, data)
        with pytest.raises(ChecksumMismatchError):
            server.finish_upload(sid)
        assert server.upload_status(sid)["state"] == "aborted"

    def test_finish_is_idempotent_ingest(self, server):
        p = server.register_participant("fam-a")
        data, digest, windows = self.payload(p.id)
        # half the windows already streamed live
        for w in windows[:10]:
            server.ingest_window(w)
        sid = server.open_upload(p.id, len(data), digest)
        server.upload_chunk(sid, 0, data)
        result = server.finish_upload(sid)
        assert result["ingested"] == 10
        assert result["duplicates"] == 10


class TestPromptFlow:
    def hourly_day_server(self):
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
        p = srv.register_participant("fam-a")
        # jump to the start of week 2 (hourly), study day 7
        clock.set(at(8, 7 * 60))
        srv.tick()
        return srv, clock, p

    def test_hourly_day_sends_12(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 20 * 60), step_min=5)
        intraday = [e for e in srv.prompts.values() if e.kind == "intraday"]
        assert len(intraday) == 12
        minutes = sorted((e.sent_at_ms // MINUTE_MS) % 1440 for e in intraday)
        assert minutes == [h * 60 for h in range(8, 20)]

    def test_none_week_only_end_of_day(self):
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
        srv.register_participant("fam-a")
        clock.set(at(1, 7 * 60))
        run_until(srv, clock, at(1, 21 * 60), step_min=5)
        kinds = [e.kind for e in srv.prompts.values()]
        assert kinds.count("intraday") == 0
        assert kinds.count("end_of_day") == 1

    def test_end_of_week_on_day_7(self):
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
        srv.register_participant("fam-a")
        clock.set(at(7, 7 * 60))
        run_until(srv, clock, at(7, 21 * 60), step_min=5)
        kinds = [e.kind for e in srv.prompts.values()]
        assert kinds.count("end_of_week") == 1

    def test_deliver_pending_ordering_and_sweep(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 9 * 60 + 10), step_min=5)
        pending = srv.deliver_pending(p.id)
        assert [e.sent_at_ms for e in pending] == sorted(e.sent_at_ms for e in pending)
        # 08:00 prompt expired at 08:30; only 09:00 remains
        assert len(pending) == 1
        expired = [e for e in srv.prompts.values() if e.state == "expired"]
        assert len(expired) == 1

    def test_hourly_answer_creates_label(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 8 * 60), step_min=5)
        fill_lookback(srv, p.id, at(8, 8 * 60 + 10))
        [ev] = srv.deliver_pending(p.id)
        ack = srv.submit_response(ev.id, {"activity_rating": 2}, at(8, 8 * 60 + 10))
        assert ack["label_created"]
        assert len(srv.labels) == 1
        assert srv.labels[0].rating == 2
        assert srv.labels[0].feature.windows_present == 12

    def test_answer_at_expiry_exactly_rejected(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 8 * 60), step_min=5)
        [ev] = srv.deliver_pending(p.id)
        with pytest.raises(ExpiredError):
            srv.submit_response(ev.id, {"activity_rating": 2}, ev.expires_at_ms)

    def test_end_of_day_answer_no_label(self):
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
        p = srv.register_participant("fam-a")
        clock.set(at(1, 7 * 60))
        run_until(srv, clock, at(1, 20 * 60 + 5), step_min=5)
        [ev] = srv.deliver_pending(p.id)
        assert ev.kind == "end_of_day"
        srv.submit_response(
            ev.id,
            {"medication_taken": True, "communication_rating": 4, "reflection_text": "x"},
        )
        assert srv.labels == []

    def test_schema_mismatch_rejected(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 8 * 60), step_min=5)
        [ev] = srv.deliver_pending(p.id)
        with pytest.raises(SchemaError):
            srv.submit_response(ev.id, {"activity_rating": 9})
        with pytest.raises(SchemaError):
            srv.submit_response(ev.id, {"nonsense": 1})

    def test_double_answer_conflict(self):
        srv, clock, p = self.hourly_day_server()
        run_until(srv, clock, at(8, 8 * 60), step_min=5)
        [ev] = srv.deliver_pending(p.id)
        srv.submit_response(ev.id, {"activity_rating": 2})
        with pytest.raises(ConflictError):
            srv.submit_response(ev.id, {"activity_rating": 3})


class TestConditionSwitch:
    def test_retroactive_rejected(self, server, clock):
        p = server.register_participant("fam-a")
        with pytest.raises(BadRequestError):
            server.switch_condition(p.id, Condition.CALM_ONLY, clock.now_ms() - 1)

    def test_switch_to_calm_only_no_intraday_before_effective(self):
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
        p = srv.register_participant("fam-a")
        # during week 1 (none), switch to calm_only effective next 08:00
        clock.set(at(2, 6 * 60))
        srv.switch_condition(p.id, Condition.CALM_ONLY, at(2, 8 * 60))
        run_until(srv, clock, at(2, 7 * 60 + 59))
        assert [e for e in srv.prompts.values() if e.kind == "intraday"] == []
        assert srv.condition_at(p.id, at(2, 8 * 60)) == Condition.CALM_ONLY

    def test_cap_carries_over_mid_day_switch(self):
        clock = VirtualClock(at(0, 600))
        cfg = ServerConfig(study_seed=5, min_labels=1)
        srv = StudyServer(clock=clock, config=cfg)
        p = srv.register_participant("fam-a")
        # week 3+ random day: let the 5 random prompts go out, then switch
        day = 1 + 14  # first day of week 3
        cond3 = dict(p.schedule.week_plan)[3]
        if cond3 != Condition.RANDOM:
            day = 1 + 21
        clock.set(at(day, 7 * 60))
        while clock.now_ms() < at(day, 20 * 60):
            run_until(srv, clock, clock.now_ms() + MINUTE_MS)
            if sum(1 for e in srv.prompts.values() if e.trigger == "random_slot") == 5:
                break
        sent_random = [e for e in srv.prompts.values() if e.trigger == "random_slot"]
        assert len(sent_random) == 5
        assert clock.now_ms() < at(day, 20 * 60)
        # switch to calm_only while the delivery window is still open; a very
        # calm model would trigger, but sent_today is already 5, so the daily
        # cap blocks any further intraday prompts today
        srv.registry.put(CalibrationModel("global", 0.0, 1.0, 50))
        srv.switch_condition(p.id, Condition.CALM_ONLY, clock.now_ms())
        now = clock.now_ms()
        fill_lookback(srv, p.id, now)
        srv.ingest_window(EnergyWindow(p.id, (now // WINDOW_MS) * WINDOW_MS, 0.05, 300))
        intraday = [e for e in srv.prompts.values() if e.kind == "intraday"]
        assert len(intraday) == 5


class TestCalmTriggerPath:
    def calm_server(self, min_labels=1):
        clock = VirtualClock(at(0, 600))
        cfg = ServerConfig(study_seed=5, min_labels=min_labels)
        srv = StudyServer(clock=clock, config=cfg)
        p = srv.register_participant("fam-a")
        srv.switch_condition(p.id, Condition.CALM_ONLY, clock.now_ms())
        clock.set(at(2, 10 * 60))
        srv.tick()
        return srv, clock, p

    def test_calm_window_ingest_triggers(self):
        srv, clock, p = self.calm_server()
        srv.registry.put(CalibrationModel("global", 10.0, 1.0, 50))
        fill_lookback(srv, p.id, clock.now_ms(), energy=0.05)
        srv.ingest_window(EnergyWindow(p.id, (clock.now_ms() // WINDOW_MS) * WINDOW_MS, 0.05, 300))
        triggers = [e for e in srv.prompts.values() if e.trigger == "calm_trigger"]
        assert len(triggers) == 1
        assert triggers[0].predicted == pytest.approx(1.5)

    def test_no_model_no_trigger(self):
        srv, clock, p = self.calm_server()
        fill_lookback(srv, p.id, clock.now_ms(), energy=0.05)
        srv.ingest_window(EnergyWindow(p.id, (clock.now_ms() // WINDOW_MS) * WINDOW_MS, 0.05, 300))
        assert [e for e in srv.prompts.values() if e.kind == "intraday"] == []

    def test_low_coverage_no_trigger(self):
        srv, clock, p = self.calm_server()
        srv.registry.put(CalibrationModel("global", 0.0, 1.0, 50))
        fill_lookback(srv, p.id, clock.now_ms(), energy=0.05, n=3)
        srv.ingest_window(EnergyWindow(p.id, (clock.now_ms() // WINDOW_MS) * WINDOW_MS, 0.05, 300))
        assert [e for e in srv.prompts.values() if e.kind == "intraday"] == []

    def test_outside_delivery_window_no_trigger(self):
        srv, clock, p = self.calm_server()
        srv.registry.put(CalibrationModel("global", 0.0, 1.0, 50))
        clock.set(at(2, 20 * 60 + 30))
        fill_lookback(srv, p.id, clock.now_ms(), energy=0.05)
        srv.ingest_window(EnergyWindow(p.id, (clock.now_ms() // WINDOW_MS) * WINDOW_MS, 0.05, 300))
        assert [e for e in srv.prompts.values() if e.kind == "intraday"] == []


class TestMetrics:
    def test_rate_arithmetic(self):
        srv, clock, p = TestPromptFlow().hourly_day_server()
        # answer the 18:00 and 19:00 prompts while still fresh
        for hour, rating in ((18, 1), (19, 4)):
            run_until(srv, clock, at(8, hour * 60 + 5), step_min=5)
            ev = max(
                (e for e in srv.prompts.values() if e.kind == "intraday"),
                key=lambda e: e.sent_at_ms,
            )
            srv.submit_response(ev.id, {"activity_rating": rating})
        run_until(srv, clock, at(8, 20 * 60), step_min=5)
        m = srv.metrics()
        assert m["hourly"]["intraday"]["sent"] == 12
        assert m["hourly"]["intraday"]["answered"] == 2
        assert m["hourly"]["intraday"]["rate_pct"] == pytest.approx(100 * 2 / 12)
        assert m["hourly"]["calm_ratio_pct"] == pytest.approx(50.0)

    def test_calm_ratio_strict_threshold(self):
        srv, clock, p = TestPromptFlow().hourly_day_server()
        run_until(srv, clock, at(8, 12 * 60), step_min=5)
        pend = srv.deliver_pending(p.id)
        for ev, rating in zip(pend, (1, 2, 3)):
            srv.submit_response(ev.id, {"activity_rating": rating}, ev.sent_at_ms + MINUTE_MS)
        m = srv.metrics()
        answered = m["hourly"]["intraday"]["answered"]
        assert m["hourly"]["calm_answered"] == sum(1 for r in (1, 2, 3)[:answered] if r < 3)

    def test_zero_sent_rates_undefined(self, server):
        m = server.metrics()
        for cond in ("none", "hourly", "random", "calm_only"):
            assert m[cond]["intraday"]["rate_pct"] is None
            assert m[cond]["calm_ratio_pct"] is None


class TestDeviceAndPin:
    def test_stop_requires_pin(self, server):
        p = server.register_participant("fam-a", pin="1234")
        with pytest.raises(BadRequestError):
            server.stop_recording(p.id, "0000")
        server.stop_recording(p.id, "1234")
        assert server.device[p.id].recording is False

    def test_status_report(self, server):
        p = server.register_participant("fam-a")
        server.report_device_status(p.id, 55, True)
        assert server.device[p.id].battery_pct == 55
        with pytest.raises(BadRequestError):
            server.report_device_status(p.id, 200, True)


class TestDurability:
    def test_replay_reproduces_state(self, tmp_path):
        log = str(tmp_path / "events.ndjson")
        clock = VirtualClock(at(0, 600))
        srv = StudyServer(clock=clock, log_path=log, config=ServerConfig(study_seed=5))
        p = srv.register_participant("fam-a")
        clock.set(at(8, 7 * 60))
        run_until(srv, clock, at(8, 12 * 60), step_min=5)
        fill_lookback(srv, p.id, clock.now_ms())
        pend = srv.deliver_pending(p.id)
        srv.submit_response(pend[0].id, {"activity_rating": 2}, clock.now_ms())
        srv.close()

        again = StudyServer.replay(log, clock=VirtualClock(clock.now_ms()),
                                   config=ServerConfig(study_seed=5))
        assert again.metrics() == srv.metrics()
        assert {e.id for e in again.deliver_pending(p.id)} == {
            e.id for e in srv.deliver_pending(p.id)
        }
        assert len(again.labels) == len(srv.labels)
        assert again._windows[p.id].keys() == srv._windows[p.id].keys()
