"""HTTP+JSON facade over StudyServer.

Thin: every endpoint maps 1:1 onto a core operation; policy decisions never
happen here. Chunk upload uses binary bodies with an offset query parameter
and a SHA-256 hex digest declared at session open.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..calibration import ColdStartError
from ..policy import Condition, PromptEvent
from ..sensing import EnergyWindow, ValidationError
from ..timeutil import MINUTE_MS
from .clock import VirtualClock
from .core import (
    BadRequestError,
    ConflictError,
    ExpiredError,
    NotFoundError,
    StudyServer,
)
from .surveys import INSTRUMENTS, SchemaError
from .uploads import ChecksumMismatchError, ChunkConflictError, IncompleteUploadError, UploadError


def event_to_dict(ev: PromptEvent) -> dict:
    return {
        "id": ev.id,
        "participant_id": ev.participant_id,
        "kind": ev.kind,
        "condition_at_send": ev.condition_at_send.value,
        "scheduled_at_ms": ev.scheduled_at_ms,
        "sent_at_ms": ev.sent_at_ms,
        "expires_at_ms": ev.expires_at_ms,
        "trigger": ev.trigger,
        "predicted": ev.predicted,
        "state": ev.state,
        "answered_at_ms": ev.answered_at_ms,
        "expired_at_ms": ev.expired_at_ms,
    }


class RegisterBody(BaseModel):
    alias: str
    utc_offset_minutes: int = 0
    pin: str = "0000"


class WindowBody(BaseModel):
    window_start_ms: int
    energy: Optional[float] = None
    sample_count: int = 1


class OpenUploadBody(BaseModel):
    participant_id: str
    declared_total_bytes: int
    checksum_sha256: str


class ResponseBody(BaseModel):
    items: dict
    submitted_at_ms: Optional[int] = None


class ConditionBody(BaseModel):
    condition: str
    effective_at_ms: int


class StatusBody(BaseModel):
    battery_pct: int
    recording: bool


class StopBody(BaseModel):
    pin: str


class ItemsBody(BaseModel):
    items: dict


class AdvanceBody(BaseModel):
    delta_ms: int


def create_app(server: StudyServer, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="calmkit study server")

    @app.exception_handler(NotFoundError)
    async def _nf(request: Request, exc: NotFoundError):
        return JSONResponse({"error": str(exc)}, status_code=404)

    @app.exception_handler(ConflictError)
    async def _cf(request: Request, exc: ConflictError):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(ExpiredError)
    async def _ex(request: Request, exc: ExpiredError):
        return JSONResponse({"error": str(exc)}, status_code=410)

    @app.exception_handler(SchemaError)
    async def _sc(request: Request, exc: SchemaError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(ValidationError)
    async def _vd(request: Request, exc: ValidationError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(ColdStartError)
    async def _cs(request: Request, exc: ColdStartError):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(BadRequestError)
    async def _br(request: Request, exc: BadRequestError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.exception_handler(ChunkConflictError)
    async def _cc(request: Request, exc: ChunkConflictError):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(ChecksumMismatchError)
    async def _cm(request: Request, exc: ChecksumMismatchError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(IncompleteUploadError)
    async def _iu(request: Request, exc: IncompleteUploadError):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(UploadError)
    async def _ue(request: Request, exc: UploadError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    def participant_dict(pid: str) -> dict:
        p = server.participants[pid]
        dev = server.device[pid]
        now = server.clock.now_ms()
        return {
            "id": p.id,
            "alias": p.alias,
            "utc_offset_minutes": p.utc_offset_minutes,
            "enrolled_at_ms": p.enrolled_at_ms,
            "active": p.active,
            "week_plan": [[w, c.value] for w, c in p.schedule.week_plan],
            "assignment_block": p.schedule.assignment_block,
            "condition_now": server.condition_at(p.id, now).value,
            "study_day": server.study_day(p, now),
            "device": {
                "last_seen_ms": dev.last_seen_ms,
                "battery_pct": dev.battery_pct,
                "recording": dev.recording,
                "pin_set": dev.pin_set,
            },
            "n_labels": sum(1 for l in server.labels if l.participant_id == p.id),
        }

    @app.get("/api/instruments")
    def instruments():
        return {k: {kk: list(vv) for kk, vv in v.items()} for k, v in INSTRUMENTS.items()}

    @app.post("/api/participants")
    def register(body: RegisterBody):
        p = server.register_participant(body.alias, body.utc_offset_minutes, body.pin)
        server.tick()
        return participant_dict(p.id)

    @app.get("/api/participants")
    def roster():
        server.tick()
        return [participant_dict(pid) for pid in sorted(server.participants)]

    @app.get("/api/participants/{pid}")
    def participant(pid: str):
        if pid not in server.participants:
            raise NotFoundError(f"unknown participant {pid}")
        return participant_dict(pid)

    @app.post("/api/participants/{pid}/windows")
    def ingest(pid: str, body: WindowBody):
        w = EnergyWindow(pid, body.window_start_ms, body.energy, body.sample_count)
        return server.ingest_window(w)

    @app.post("/api/participants/{pid}/prestudy")
    def prestudy(pid: str, body: ItemsBody):
        server.submit_prestudy(pid, body.items)
        return {"ok": True}

    @app.get("/api/participants/{pid}/pending")
    def pending(pid: str):
        server.tick()
        return [event_to_dict(e) for e in server.deliver_pending(pid)]

    @app.get("/api/participants/{pid}/events")
    def timeline(pid: str):
        if pid not in server.participants:
            raise NotFoundError(f"unknown participant {pid}")
        evs = [e for e in server.prompts.values() if e.participant_id == pid]
        evs.sort(key=lambda e: (e.sent_at_ms, e.id))
        return [event_to_dict(e) for e in evs]

    @app.post("/api/events/{eid}/response")
    def respond(eid: str, body: ResponseBody):
        ack = server.submit_response(eid, body.items, body.submitted_at_ms)
        return {**ack, "event": event_to_dict(server.prompts[eid])}

    @app.get("/api/events/{eid}/response")
    def get_response(eid: str):
        if eid not in server.responses:
            raise NotFoundError(f"no response stored for {eid}")
        return {"event_id": eid, "items": server.responses[eid]}

    @app.post("/api/participants/{pid}/condition")
    def switch(pid: str, body: ConditionBody):
        server.switch_condition(pid, Condition(body.condition), body.effective_at_ms)
        return {"ok": True}

    @app.post("/api/participants/{pid}/status")
    def device_status(pid: str, body: StatusBody):
        server.report_device_status(pid, body.battery_pct, body.recording)
        return {"ok": True}

    @app.post("/api/participants/{pid}/stop")
    def stop(pid: str, body: StopBody):
        server.stop_recording(pid, body.pin)
        return {"ok": True}

    @app.post("/api/uploads")
    def open_upload(body: OpenUploadBody):
        sid = server.open_upload(
            body.participant_id, body.declared_total_bytes, body.checksum_sha256
        )
        return {"session_id": sid}

    @app.put("/api/uploads/{sid}/chunk")
    async def put_chunk(sid: str, request: Request, offset: int = Query(...)):
        data = await request.body()
        return server.upload_chunk(sid, offset, data)

    @app.get("/api/uploads/{sid}")
    def upload_status(sid: str):
        return server.upload_status(sid)

    @app.post("/api/uploads/{sid}/finish")
    def finish(sid: str):
        return server.finish_upload(sid)

    @app.post("/api/fit")
    def fit():
        registry = server.fit_models()
        return {"scopes": registry.scopes(), "n_labels": len(server.labels)}

    @app.get("/api/metrics")
    def metrics(participant_id: Optional[str] = None):
        server.tick()
        return server.metrics(participant_id)

    @app.get("/api/export/events")
    def export_events():
        return PlainTextResponse(server.export_prompt_log(), media_type="application/x-ndjson")

    @app.get("/api/clock")
    def clock():
        return {
            "now_ms": server.clock.now_ms(),
            "mode": "virtual" if isinstance(server.clock, VirtualClock) else "real",
        }

    @app.post("/api/clock/advance")
    def advance(body: AdvanceBody):
        if not isinstance(server.clock, VirtualClock):
            raise BadRequestError("clock advance only available in virtual mode")
        if body.delta_ms < 0:
            raise BadRequestError("delta_ms must be >= 0")
        # step minute-wise so day planning and slot sends land on time
        remaining = body.delta_ms
        while remaining > 0:
            step = min(MINUTE_MS, remaining)
            server.clock.advance(step)
            server.tick()
            remaining -= step
        return {"now_ms": server.clock.now_ms()}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="frontend")

    return app
