// Typed client over the study server's JSON API. Thin on purpose: every
// method is one endpoint, no client-side policy.
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function asJson(res) {
    if (!res.ok) {
        let detail = res.statusText;
        try {
            const body = await res.json();
            if (body && typeof body.error === "string")
                detail = body.error;
        }
        catch {
            /* non-JSON error body */
        }
        throw new ApiError(res.status, detail);
    }
    return (await res.json());
}
export class StudyApi {
    constructor(base = "", fetchFn = fetch.bind(globalThis)) {
        this.base = base;
        this.fetchFn = fetchFn;
    }
    get(path) {
        return this.fetchFn(this.base + path).then((r) => asJson(r));
    }
    post(path, body) {
        return this.fetchFn(this.base + path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: body === undefined ? null : JSON.stringify(body),
        }).then((r) => asJson(r));
    }
    roster() {
        return this.get("/api/participants");
    }
    participant(id) {
        return this.get(`/api/participants/${id}`);
    }
    register(alias, utcOffsetMinutes = 0, pin = "0000") {
        return this.post("/api/participants", {
            alias,
            utc_offset_minutes: utcOffsetMinutes,
            pin,
        });
    }
    pending(id) {
        return this.get(`/api/participants/${id}/pending`);
    }
    timeline(id) {
        return this.get(`/api/participants/${id}/events`);
    }
    submitResponse(eventId, items) {
        return this.post(`/api/events/${eventId}/response`, { items });
    }
    storedResponse(eventId) {
        return this.get(`/api/events/${eventId}/response`);
    }
    switchCondition(id, condition, effectiveAtMs) {
        return this.post(`/api/participants/${id}/condition`, {
            condition,
            effective_at_ms: effectiveAtMs,
        });
    }
    ingestWindow(id, windowStartMs, energy, sampleCount = 300) {
        return this.post(`/api/participants/${id}/windows`, {
            window_start_ms: windowStartMs,
            energy,
            sample_count: sampleCount,
        });
    }
    metrics(participantId) {
        const q = participantId ? `?participant_id=${participantId}` : "";
        return this.get(`/api/metrics${q}`);
    }
    instruments() {
        return this.get("/api/instruments");
    }
    fitModels() {
        return this.post("/api/fit");
    }
    clock() {
        return this.get("/api/clock");
    }
    advanceClock(deltaMs) {
        return this.post("/api/clock/advance", { delta_ms: deltaMs });
    }
}
