// Typed client over the study server's JSON API. Thin on purpose: every
// method is one endpoint, no client-side policy.

export interface DeviceStatus {
  last_seen_ms: number | null;
  battery_pct: number | null;
  recording: boolean;
  pin_set: boolean;
}

export interface Participant {
  id: string;
  alias: string;
  utc_offset_minutes: number;
  enrolled_at_ms: number;
  active: boolean;
  week_plan: [number, string][];
  assignment_block: number;
  condition_now: string;
  study_day: number | null;
  device: DeviceStatus;
  n_labels: number;
}

export interface PromptEvent {
  id: string;
  participant_id: string;
  kind: string;
  condition_at_send: string;
  scheduled_at_ms: number;
  sent_at_ms: number;
  expires_at_ms: number;
  trigger: string;
  predicted: number | null;
  state: string;
  answered_at_ms: number | null;
  expired_at_ms: number | null;
}

export interface KindMetrics {
  sent: number;
  answered: number;
  rate_pct: number | null;
}

export interface ConditionMetrics {
  intraday: KindMetrics;
  end_of_day: KindMetrics;
  end_of_week: KindMetrics;
  calm_answered: number;
  calm_ratio_pct: number | null;
}

export type Metrics = Record<string, ConditionMetrics | number>;

export type Instruments = Record<string, Record<string, string[]>>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class StudyApi {
  constructor(
    private base: string = "",
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.base + path).then((r) => asJson<T>(r));
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? null : JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }

  roster(): Promise<Participant[]> {
    return this.get("/api/participants");
  }

  participant(id: string): Promise<Participant> {
    return this.get(`/api/participants/${id}`);
  }

  register(alias: string, utcOffsetMinutes = 0, pin = "0000"): Promise<Participant> {
    return this.post("/api/participants", {
      alias,
      utc_offset_minutes: utcOffsetMinutes,
      pin,
    });
  }

  pending(id: string): Promise<PromptEvent[]> {
    return this.get(`/api/participants/${id}/pending`);
  }

  timeline(id: string): Promise<PromptEvent[]> {
    return this.get(`/api/participants/${id}/events`);
  }

  submitResponse(
    eventId: string,
    items: Record<string, unknown>,
  ): Promise<{ answered: boolean; label_created: boolean; event: PromptEvent }> {
    return this.post(`/api/events/${eventId}/response`, { items });
  }

  storedResponse(eventId: string): Promise<{ event_id: string; items: Record<string, unknown> }> {
    return this.get(`/api/events/${eventId}/response`);
  }

  switchCondition(id: string, condition: string, effectiveAtMs: number): Promise<{ ok: boolean }> {
    return this.post(`/api/participants/${id}/condition`, {
      condition,
      effective_at_ms: effectiveAtMs,
    });
  }

  ingestWindow(id: string, windowStartMs: number, energy: number, sampleCount = 300) {
    return this.post(`/api/participants/${id}/windows`, {
      window_start_ms: windowStartMs,
      energy,
      sample_count: sampleCount,
    });
  }

  metrics(participantId?: string): Promise<Metrics> {
    const q = participantId ? `?participant_id=${participantId}` : "";
    return this.get(`/api/metrics${q}`);
  }

  instruments(): Promise<Instruments> {
    return this.get("/api/instruments");
  }

  fitModels(): Promise<{ scopes: string[]; n_labels: number }> {
    return this.post("/api/fit");
  }

  clock(): Promise<{ now_ms: number; mode: string }> {
    return this.get("/api/clock");
  }

  advanceClock(deltaMs: number): Promise<{ now_ms: number }> {
    return this.post("/api/clock/advance", { delta_ms: deltaMs });
  }
}
