// End-to-end against a real backend process on a virtual clock: collect
// calibration labels in the hourly week, fit, switch to calm-only, then
// drive a calm trigger and answer it through the same client code the
// dashboard uses.
import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  StudyApi,
  type ConditionMetrics,
  type Metrics,
  type Participant,
  type PromptEvent,
} from "../src/api.js";
import { canonicalize, fieldsFor } from "../src/forms.js";

const MINUTE = 60_000;
const HOUR = 3_600_000;
const DAY = 24 * HOUR;
const WINDOW = 5 * MINUTE;
const PORT = 8137;

let proc: ChildProcess;
const api = new StudyApi(`http://127.0.0.1:${PORT}`);

async function advanceTo(targetMs: number): Promise<void> {
  const { now_ms } = await api.clock();
  if (targetMs > now_ms) await api.advanceClock(targetMs - now_ms);
}

function calmOnly(m: Metrics): ConditionMetrics {
  return m.calm_only as ConditionMetrics;
}

async function pendingIntraday(pid: string): Promise<PromptEvent[]> {
  const events = await api.pending(pid);
  return events.filter((e) => e.kind === "intraday");
}

beforeAll(async () => {
  proc = spawn(
    "python3",
    ["-m", "calmkit.cli", "serve", "--clock", "virtual",
     "--port", String(PORT), "--study-seed", "5"],
    { cwd: "/root/pkg", stdio: "ignore" },
  );
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      await api.clock();
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("backend never came up");
      await new Promise((r) => setTimeout(r, 300));
    }
  }
});

afterAll(() => {
  proc?.kill();
});

describe("full study loop over HTTP", () => {
  let p: Participant;
  let day8: number; // local midnight of the first hourly-week day

  it("registers a participant on a virtual clock", async () => {
    const { mode, now_ms } = await api.clock();
    expect(mode).toBe("virtual");
    p = await api.register("e2e-fam", 0);
    // enrollment day is a lead-in; study day 0 starts at the next local
    // midnight, so the hourly week (days 7-13) begins 8 calendar days out
    expect(p.study_day).toBe(-1);
    expect(p.condition_now).toBe("none");
    day8 = Math.floor(now_ms / DAY) * DAY + 8 * DAY;
  });

  it("collects ten labels from answered hourly prompts", async () => {
    await advanceTo(day8 + 7 * HOUR);
    p = await api.participant(p.id);
    expect(p.condition_now).toBe("hourly");

    // alternate calm / active hours; the rating mirrors the energy so the
    // fitted line maps low energy to low ratings
    for (let h = 8; h <= 17; h++) {
      const energy = h % 2 === 0 ? 0.05 : 0.45;
      for (let k = 0; k < 12; k++) {
        await api.ingestWindow(p.id, day8 + (h - 1) * HOUR + k * WINDOW, energy, 300);
      }
    }
    const instruments = await api.instruments();
    const fields = fieldsFor("intraday", instruments.intraday);
    for (let h = 8; h <= 17; h++) {
      await advanceTo(day8 + h * HOUR + MINUTE);
      const [ev] = await pendingIntraday(p.id);
      expect(ev.trigger).toBe("fixed_slot");
      const rating = h % 2 === 0 ? "1" : "5";
      const items = canonicalize(fields, { activity_rating: rating, activity_text: "" });
      const ack = await api.submitResponse(ev.id, items);
      expect(ack.label_created).toBe(true);
      // round-trip fidelity: the stored response is byte-for-byte our payload
      expect(await api.storedResponse(ev.id)).toEqual({ event_id: ev.id, items });
    }
    p = await api.participant(p.id);
    expect(p.n_labels).toBe(10);
  });

  it("fits models and switches the participant to calm-only", async () => {
    const fit = await api.fitModels();
    expect(fit.scopes).toContain("global");
    expect(fit.n_labels).toBe(10);

    const { now_ms } = await api.clock();
    await api.switchCondition(p.id, "calm_only", now_ms + MINUTE);
    await api.advanceClock(2 * MINUTE);
    p = await api.participant(p.id);
    expect(p.condition_now).toBe("calm_only");
  });

  it("a calm stretch triggers a prompt the parent answers in time", async () => {
    const before = await api.metrics();
    const day9 = day8 + DAY;
    await advanceTo(day9 + 10 * HOUR);
    for (let k = 0; k < 12; k++) {
      await api.ingestWindow(p.id, day9 + 9 * HOUR + k * WINDOW, 0.05, 300);
    }
    const pending = await pendingIntraday(p.id);
    expect(pending.length).toBe(1);
    const [ev] = pending;
    expect(ev.trigger).toBe("calm_trigger");
    expect(ev.predicted).not.toBeNull();
    expect(ev.predicted!).toBeLessThan(3);
    expect(ev.expires_at_ms - ev.sent_at_ms).toBe(30 * MINUTE);

    const instruments = await api.instruments();
    const fields = fieldsFor("intraday", instruments.intraday);
    const items = canonicalize(fields, {
      activity_rating: "1",
      activity_text: "reading together",
    });
    const ack = await api.submitResponse(ev.id, items);
    expect(ack.answered).toBe(true);
    expect(await api.storedResponse(ev.id)).toEqual({ event_id: ev.id, items });

    const after = await api.metrics();
    expect(calmOnly(after).intraday.sent).toBe(calmOnly(before).intraday.sent + 1);
    expect(calmOnly(after).intraday.answered)
      .toBe(calmOnly(before).intraday.answered + 1);
  });
});
