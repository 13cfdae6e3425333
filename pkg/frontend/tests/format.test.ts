import { describe, expect, it } from "vitest";

import {
  batteryClass,
  conditionLabel,
  connectivityClass,
  countdown,
  ratePct,
  stateClass,
} from "../src/format.js";

describe("countdown", () => {
  it("renders minutes and seconds", () => {
    expect(countdown(0, 29 * 60_000 + 59_000)).toBe("29:59");
    expect(countdown(0, 5_000)).toBe("0:05");
  });

  it("renders hours for the long horizons", () => {
    expect(countdown(0, 12 * 3_600_000)).toBe("12:00:00");
    expect(countdown(0, 47 * 3_600_000 + 30 * 60_000)).toBe("47:30:00");
  });

  it("closed boundary: exactly at expiry reads expired", () => {
    expect(countdown(1_000_000, 1_000_000)).toBe("expired");
    expect(countdown(1_000_001, 1_000_000)).toBe("expired");
    expect(countdown(999_999, 1_000_000)).toBe("0:00");
  });
});

describe("stateClass", () => {
  it("maps the three prompt states", () => {
    expect(stateClass("pending")).toBe("chip-pending");
    expect(stateClass("answered")).toBe("chip-answered");
    expect(stateClass("expired")).toBe("chip-expired");
  });
});

describe("ratePct", () => {
  it("formats to one decimal and handles undefined", () => {
    expect(ratePct(42.857)).toBe("42.9%");
    expect(ratePct(null)).toBe("n/a");
  });
});

describe("conditionLabel", () => {
  it("covers all four conditions", () => {
    expect(conditionLabel("none")).toBe("None");
    expect(conditionLabel("hourly")).toBe("Hourly");
    expect(conditionLabel("random")).toBe("Random");
    expect(conditionLabel("calm_only")).toBe("Calm-only");
  });
});

describe("device badges", () => {
  it("battery thresholds", () => {
    expect(batteryClass(80)).toBe("bat-ok");
    expect(batteryClass(40)).toBe("bat-ok");
    expect(batteryClass(39)).toBe("bat-low");
    expect(batteryClass(14)).toBe("bat-critical");
    expect(batteryClass(null)).toBe("bat-unknown");
  });

  it("connectivity freshness", () => {
    const now = 10_000_000;
    expect(connectivityClass(now, now - 60_000)).toBe("conn-online");
    expect(connectivityClass(now, now - 30 * 60_000)).toBe("conn-stale");
    expect(connectivityClass(now, now - 2 * 3_600_000)).toBe("conn-offline");
    expect(connectivityClass(now, null)).toBe("conn-never");
  });
});
