// Pure display helpers. The server stays authoritative for every decision;
// these only turn its JSON into strings and CSS class names.

const MINUTE_MS = 60_000;
const HOUR_MS = 60 * MINUTE_MS;

/** "29:59" style countdown, or "expired" at/after the deadline (closed). */
export function countdown(nowMs: number, expiresAtMs: number): string {
  const left = expiresAtMs - nowMs;
  if (left <= 0) return "expired";
  const totalSec = Math.floor(left / 1000);
  const h = Math.floor(totalSec / 3600);
  const m = Math.floor((totalSec % 3600) / 60);
  const s = totalSec % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return h > 0 ? `${h}:${mm}:${ss}` : `${m}:${ss}`;
}

/** pending / answered / expired → CSS class for the timeline chips. */
export function stateClass(state: string): string {
  switch (state) {
    case "answered":
      return "chip-answered";
    case "expired":
      return "chip-expired";
    default:
      return "chip-pending";
  }
}

export function conditionLabel(condition: string): string {
  const names: Record<string, string> = {
    none: "None",
    hourly: "Hourly",
    random: "Random",
    calm_only: "Calm-only",
  };
  return names[condition] ?? condition;
}

export function ratePct(rate: number | null): string {
  return rate === null ? "n/a" : `${rate.toFixed(1)}%`;
}

/** Battery badge: ok >= 40, low >= 15, critical below, unknown when null. */
export function batteryClass(pct: number | null): string {
  if (pct === null) return "bat-unknown";
  if (pct >= 40) return "bat-ok";
  if (pct >= 15) return "bat-low";
  return "bat-critical";
}

/** Device freshness: online within 10 min of last contact, stale within 1 h. */
export function connectivityClass(nowMs: number, lastSeenMs: number | null): string {
  if (lastSeenMs === null) return "conn-never";
  const age = nowMs - lastSeenMs;
  if (age <= 10 * MINUTE_MS) return "conn-online";
  if (age <= HOUR_MS) return "conn-stale";
  return "conn-offline";
}

export function clockLabel(nowMs: number, utcOffsetMinutes = 0): string {
  return new Date(nowMs + utcOffsetMinutes * MINUTE_MS)
    .toISOString()
    .replace("T", " ")
    .slice(0, 16);
}

const KIND_TITLES: Record<string, string> = {
  intraday: "Activity check-in",
  end_of_day: "End-of-day survey",
  end_of_week: "End-of-week survey",
};

export function kindTitle(kind: string): string {
  return KIND_TITLES[kind] ?? kind;
}
