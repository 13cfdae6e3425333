// Survey form descriptors and input canonicalization.
//
// The server publishes each instrument as {item: ["int", lo, hi] | ["bool"]
// | ["text"]}; forms are rendered from that listing so the client never
// hard-codes a schema it could get wrong. Canonicalization mirrors the
// server's rules (text optional, rating/bool required) so a submitted
// payload round-trips identically through GET /api/events/{id}/response.

export type ItemSpec = string[]; // ["int", "1", "5"] after JSON, or ["bool"] / ["text"]

export interface Field {
  name: string;
  kind: "int" | "bool" | "text";
  lo?: number;
  hi?: number;
  label: string;
  scale?: string[]; // per-point labels for int fields, lo..hi
}

const FIELD_LABELS: Record<string, string> = {
  activity_rating: "How active was your child in the last hour?",
  activity_text: "Anything to add? (optional)",
  medication_taken: "Did your child take their medication today?",
  communication_rating: "How effective was communication with your child today?",
  reflection_text: "Daily reflection (optional)",
  behavior_text: "Describe your child's behavior this week (optional)",
  efficacy_confident: "I felt confident managing my child's behavior",
  efficacy_overwhelmed: "I felt overwhelmed this week",
  efficacy_supported: "I felt supported this week",
  relationship_closeness: "I felt close to my child this week",
  relationship_positive_reinforcement: "I gave positive reinforcement this week",
  tech_notification_awareness: "The notifications made me more aware of calm moments",
  tech_connection_quality: "The notifications improved the quality of our connection",
  tech_manageability: "The number of notifications was manageable",
  tech_helped_connect: "The system helped me connect with my child",
  reflection_learning_text: "What did you learn this week? (optional)",
  reflection_change_text: "What would you change? (optional)",
};

const ACTIVITY_SCALE = [
  "Very Calm: Mostly sitting quietly",
  "Calm",
  "Moderate",
  "Active",
  "Very Active: Constant movement",
];

export function fieldsFor(kind: string, instrument: Record<string, ItemSpec>): Field[] {
  const fields: Field[] = [];
  for (const [name, spec] of Object.entries(instrument)) {
    const label = FIELD_LABELS[name] ?? name.replace(/_/g, " ");
    if (spec[0] === "int") {
      const lo = Number(spec[1]);
      const hi = Number(spec[2]);
      fields.push({
        name,
        kind: "int",
        lo,
        hi,
        label,
        scale: name === "activity_rating" ? ACTIVITY_SCALE : undefined,
      });
    } else if (spec[0] === "bool") {
      fields.push({ name, kind: "bool", label });
    } else {
      fields.push({ name, kind: "text", label });
    }
  }
  return fields;
}

export class FormError extends Error {
  constructor(public field: string, message: string) {
    super(message);
  }
}

/**
 * Turn raw form values (all strings, as the DOM gives them) into the typed
 * payload the server expects. Empty text fields are omitted entirely, empty
 * required fields raise, and out-of-range ratings raise before any network
 * call so the inline error points at the field.
 */
export function canonicalize(
  fields: Field[],
  raw: Record<string, string>,
): Record<string, unknown> {
  const items: Record<string, unknown> = {};
  for (const f of fields) {
    const value = raw[f.name] ?? "";
    if (f.kind === "text") {
      if (value !== "") items[f.name] = value;
      continue;
    }
    if (value === "") {
      throw new FormError(f.name, "required");
    }
    if (f.kind === "bool") {
      if (value !== "yes" && value !== "no") {
        throw new FormError(f.name, "answer yes or no");
      }
      items[f.name] = value === "yes";
    } else {
      const n = Number(value);
      if (!Number.isInteger(n) || n < (f.lo ?? 1) || n > (f.hi ?? 5)) {
        throw new FormError(f.name, `must be ${f.lo}-${f.hi}`);
      }
      items[f.name] = n;
    }
  }
  return items;
}
