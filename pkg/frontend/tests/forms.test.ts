import { describe, expect, it } from "vitest";

import { canonicalize, fieldsFor, FormError } from "../src/forms.js";

// mirrors GET /api/instruments for the three prompt kinds
const INTRADAY = {
  activity_rating: ["int", "1", "5"],
  activity_text: ["text"],
};
const END_OF_DAY = {
  medication_taken: ["bool"],
  communication_rating: ["int", "1", "5"],
  reflection_text: ["text"],
};

describe("fieldsFor", () => {
  it("builds typed fields from the published instrument", () => {
    const fields = fieldsFor("intraday", INTRADAY);
    expect(fields.map((f) => f.kind)).toEqual(["int", "text"]);
    expect(fields[0].lo).toBe(1);
    expect(fields[0].hi).toBe(5);
  });

  it("labels the activity scale ends Very Calm / Very Active", () => {
    const [rating] = fieldsFor("intraday", INTRADAY);
    expect(rating.scale?.[0]).toMatch(/Very Calm/);
    expect(rating.scale?.[4]).toMatch(/Very Active/);
  });
});

describe("canonicalize", () => {
  const intraday = fieldsFor("intraday", INTRADAY);
  const endOfDay = fieldsFor("end_of_day", END_OF_DAY);

  it("types rating as integer and keeps text verbatim", () => {
    expect(canonicalize(intraday, { activity_rating: "2", activity_text: "calm play" }))
      .toEqual({ activity_rating: 2, activity_text: "calm play" });
  });

  it("omits empty optional text entirely", () => {
    expect(canonicalize(intraday, { activity_rating: "4", activity_text: "" }))
      .toEqual({ activity_rating: 4 });
  });

  it("maps yes/no radio values to booleans", () => {
    const items = canonicalize(endOfDay, {
      medication_taken: "yes",
      communication_rating: "3",
      reflection_text: "",
    });
    expect(items).toEqual({ medication_taken: true, communication_rating: 3 });
  });

  it("rejects missing required and out-of-range before any network call", () => {
    expect(() => canonicalize(intraday, { activity_rating: "" })).toThrow(FormError);
    expect(() => canonicalize(intraday, { activity_rating: "6" })).toThrow(FormError);
    expect(() => canonicalize(intraday, { activity_rating: "2.5" })).toThrow(FormError);
  });

  it("round-trips through JSON unchanged", () => {
    const items = canonicalize(endOfDay, {
      medication_taken: "no",
      communication_rating: "5",
      reflection_text: "long day",
    });
    expect(JSON.parse(JSON.stringify(items))).toEqual(items);
  });
});
