import { describe, expect, it } from "vitest";

import {
  draftFrom,
  emptyDraft,
  fillAll,
  fillIndicator,
  supportOf,
  validateDraft,
} from "../src/predicate.js";
import { parseRat } from "../src/rational.js";

const STATES = ["1", "2", "3"];
const ONE = parseRat("1");
const TWO = parseRat("2");

describe("drafts", () => {
  it("starts blank and fills", () => {
    expect(emptyDraft(STATES).values).toEqual({ "1": "", "2": "", "3": "" });
    expect(fillAll(STATES, "1").values).toEqual({ "1": "1", "2": "1", "3": "1" });
    expect(fillIndicator(STATES, ["2"], "1").values).toEqual({ "1": "0", "2": "1", "3": "0" });
    expect(draftFrom(STATES, { "2": "1/2" }).values).toEqual({ "1": "0", "2": "1/2", "3": "0" });
  });
});

describe("classical validation", () => {
  it("accepts bits and treats blanks as 0", () => {
    const draft = { values: { "1": "1", "2": "", "3": "0" } };
    const res = validateDraft(draft, STATES, "classical", ONE);
    expect(res).toEqual({ ok: true, clean: { "1": "1", "2": "0", "3": "0" } });
  });

  it("rejects anything else per state", () => {
    const draft = { values: { "1": "1/2", "2": "2", "3": "1" } };
    const res = validateDraft(draft, STATES, "classical", ONE);
    expect(res.ok).toBe(false);
    if (!res.ok) {
      expect(Object.keys(res.errors).sort()).toEqual(["1", "2"]);
      expect(res.errors["1"]).toContain("0 or 1");
    }
  });
});

describe("metric validation", () => {
  it("accepts rationals inside [0, top] and normalizes them", () => {
    const draft = { values: { "1": "2/4", "2": "", "3": "2" } };
    const res = validateDraft(draft, STATES, "metric", TWO);
    expect(res).toEqual({ ok: true, clean: { "1": "1/2", "2": "0", "3": "2" } });
  });

  it("rejects values beyond top, negatives and junk", () => {
    const draft = { values: { "1": "5/2", "2": "-1/8", "3": "0.5" } };
    const res = validateDraft(draft, STATES, "metric", TWO);
    expect(res.ok).toBe(false);
    if (!res.ok) {
      expect(res.errors["1"]).toBe("outside [0, 2]");
      expect(res.errors["2"]).toBe("outside [0, 2]");
      expect(res.errors["3"]).toBe("not a rational p/q");
    }
  });
});

describe("supportOf", () => {
  it("lists states with positive value", () => {
    expect(supportOf({ "1": "0", "2": "1/8", "3": "1" })).toEqual(["2", "3"]);
  });
});
