/** Editor model for predicates: raw text per state, validated per game kind. */

import type { Kind } from "./api.js";
import { type Rat, ZERO, cmp, parseRat, ratToString } from "./rational.js";

export interface Draft {
  /** Raw input per state; missing or blank mean 0. */
  values: Record<string, string>;
}

export interface DraftOk {
  ok: true;
  /** Normalized wire form, every state present. */
  clean: Record<string, string>;
}

export interface DraftBad {
  ok: false;
  /** Per-state message for every offending entry. */
  errors: Record<string, string>;
}

export const emptyDraft = (states: string[]): Draft => ({
  values: Object.fromEntries(states.map((z) => [z, ""])),
});

export const draftFrom = (states: string[], wire: Record<string, string>): Draft => ({
  values: Object.fromEntries(states.map((z) => [z, wire[z] ?? "0"])),
});

/** Set every state to the same value. */
export const fillAll = (states: string[], value: string): Draft => ({
  values: Object.fromEntries(states.map((z) => [z, value])),
});

/** Indicator of a subset: `one` on the subset, "0" elsewhere. */
export const fillIndicator = (states: string[], subset: Iterable<string>, one: string): Draft => {
  const inSet = new Set(subset);
  return { values: Object.fromEntries(states.map((z) => [z, inSet.has(z) ? one : "0"])) };
};

/**
 * Validate a draft for the given game kind.  Classical predicates take
 * the values 0 and 1 only; metric ones take any rational in [0, top].
 */
export function validateDraft(draft: Draft, states: string[], kind: Kind, top: Rat): DraftOk | DraftBad {
  const clean: Record<string, string> = {};
  const errors: Record<string, string> = {};
  for (const z of states) {
    const raw = (draft.values[z] ?? "").trim();
    if (raw === "") {
      clean[z] = "0";
      continue;
    }
    if (kind === "classical") {
      if (raw === "0" || raw === "1") clean[z] = raw;
      else errors[z] = "must be 0 or 1";
      continue;
    }
    let v: Rat;
    try {
      v = parseRat(raw);
    } catch {
      errors[z] = "not a rational p/q";
      continue;
    }
    if (cmp(v, ZERO) < 0 || cmp(v, top) > 0) {
      errors[z] = `outside [0, ${ratToString(top)}]`;
      continue;
    }
    clean[z] = ratToString(v);
  }
  return Object.keys(errors).length ? { ok: false, errors } : { ok: true, clean };
}

/** States a validated predicate accepts with a positive value. */
export function supportOf(clean: Record<string, string>): string[] {
  return Object.entries(clean)
    .filter(([, v]) => cmp(parseRat(v), ZERO) > 0)
    .map(([z]) => z);
}
