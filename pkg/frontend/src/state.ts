/** Pure session store: snapshots, the deduplicated event log, diagnostics. */

import type { HistoryEvent, Move, MoveDiagnostics, Snapshot } from "./api.js";
import { ZERO, cmp, parseRat } from "./rational.js";

export interface Store {
  snapshot: Snapshot | null;
  /** Event log in seq order without gaps or duplicates. */
  events: HistoryEvent[];
  /** Diagnostics of the most recent rejected move, until the next accepted one. */
  diagnostics: MoveDiagnostics | null;
  notice: string | null;
}

export const initialStore: Store = {
  snapshot: null,
  events: [],
  diagnostics: null,
  notice: null,
};

const newer = (a: Snapshot | null, b: Snapshot): Snapshot =>
  a === null || b.moves >= a.moves ? b : a;

export function withSnapshot(store: Store, snapshot: Snapshot): Store {
  return { ...store, snapshot: newer(store.snapshot, snapshot), diagnostics: null };
}

/** Apply a streamed event; out-of-order and repeated deliveries are dropped. */
export function withEvent(store: Store, ev: HistoryEvent): Store {
  const expected = store.events.length;
  if (ev.seq < expected) return store;
  if (ev.seq > expected) {
    // a gap: trust the embedded snapshot but let the log show the jump
    return { ...store, snapshot: newer(store.snapshot, ev.snapshot) };
  }
  return {
    ...store,
    events: [...store.events, ev],
    snapshot: newer(store.snapshot, ev.snapshot),
  };
}

export function withRejection(store: Store, diagnostics: MoveDiagnostics): Store {
  return { ...store, diagnostics };
}

export function withNotice(store: Store, notice: string | null): Store {
  return { ...store, notice };
}

/** Which move the human composes now, or null when it is not their turn. */
export function expectedMove(snap: Snapshot): Move["type"] | null {
  if (snap.phase === "over" || !snap.your_move) return null;
  return snap.phase;
}

/** The states a step-3 challenge may name, given the current predicates. */
export function challengeOptions(snap: Snapshot): { pick: number; state: string }[] {
  const out: { pick: number; state: string }[] = [];
  if (snap.phase !== "step3") return out;
  if (snap.kind === "metric") {
    for (const pick of [1, 2]) for (const z of snap.states) out.push({ pick, state: z });
    return out;
  }
  for (const [pick, p] of [
    [1, snap.p1],
    [2, snap.p2],
  ] as const) {
    for (const z of snap.states) {
      if (p && p[z] !== undefined && cmp(parseRat(p[z]!), ZERO) > 0) out.push({ pick, state: z });
    }
  }
  return out;
}

/** Render a predicate for the log: sets for classical, sparse maps otherwise. */
export function predicateText(p: Record<string, string>, kind: string): string {
  const entries = Object.entries(p).filter(([, v]) => v !== "0");
  if (!entries.length) return "{}";
  if (kind === "classical" && entries.every(([, v]) => v === "1")) {
    return `{${entries.map(([z]) => z).join(",")}}`;
  }
  return `{${entries.map(([z, v]) => `${z}:${v}`).join(", ")}}`;
}

/** One log line per event, matching the CLI transcript style. */
export function describeEvent(ev: HistoryEvent): string {
  const head = `round ${ev.round} ${ev.phase}`;
  const kind = ev.snapshot.kind;
  const m = ev.move;
  if (!m) {
    const tail = ev.snapshot.winner
      ? `${ev.snapshot.winner} wins: ${ev.snapshot.reason}`
      : "session created";
    return `${head} ${ev.by}: ${tail}`;
  }
  switch (m.type) {
    case "step1":
      return `${head} ${ev.by}: s=${m.s} p1=${predicateText(m.p1 ?? {}, kind)}`;
    case "step2":
      return `${head} ${ev.by}: p2=${predicateText(m.p2 ?? {}, kind)}`;
    case "step3":
      return `${head} ${ev.by}: challenges p${m.pick} at ${m.state}`;
    case "step4":
      return `${head} ${ev.by}: answers ${m.state}`;
    case "concede":
      return `${head} ${ev.by}: concedes`;
  }
}

/** Short status line for the header. */
export function statusText(snap: Snapshot): string {
  if (snap.winner) return `${snap.winner} wins (${snap.reason})`;
  const pair = `(${snap.x}, ${snap.y})`;
  const budget = snap.kind === "metric" && snap.eps !== null ? `, budget ${snap.eps}` : "";
  const who = snap.your_move ? "your move" : `waiting for the ${snap.turn}`;
  return `round ${snap.round}, pair ${pair}${budget}: ${who} (${snap.phase})`;
}
