import { describe, expect, it } from "vitest";

import type { HistoryEvent, Snapshot } from "../src/api.js";
import { SseParser } from "../src/api.js";
import {
  challengeOptions,
  describeEvent,
  expectedMove,
  initialStore,
  predicateText,
  statusText,
  withEvent,
  withRejection,
  withSnapshot,
} from "../src/state.js";

function snap(over: Partial<Snapshot> = {}): Snapshot {
  return {
    id: "abc123",
    name: "",
    kind: "classical",
    mode: "perlam",
    role: "both",
    states: ["1", "2", "3"],
    top: "1",
    phase: "step1",
    turn: "spoiler",
    your_move: true,
    round: 1,
    x: "1",
    y: "2",
    eps: null,
    s: null,
    t: null,
    p1: null,
    p2: null,
    pick: null,
    challenge: null,
    winner: null,
    reason: "",
    moves: 1,
    ...over,
  };
}

function ev(seq: number, over: Partial<Snapshot> = {}): HistoryEvent {
  return {
    round: 1,
    phase: "step1",
    by: "service",
    move: null,
    snapshot: snap({ moves: seq + 1, ...over }),
    seq,
  };
}

describe("store", () => {
  it("keeps the newest snapshot by move count", () => {
    let store = withSnapshot(initialStore, snap({ moves: 3, phase: "step3" }));
    store = withSnapshot(store, snap({ moves: 2 }));
    expect(store.snapshot?.phase).toBe("step3");
    store = withSnapshot(store, snap({ moves: 4, phase: "step4" }));
    expect(store.snapshot?.phase).toBe("step4");
  });

  it("appends events in seq order exactly once", () => {
    let store = initialStore;
    store = withEvent(store, ev(0));
    store = withEvent(store, ev(0)); // duplicate delivery
    store = withEvent(store, ev(1));
    expect(store.events.map((e) => e.seq)).toEqual([0, 1]);
    expect(store.snapshot?.moves).toBe(2);
  });

  it("keeps the snapshot fresh across a gap without logging the jump", () => {
    let store = withEvent(initialStore, ev(0));
    store = withEvent(store, ev(5, { phase: "over", winner: "spoiler" }));
    expect(store.events.map((e) => e.seq)).toEqual([0]);
    expect(store.snapshot?.winner).toBe("spoiler");
  });

  it("clears diagnostics when a snapshot lands", () => {
    let store = withRejection(initialStore, { message: "nope" });
    expect(store.diagnostics?.message).toBe("nope");
    store = withSnapshot(store, snap());
    expect(store.diagnostics).toBeNull();
  });
});

describe("turn logic", () => {
  it("yields the phase when it is the human's move", () => {
    expect(expectedMove(snap())).toBe("step1");
    expect(expectedMove(snap({ phase: "step2", turn: "defender" }))).toBe("step2");
    expect(expectedMove(snap({ your_move: false }))).toBeNull();
    expect(expectedMove(snap({ phase: "over", winner: "spoiler" }))).toBeNull();
  });

  it("offers challenges only where a classical predicate holds", () => {
    const s = snap({
      phase: "step3",
      p1: { "1": "1", "2": "0", "3": "0" },
      p2: { "1": "0", "2": "1", "3": "1" },
    });
    expect(challengeOptions(s)).toEqual([
      { pick: 1, state: "1" },
      { pick: 2, state: "2" },
      { pick: 2, state: "3" },
    ]);
  });

  it("offers every pick/state pair in the metric game", () => {
    const s = snap({ kind: "metric", phase: "step3", eps: "1/8" });
    expect(challengeOptions(s)).toHaveLength(6);
  });
});

describe("rendering helpers", () => {
  it("prints classical predicates as sets and metric ones as maps", () => {
    expect(predicateText({ "1": "1", "2": "0", "3": "1" }, "classical")).toBe("{1,3}");
    expect(predicateText({ "1": "0", "2": "0" }, "classical")).toBe("{}");
    expect(predicateText({ "1": "1/2", "2": "0" }, "metric")).toBe("{1:1/2}");
  });

  it("describes moves like the CLI transcript", () => {
    const base = ev(0);
    expect(describeEvent(base)).toBe("round 1 step1 service: session created");
    expect(
      describeEvent({
        ...base,
        by: "spoiler",
        move: { type: "step1", s: "2", p1: { "1": "0", "2": "1" } },
      }),
    ).toBe("round 1 step1 spoiler: s=2 p1={2}");
    expect(
      describeEvent({ ...base, by: "spoiler", move: { type: "step3", pick: 2, state: "7" } }),
    ).toBe("round 1 step1 spoiler: challenges p2 at 7");
    expect(
      describeEvent({
        ...base,
        by: "engine",
        move: null,
        snapshot: snap({ winner: "defender", reason: "spoiler cannot challenge" }),
      }),
    ).toBe("round 1 step1 engine: defender wins: spoiler cannot challenge");
  });

  it("summarizes the position", () => {
    expect(statusText(snap())).toBe("round 1, pair (1, 2): your move (step1)");
    expect(statusText(snap({ kind: "metric", eps: "1/8", your_move: false }))).toBe(
      "round 1, pair (1, 2), budget 1/8: waiting for the spoiler (step1)",
    );
    expect(statusText(snap({ phase: "over", winner: "defender", reason: "out of rounds" }))).toBe(
      "defender wins (out of rounds)",
    );
  });
});

describe("SseParser", () => {
  const wire = (e: HistoryEvent) => `event: update\ndata: ${JSON.stringify(e)}\n\n`;

  it("parses complete events and ignores retry and keepalives", () => {
    const parser = new SseParser();
    const got = parser.feed(`retry: 2000\n\n: keepalive\n\n${wire(ev(0))}${wire(ev(1))}`);
    expect(got.map((e) => e.seq)).toEqual([0, 1]);
  });

  it("reassembles events split across arbitrary chunk boundaries", () => {
    const text = wire(ev(0)) + wire(ev(1)) + wire(ev(2));
    for (const size of [1, 3, 7, 16]) {
      const parser = new SseParser();
      const got: number[] = [];
      for (let i = 0; i < text.length; i += size) {
        for (const e of parser.feed(text.slice(i, i + size))) got.push(e.seq);
      }
      expect(got).toEqual([0, 1, 2]);
    }
  });
});
