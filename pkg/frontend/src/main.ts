/** Browser client: a setup form, the game board, and a live event log. */

import {
  ApiError,
  type Hint,
  type Kind,
  type Move,
  type Role,
  type Snapshot,
  createSession,
  getHint,
  getHistory,
  openEvents,
  postMove,
} from "./api.js";
import { type Draft, emptyDraft, fillAll, validateDraft } from "./predicate.js";
import { parseRat } from "./rational.js";
import {
  type Store,
  challengeOptions,
  describeEvent,
  expectedMove,
  initialStore,
  statusText,
  withEvent,
  withNotice,
  withRejection,
  withSnapshot,
} from "./state.js";

const EXAMPLES: Record<string, { kind: Kind; x: string; y: string; eps: string; text: string }> = {
  "labelled tree": {
    kind: "classical",
    x: "1",
    y: "2",
    eps: "",
    text: `functor: Pow(Labels{a, b, c} x Id)
states: 1, 2, 3, 4, 5, 6, 7, 8, 9
alpha 1 = {(label a, 3), (label a, 4)}
alpha 2 = {(label a, 5)}
alpha 3 = {(label b, 6)}
alpha 4 = {(label c, 7)}
alpha 5 = {(label b, 8), (label c, 9)}
alpha 6 = {}
alpha 7 = {}
alpha 8 = {}
alpha 9 = {}
`,
  },
  "perturbed chain": {
    kind: "metric",
    x: "1",
    y: "2",
    eps: "1/16",
    text: `functor: Dist(Id) + One
states: 1, 2, 3, 4, 5, 6, 7
param eps = 1/8
alpha 1 = inl dist{3: 1/2, 4: 1/4, 5: 1/4}
alpha 2 = inl dist{6: 1/2 - eps, 7: 1/2 + eps}
alpha 3 = inl dist{3: 1}
alpha 4 = inr unit
alpha 5 = inr unit
alpha 6 = inl dist{6: 1}
alpha 7 = inr unit
`,
  },
};

type Attrs = Record<string, string | boolean | ((ev: Event) => void)>;

function h(tag: string, attrs: Attrs = {}, ...children: (Node | string)[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") node.addEventListener(key, value);
    else if (typeof value === "boolean") (node as unknown as Record<string, boolean>)[key] = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

class App {
  store: Store = initialStore;
  base = new URLSearchParams(location.search).get("api") ?? "";
  closeEvents: (() => void) | null = null;

  // composer state, reset whenever the game advances
  draft: Draft = { values: {} };
  side = "";
  challenge = "";
  answer = "";
  private composerKey = "";

  constructor(readonly root: HTMLElement) {}

  render(): void {
    this.root.replaceChildren(
      this.store.snapshot === null ? this.renderSetup() : this.renderGame(this.store.snapshot),
    );
  }

  private update(store: Store): void {
    this.store = store;
    this.render();
  }

  // -- setup -----------------------------------------------------------------

  private renderSetup(): HTMLElement {
    const firstExample = EXAMPLES["labelled tree"]!;
    const exampleSelect = h("select") as HTMLSelectElement;
    for (const name of Object.keys(EXAMPLES)) {
      exampleSelect.append(h("option", { value: name }, name));
    }
    const system = h("textarea", { rows: "12", spellcheck: false }) as HTMLTextAreaElement;
    system.value = firstExample.text;
    const kind = h("select") as HTMLSelectElement;
    kind.append(h("option", { value: "classical" }, "classical (equivalence)"));
    kind.append(h("option", { value: "metric" }, "metric (distance budget)"));
    const x = h("input", { value: firstExample.x }) as HTMLInputElement;
    const y = h("input", { value: firstExample.y }) as HTMLInputElement;
    const eps = h("input", { placeholder: "p/q" }) as HTMLInputElement;
    const role = h("select") as HTMLSelectElement;
    role.append(h("option", { value: "defender" }, "you defend"));
    role.append(h("option", { value: "spoiler" }, "you spoil"));
    role.append(h("option", { value: "both" }, "you play both sides"));
    const error = h("p", { class: "error", role: "alert" });

    exampleSelect.addEventListener("change", () => {
      const ex = EXAMPLES[exampleSelect.value];
      if (!ex) return;
      system.value = ex.text;
      kind.value = ex.kind;
      x.value = ex.x;
      y.value = ex.y;
      eps.value = ex.eps;
    });

    const start = async () => {
      error.textContent = "";
      try {
        const snap = await createSession(this.base, {
          system: system.value,
          kind: kind.value as Kind,
          x: x.value.trim(),
          y: y.value.trim(),
          eps: kind.value === "metric" ? eps.value.trim() : undefined,
          role: role.value as Role,
        });
        await this.attach(snap);
      } catch (exc) {
        error.textContent = exc instanceof ApiError ? exc.message : String(exc);
      }
    };

    return h(
      "section",
      { class: "setup" },
      h("h1", {}, "coalgame arena"),
      h(
        "p",
        {},
        "Two states of a transition system; a spoiler claims they differ",
        " (by more than a budget, in the metric game); a defender disputes it.",
      ),
      h("label", {}, "example ", exampleSelect),
      h("label", {}, "system ", system),
      h(
        "div",
        { class: "row" },
        h("label", {}, "game ", kind),
        h("label", {}, "state x ", x),
        h("label", {}, "state y ", y),
        h("label", {}, "budget ", eps),
        h("label", {}, "side ", role),
      ),
      h("button", { class: "primary", click: () => void start() }, "start game"),
      error,
    );
  }

  private async attach(snap: Snapshot): Promise<void> {
    this.update(withSnapshot(this.store, snap));
    const history = await getHistory(this.base, snap.id);
    let store = this.store;
    for (const ev of history.events) store = withEvent(store, ev);
    this.update(store);
    this.closeEvents?.();
    this.closeEvents = openEvents(this.base, snap.id, this.store.events.length, (ev) => {
      this.update(withEvent(this.store, ev));
    });
  }

  // -- game ------------------------------------------------------------------

  private resetComposer(snap: Snapshot): void {
    const key = `${snap.id}:${snap.moves}`;
    if (key === this.composerKey) return;
    this.composerKey = key;
    this.draft = emptyDraft(snap.states);
    this.side = snap.x;
    this.challenge = "";
    this.answer = "";
  }

  private renderGame(snap: Snapshot): HTMLElement {
    this.resetComposer(snap);
    const log = h(
      "ol",
      { class: "log" },
      ...this.store.events.map((ev) => h("li", {}, describeEvent(ev))),
    );
    const panel = h(
      "section",
      { class: "game" },
      h("h1", {}, `session ${snap.id}`),
      h("p", { class: snap.winner ? "status over" : "status" }, statusText(snap)),
      this.renderBoard(snap),
      this.renderComposer(snap),
      this.renderDiagnostics(),
      h("h2", {}, "transcript"),
      log,
      h(
        "button",
        {
          click: () => {
            this.closeEvents?.();
            this.closeEvents = null;
            this.update({ ...initialStore });
          },
        },
        "new session",
      ),
    );
    return panel;
  }

  private renderBoard(snap: Snapshot): HTMLElement {
    const classOf = (z: string): string => {
      const parts = ["state"];
      if (z === snap.x || z === snap.y) parts.push("pair");
      if (z === snap.s) parts.push("chosen");
      if (z === snap.challenge) parts.push("challenged");
      return parts.join(" ");
    };
    return h(
      "div",
      { class: "board" },
      ...snap.states.map((z) => h("span", { class: classOf(z) }, z)),
    );
  }

  private renderDiagnostics(): HTMLElement {
    const d = this.store.diagnostics;
    const box = h("div", { class: "diagnostics" });
    if (this.store.notice) box.append(h("p", { class: "notice" }, this.store.notice));
    if (!d) return box;
    box.append(h("p", { class: "error" }, d.message));
    if (d.failures?.length) {
      box.append(
        h("p", {}, "failed checks: ", ...d.failures.map((f) => h("code", { class: "chip" }, f))),
      );
    }
    if (d.slack?.length) {
      const rows = d.slack.map((r) =>
        h(
          "tr",
          { class: r.slack.startsWith("-") ? "bad" : "" },
          h("td", {}, h("code", {}, r.gamma)),
          h("td", {}, r.lhs),
          h("td", {}, r.rhs),
          h("td", {}, r.slack),
        ),
      );
      box.append(
        h(
          "table",
          {},
          h(
            "thead",
            {},
            h(
              "tr",
              {},
              h("th", {}, "observation"),
              h("th", {}, "challenged"),
              h("th", {}, "reply allows"),
              h("th", {}, "slack"),
            ),
          ),
          h("tbody", {}, ...rows),
        ),
      );
    }
    return box;
  }

  // -- moves -----------------------------------------------------------------

  private async submit(move: Move): Promise<void> {
    try {
      const snap = await postMove(this.base, this.store.snapshot!.id, move);
      this.update(withNotice(withSnapshot(this.store, snap), null));
    } catch (exc) {
      if (exc instanceof ApiError && exc.diagnostics) {
        this.update(withRejection(this.store, exc.diagnostics));
      } else {
        this.update(withNotice(this.store, String(exc)));
      }
    }
  }

  private async playHint(): Promise<void> {
    const snap = this.store.snapshot!;
    let hint: Hint;
    try {
      hint = await getHint(this.base, snap.id);
    } catch (exc) {
      this.update(withNotice(this.store, String(exc)));
      return;
    }
    if (hint.move === null) {
      await this.submit({ type: "concede", by: snap.turn });
      return;
    }
    await this.submit(hint.move);
  }

  private renderComposer(snap: Snapshot): HTMLElement {
    const move = expectedMove(snap);
    if (snap.phase === "over") return h("div", {});
    if (move === null) return h("p", { class: "waiting" }, "the engine is thinking...");
    const box = h("div", { class: "composer" });
    if (move === "step1") box.append(this.composeStep1(snap));
    if (move === "step2") box.append(this.composeStep2(snap));
    if (move === "step3") box.append(this.composeStep3(snap));
    if (move === "step4") box.append(this.composeStep4(snap));
    box.append(
      h(
        "div",
        { class: "row" },
        h("button", { click: () => void this.playHint() }, "let the engine move"),
        h(
          "button",
          { class: "danger", click: () => void this.submit({ type: "concede", by: snap.turn }) },
          "concede",
        ),
      ),
    );
    return box;
  }

  private predicateGrid(snap: Snapshot): HTMLElement {
    const topText = snap.kind === "classical" ? "1" : snap.top;
    const inputs = snap.states.map((z) => {
      const input = h("input", {
        value: this.draft.values[z] ?? "",
        placeholder: "0",
        input: (ev) => {
          this.draft.values[z] = (ev.target as HTMLInputElement).value;
        },
      }) as HTMLInputElement;
      return h("label", { class: "cell" }, z, input);
    });
    const setAll = (value: string) => {
      this.draft = fillAll(snap.states, value);
      this.render();
    };
    return h(
      "div",
      {},
      h("div", { class: "grid" }, ...inputs),
      h(
        "div",
        { class: "row" },
        h("button", { click: () => setAll("0") }, "all 0"),
        h("button", { click: () => setAll(topText) }, `all ${topText}`),
      ),
    );
  }

  private validated(snap: Snapshot): Record<string, string> | null {
    const checked = validateDraft(this.draft, snap.states, snap.kind, parseRat(snap.top));
    if (checked.ok) return checked.clean;
    const lines = Object.entries(checked.errors)
      .map(([z, msg]) => `${z}: ${msg}`)
      .join("; ");
    this.update(withNotice(this.store, `fix the predicate first (${lines})`));
    return null;
  }

  private composeStep1(snap: Snapshot): HTMLElement {
    const sideFor = (z: string) =>
      h(
        "label",
        {},
        h("input", {
          type: "radio",
          name: "side",
          value: z,
          checked: this.side === z,
          change: () => {
            this.side = z;
          },
        }),
        ` claim from ${z}`,
      );
    return h(
      "div",
      {},
      h("h2", {}, "step 1: pick a side and a predicate"),
      h("div", { class: "row" }, sideFor(snap.x), sideFor(snap.y)),
      this.predicateGrid(snap),
      h(
        "button",
        {
          class: "primary",
          click: () => {
            const clean = this.validated(snap);
            if (clean) void this.submit({ type: "step1", s: this.side, p1: clean });
          },
        },
        "play step 1",
      ),
    );
  }

  private composeStep2(snap: Snapshot): HTMLElement {
    return h(
      "div",
      {},
      h("h2", {}, `step 2: reply on ${snap.t ?? "?"} to the predicate on ${snap.s ?? "?"}`),
      this.predicateGrid(snap),
      h(
        "button",
        {
          class: "primary",
          click: () => {
            const clean = this.validated(snap);
            if (clean) void this.submit({ type: "step2", p2: clean });
          },
        },
        "play step 2",
      ),
    );
  }

  private composeStep3(snap: Snapshot): HTMLElement {
    const select = h("select", {
      change: (ev) => {
        this.challenge = (ev.target as HTMLSelectElement).value;
      },
    }) as HTMLSelectElement;
    select.append(h("option", { value: "" }, "choose..."));
    for (const opt of challengeOptions(snap)) {
      const value = `${opt.pick}:${opt.state}`;
      select.append(
        h(
          "option",
          { value, selected: this.challenge === value },
          `p${opt.pick} at state ${opt.state}`,
        ),
      );
    }
    return h(
      "div",
      {},
      h("h2", {}, "step 3: challenge one predicate at a state"),
      select,
      h(
        "button",
        {
          class: "primary",
          click: () => {
            const [pick, state] = this.challenge.split(":");
            if (!pick || !state) {
              this.update(withNotice(this.store, "choose a challenge first"));
              return;
            }
            void this.submit({ type: "step3", pick: Number(pick), state });
          },
        },
        "play step 3",
      ),
    );
  }

  private composeStep4(snap: Snapshot): HTMLElement {
    const select = h("select", {
      change: (ev) => {
        this.answer = (ev.target as HTMLSelectElement).value;
      },
    }) as HTMLSelectElement;
    select.append(h("option", { value: "" }, "choose..."));
    for (const z of snap.states) {
      select.append(h("option", { value: z, selected: this.answer === z }, `answer ${z}`));
    }
    return h(
      "div",
      {},
      h(
        "h2",
        {},
        `step 4: match the challenge on ${snap.challenge ?? "?"} from the other predicate`,
      ),
      select,
      h(
        "button",
        {
          class: "primary",
          click: () => {
            if (!this.answer) {
              this.update(withNotice(this.store, "choose an answer state first"));
              return;
            }
            void this.submit({ type: "step4", state: this.answer });
          },
        },
        "play step 4",
      ),
    );
  }
}

const root = document.getElementById("app");
if (root) {
  const app = new App(root);
  app.render();
}

export { App };
