/** Typed client for the arena's JSON API.  Rationals stay strings "p/q". */

export type Kind = "classical" | "metric";
export type Role = "spoiler" | "defender" | "both";
export type Phase = "step1" | "step2" | "step3" | "step4" | "over";
export type Side = "spoiler" | "defender";

export interface Snapshot {
  id: string;
  name: string;
  kind: Kind;
  mode: string;
  role: Role;
  states: string[];
  /** Upper bound of the value lattice, as "p/q". */
  top: string;
  phase: Phase;
  turn: Side;
  your_move: boolean;
  round: number;
  x: string;
  y: string;
  eps: string | null;
  s: string | null;
  t: string | null;
  p1: Record<string, string> | null;
  p2: Record<string, string> | null;
  pick: number | null;
  challenge: string | null;
  winner: Side | null;
  reason: string;
  moves: number;
}

export interface SessionCreate {
  system: string;
  kind: Kind;
  x: string;
  y: string;
  eps?: string;
  role?: Role;
  mode?: string;
  seed?: number;
  params?: Record<string, string>;
  name?: string;
}

export interface Move {
  type: "step1" | "step2" | "step3" | "step4" | "concede";
  s?: string;
  state?: string;
  pick?: number;
  by?: Side;
  p1?: Record<string, string>;
  p2?: Record<string, string>;
}

export interface SlackRow {
  gamma: string;
  lhs: string;
  rhs: string;
  slack: string;
}

/** Body of a 422: a message plus either failed map names or slack rows. */
export interface MoveDiagnostics {
  message: string;
  failures?: string[];
  slack?: SlackRow[];
}

export interface Hint {
  move: Move | null;
  note: string | null;
}

export interface HistoryEvent {
  round: number;
  phase: string;
  by: string;
  move: Move | null;
  snapshot: Snapshot;
  seq: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: MoveDiagnostics | { message?: string } | string,
  ) {
    super(typeof detail === "string" ? detail : (detail.message ?? `HTTP ${status}`));
  }

  /** Structured move diagnostics when the server sent any. */
  get diagnostics(): MoveDiagnostics | null {
    if (typeof this.detail === "object" && this.detail && "message" in this.detail) {
      return this.detail as MoveDiagnostics;
    }
    return null;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const text = await resp.text();
  let body: unknown = text;
  try {
    body = JSON.parse(text);
  } catch {
    // non-JSON error bodies pass through as text
  }
  if (!resp.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? (body as { detail: MoveDiagnostics | string }).detail
        : String(body);
    throw new ApiError(resp.status, detail);
  }
  return body as T;
}

export const createSession = (base: string, body: SessionCreate): Promise<Snapshot> =>
  request(base, "/api/sessions", { method: "POST", body: JSON.stringify(body) });

export const getSession = (base: string, id: string): Promise<Snapshot> =>
  request(base, `/api/sessions/${id}`);

export const postMove = (base: string, id: string, move: Move): Promise<Snapshot> =>
  request(base, `/api/sessions/${id}/moves`, { method: "POST", body: JSON.stringify(move) });

export const getHint = (base: string, id: string): Promise<Hint> =>
  request(base, `/api/sessions/${id}/hint`);

export const getHistory = (base: string, id: string): Promise<{ events: HistoryEvent[] }> =>
  request(base, `/api/sessions/${id}/history`);

/**
 * Incremental parser for the event stream ("retry:", "event:", "data:",
 * ":" keepalives).  Feed it raw chunks; it yields the JSON payload of
 * every complete data event, regardless of how chunks split lines.
 */
export class SseParser {
  private buffer = "";

  feed(chunk: string): HistoryEvent[] {
    this.buffer += chunk;
    const events: HistoryEvent[] = [];
    let sep;
    while ((sep = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, sep);
      this.buffer = this.buffer.slice(sep + 2);
      const data = block
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).trim())
        .join("\n");
      if (data) events.push(JSON.parse(data) as HistoryEvent);
    }
    return events;
  }
}

/**
 * Live updates via EventSource (browser only; tests read the stream
 * with fetch and SseParser instead).  Returns a close function.
 */
export function openEvents(
  base: string,
  id: string,
  since: number,
  onEvent: (ev: HistoryEvent) => void,
  onError?: () => void,
): () => void {
  const source = new EventSource(`${base}/api/sessions/${id}/events?since=${since}`);
  source.addEventListener("update", (msg) => {
    onEvent(JSON.parse((msg as MessageEvent).data) as HistoryEvent);
  });
  if (onError) source.onerror = onError;
  return () => source.close();
}
