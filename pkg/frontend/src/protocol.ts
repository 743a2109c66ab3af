// Wire types for the gateway's JSON frames. The console renders exactly what
// the frames contain; nothing is recomputed client-side.

export interface CandidateDebug {
  text: string;
  source: string;
  relation: string | null;
  dialogue_act: string;
  content_key: string;
  score: number;
  features: Record<string, number>;
}

export interface SalienceDebug {
  entity_id: string;
  last_mention_turn: number;
}

export interface DebugPayload {
  user_act: string;
  decision: {
    system_act: string;
    preferred_relations: string[];
    must_answer: boolean;
  };
  candidates: CandidateDebug[];
  salience: SalienceDebug[];
  unlinked_mentions: string[];
  latency_ms: number;
  turn_index: number;
}

export type Frame =
  | { type: "user_turn"; index: number; text: string; replay?: boolean }
  | { type: "system_turn"; index: number; text: string; replay?: boolean }
  | { type: "debug_state"; debug: DebugPayload }
  | { type: "ready" }
  | { type: "error"; message: string };

const TURN_TYPES = new Set(["user_turn", "system_turn"]);

export function parseFrame(raw: string): Frame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error(`frame is not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new Error("frame has no type field");
  }
  const frame = data as Record<string, unknown>;
  const type = frame.type as string;
  if (TURN_TYPES.has(type)) {
    if (typeof frame.text !== "string" || typeof frame.index !== "number") {
      throw new Error(`${type} frame missing text/index`);
    }
    return frame as unknown as Frame;
  }
  if (type === "debug_state") {
    if (typeof frame.debug !== "object" || frame.debug === null) {
      throw new Error("debug_state frame missing debug payload");
    }
    return frame as unknown as Frame;
  }
  if (type === "ready" || type === "error") {
    return frame as unknown as Frame;
  }
  throw new Error(`unknown frame type: ${type}`);
}

export function userTurnFrame(text: string): string {
  return JSON.stringify({ type: "user_turn", text });
}
