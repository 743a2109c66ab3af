// Session client: HTTP bootstrap plus the bidirectional frame stream.
// The socket and fetch implementations are injected so the same logic runs
// in the browser, in tests with fakes, and in node integration tests.

import { DebugPayload, Frame, parseFrame, userTurnFrame } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type FetchLike = (url: string, init?: unknown) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export type ConnectionStatus = "idle" | "connecting" | "connected" | "error" | "closed";

export interface ChatTurn {
  index: number;
  speaker: "user" | "system";
  text: string;
  replay: boolean;
}

export interface SessionInfo {
  sessionId: string;
  opening: string;
}

export async function createSession(baseUrl: string, fetchFn: FetchLike): Promise<SessionInfo> {
  const response = await fetchFn(`${baseUrl}/session`, { method: "POST" });
  if (!response.ok) {
    throw new Error(`session create failed: HTTP ${response.status}`);
  }
  const body = (await response.json()) as { session_id: string; opening: string };
  return { sessionId: body.session_id, opening: body.opening };
}

export function streamUrl(baseUrl: string, sessionId: string): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/session/${sessionId}/stream`;
}

interface PendingSend {
  text: string;
}

export class SessionClient {
  readonly turns: ChatTurn[] = [];
  readonly debugByTurn = new Map<number, DebugPayload>();
  status: ConnectionStatus = "idle";
  lastError: string | null = null;

  private socket: SocketLike | null = null;
  private queue: PendingSend[] = [];
  private awaitingDebug = false;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly socketFactory: SocketFactory,
  ) {}

  onUpdate(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  /** True while a send is in flight; the input box should be disabled. */
  get busy(): boolean {
    return this.awaitingDebug || this.queue.length > 0;
  }

  get latestDebug(): DebugPayload | null {
    let best: DebugPayload | null = null;
    for (const debug of this.debugByTurn.values()) {
      if (best === null || debug.turn_index > best.turn_index) {
        best = debug;
      }
    }
    return best;
  }

  connect(): void {
    this.status = "connecting";
    this.lastError = null;
    this.turns.length = 0;
    this.debugByTurn.clear();
    this.awaitingDebug = false;
    this.notify();

    const socket = this.socketFactory(streamUrl(this.baseUrl, this.sessionId));
    this.socket = socket;
    socket.onmessage = (ev) => this.handleRaw(String(ev.data));
    socket.onerror = () => {
      this.status = "error";
      this.lastError = "connection failed";
      this.notify();
    };
    socket.onclose = () => {
      if (this.status !== "error") {
        this.status = "closed";
      }
      this.notify();
    };
  }

  /** Reconnecting simply reopens the stream; the gateway replays the
   * transcript, which rebuilds the full history. */
  reconnect(): void {
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
    this.queue = [];
    this.connect();
  }

  sendTurn(text: string): void {
    const trimmed = text.trim();
    if (!trimmed || this.status !== "connected") {
      return;
    }
    this.queue.push({ text: trimmed });
    this.pump();
    this.notify();
  }

  private pump(): void {
    if (this.awaitingDebug || this.queue.length === 0 || !this.socket) {
      return;
    }
    const next = this.queue.shift()!;
    this.awaitingDebug = true;
    this.socket.send(userTurnFrame(next.text));
  }

  private handleRaw(raw: string): void {
    let frame: Frame;
    try {
      frame = parseFrame(raw);
    } catch (err) {
      this.lastError = String(err);
      this.notify();
      return;
    }
    this.handleFrame(frame);
  }

  private handleFrame(frame: Frame): void {
    switch (frame.type) {
      case "ready":
        this.status = "connected";
        break;
      case "user_turn":
      case "system_turn":
        this.turns.push({
          index: frame.index,
          speaker: frame.type === "user_turn" ? "user" : "system",
          text: frame.text,
          replay: Boolean(frame.replay),
        });
        break;
      case "debug_state":
        this.debugByTurn.set(frame.debug.turn_index, frame.debug);
        this.awaitingDebug = false;
        this.pump();
        break;
      case "error":
        this.lastError = frame.message;
        this.awaitingDebug = false;
        this.pump();
        break;
    }
    this.notify();
  }
}
