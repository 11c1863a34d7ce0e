/** Thin fetch client for the assistant service; base URL is the only knob. */

import { ChatResponseWire, TraceWire } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Transport {
  sendChat(message: string, sessionId?: string): Promise<ChatResponseWire>;
  getTrace(traceId: string): Promise<TraceWire>;
}

export class ChatApi implements Transport {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async sendChat(message: string, sessionId?: string): Promise<ChatResponseWire> {
    const resp = await fetch(this.url("/v1/chat"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ message, session_id: sessionId ?? null }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `chat request failed with status ${resp.status}`);
    }
    return (await resp.json()) as ChatResponseWire;
  }

  async getTrace(traceId: string): Promise<TraceWire> {
    const resp = await fetch(this.url(`/v1/trace/${encodeURIComponent(traceId)}`));
    if (!resp.ok) {
      throw new ApiError(resp.status, `trace request failed with status ${resp.status}`);
    }
    return (await resp.json()) as TraceWire;
  }

  async health(): Promise<unknown> {
    const resp = await fetch(this.url("/v1/health"));
    if (!resp.ok) {
      throw new ApiError(resp.status, `health request failed with status ${resp.status}`);
    }
    return resp.json();
  }
}
