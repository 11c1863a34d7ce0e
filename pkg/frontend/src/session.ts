/** Session state: one in-flight request at a time, strictly alternating
 * user/assistant bubbles, failures surfaced as notices with a retry
 * affordance (never dropped silently).
 */

import { renderResponse } from "./render.js";
import { ChatBubble, SystemNotice } from "./types.js";

export type SendFn = (message: string) => Promise<unknown>;

export class SessionView {
  messages: ChatBubble[] = [];
  notices: SystemNotice[] = [];
  pending = false;
  private lastFailedText: string | null = null;

  constructor(private readonly send: SendFn) {}

  canSend(text: string): boolean {
    return !this.pending && text.trim().length > 0;
  }

  get canRetry(): boolean {
    return !this.pending && this.lastFailedText !== null;
  }

  async sendMessage(text: string): Promise<void> {
    if (!this.canSend(text)) return;
    this.pending = true;
    this.lastFailedText = null;
    const bubble: ChatBubble = { role: "user", text };
    this.messages.push(bubble);
    try {
      const wire = await this.send(text);
      const html = renderResponse(wire);
      const traceId =
        typeof wire === "object" && wire !== null && "trace_id" in wire
          ? String((wire as { trace_id: unknown }).trace_id)
          : undefined;
      this.messages.push({ role: "assistant", text: "", html, traceId });
    } catch (error) {
      bubble.failed = true;
      this.lastFailedText = text;
      const reason = error instanceof Error ? error.message : String(error);
      this.notices.push({ text: `Message failed: ${reason}`, canRetry: true });
    } finally {
      this.pending = false;
    }
  }

  async retry(): Promise<void> {
    if (!this.canRetry || this.lastFailedText === null) return;
    const text = this.lastFailedText;
    // Drop the failed bubble; the retry re-adds it optimistically.
    const failedAt = this.messages.findIndex((m) => m.failed);
    if (failedAt >= 0) this.messages.splice(failedAt, 1);
    this.lastFailedText = null;
    await this.sendMessage(text);
  }

  /** The completed conversation alternates user/assistant, starting with user. */
  alternationHolds(): boolean {
    const settled = this.messages.filter((m) => !m.failed);
    return settled.every((m, i) => m.role === (i % 2 === 0 ? "user" : "assistant"));
  }
}
