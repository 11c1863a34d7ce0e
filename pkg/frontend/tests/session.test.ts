import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { SessionView } from "../src/session.js";
import { ChatResponseWire } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const transcripts: { request: { message: string }; response: ChatResponseWire }[] = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "transcripts.json"), "utf-8"),
);

function recordedTransport() {
  const byMessage = new Map(transcripts.map((t) => [t.request.message, t.response]));
  return async (message: string): Promise<ChatResponseWire> => {
    const wire = byMessage.get(message);
    if (!wire) throw new Error("503 service unavailable");
    return wire;
  };
}

describe("session state machine", () => {
  it("appends alternating bubbles on success", async () => {
    const session = new SessionView(recordedTransport());
    await session.sendMessage("Où se trouve la Cantine Xinyuan ?");
    await session.sendMessage("寒假什么时候开始");
    expect(session.messages).toHaveLength(4);
    expect(session.alternationHolds()).toBe(true);
    expect(session.messages[1].html).toContain("data-language=\"fr\"");
  });

  it("rejects empty input", async () => {
    let calls = 0;
    const session = new SessionView(async () => {
      calls += 1;
      return transcripts[0].response;
    });
    expect(session.canSend("   ")).toBe(false);
    await session.sendMessage("   ");
    expect(calls).toBe(0);
    expect(session.messages).toHaveLength(0);
  });

  it("allows only one in-flight request", async () => {
    let release!: (wire: ChatResponseWire) => void;
    const gate = new Promise<ChatResponseWire>((resolve) => {
      release = resolve;
    });
    const session = new SessionView(() => gate);
    const first = session.sendMessage("first");
    expect(session.pending).toBe(true);
    expect(session.canSend("second")).toBe(false);
    await session.sendMessage("second"); // silently refused while pending
    release(transcripts[0].response);
    await first;
    expect(session.pending).toBe(false);
    expect(session.messages.filter((m) => m.role === "user")).toHaveLength(1);
  });

  it("surfaces failures as notices with a retry affordance", async () => {
    const session = new SessionView(async () => {
      throw new Error("503 service unavailable");
    });
    await session.sendMessage("unreachable question");
    expect(session.notices).toHaveLength(1);
    expect(session.notices[0].canRetry).toBe(true);
    expect(session.notices[0].text).toContain("503");
    expect(session.canRetry).toBe(true);
    expect(session.messages[0].failed).toBe(true);
  });

  it("retry replays the failed message", async () => {
    let failOnce = true;
    const recorded = recordedTransport();
    const session = new SessionView(async (message) => {
      if (failOnce) {
        failOnce = false;
        throw new Error("network down");
      }
      return recorded(message);
    });
    await session.sendMessage("介绍国际关系学院");
    expect(session.canRetry).toBe(true);
    await session.retry();
    expect(session.canRetry).toBe(false);
    expect(session.messages).toHaveLength(2);
    expect(session.alternationHolds()).toBe(true);
    expect(session.messages[1].traceId).toBeTruthy();
  });

  it("malformed wire payloads still render (fallback panel)", async () => {
    const session = new SessionView(async () => ({ nonsense: true }));
    await session.sendMessage("anything");
    expect(session.messages[1].html).toContain("malformed-response");
  });
});
