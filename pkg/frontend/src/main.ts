/** Browser bootstrap: wires the session and renderers into the page.
 * All behavior derives from the service's wire responses; the client adds
 * no retrieval logic of its own.
 */

import { ApiError, ChatApi } from "./api.js";
import { renderNotice, renderTrace, renderTraceExpired, renderUserBubble } from "./render.js";
import { SessionView } from "./session.js";

function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const baseUrl = root.dataset.baseUrl ?? "";
  const debugMode = root.dataset.debug === "true";
  const api = new ChatApi(baseUrl);
  const session = new SessionView((message) => api.sendChat(message));

  const transcript = document.createElement("div");
  transcript.className = "transcript";
  const form = document.createElement("form");
  form.className = "composer";
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "Ask about the campus…";
  const sendButton = document.createElement("button");
  sendButton.type = "submit";
  sendButton.textContent = "Send";
  form.append(input, sendButton);
  root.append(transcript, form);

  function repaint(): void {
    const parts: string[] = [];
    for (const message of session.messages) {
      parts.push(message.role === "user" ? renderUserBubble(message.text, message.failed) : message.html ?? "");
    }
    for (const notice of session.notices) {
      parts.push(renderNotice(notice));
    }
    transcript.innerHTML = parts.join("");
    sendButton.disabled = session.pending || input.value.trim().length === 0;
    for (const button of transcript.querySelectorAll<HTMLButtonElement>("[data-action='retry']")) {
      button.addEventListener("click", () => {
        session.notices = session.notices.filter((n) => !n.canRetry);
        void session.retry().then(repaint);
      });
    }
    if (debugMode) {
      for (const bubble of transcript.querySelectorAll<HTMLElement>("[data-trace-id]")) {
        bubble.addEventListener("click", () => {
          const traceId = bubble.dataset.traceId;
          if (traceId) void showTrace(traceId, bubble);
        });
      }
    }
  }

  async function showTrace(traceId: string, anchor: HTMLElement): Promise<void> {
    try {
      const trace = await api.getTrace(traceId);
      anchor.insertAdjacentHTML("beforeend", renderTrace(trace));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        anchor.insertAdjacentHTML("beforeend", renderTraceExpired(traceId));
      }
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    if (!session.canSend(text)) return;
    input.value = "";
    void session.sendMessage(text).then(repaint);
    repaint();
  });
  input.addEventListener("input", () => {
    sendButton.disabled = session.pending || input.value.trim().length === 0;
  });
  repaint();
}

if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", bootstrap);
  } else {
    bootstrap();
  }
}
