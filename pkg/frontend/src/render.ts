/** Pure HTML-string rendering of wire responses.
 *
 * No retrieval logic lives here: everything shown derives from the wire
 * payload. Tool links render as plain anchors opening a new context, so
 * nothing navigates without a user click.
 */

import {
  ChatResponseWire,
  SystemNotice,
  TraceWire,
  isChatResponseWire,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function textToHtml(text: string): string {
  return escapeHtml(text).replace(/\n/g, "<br>");
}

export function renderLanguageBadge(language: string): string {
  return `<span class="language-badge" data-language="${escapeHtml(language)}">${escapeHtml(language)}</span>`;
}

export function renderWarningChips(warnings: string[]): string {
  if (warnings.length === 0) return "";
  const chips = warnings
    .map((w) => `<span class="warning-chip" data-warning="${escapeHtml(w)}">${escapeHtml(w)}</span>`)
    .join("");
  return `<div class="warnings">${chips}</div>`;
}

export function renderReferences(wire: ChatResponseWire): string {
  if (wire.references.length === 0) return "";
  const rows = wire.references
    .map((ref) => {
      const title = ref.source_url
        ? `<a href="${escapeHtml(ref.source_url)}" target="_blank" rel="noopener noreferrer">${escapeHtml(ref.title)}</a>`
        : escapeHtml(ref.title);
      const date = new Date(ref.timestamp * 1000).toISOString().slice(0, 10);
      return `<div class="reference-row" data-doc-id="${escapeHtml(ref.doc_id)}">${title}<span class="reference-date">${date}</span></div>`;
    })
    .join("");
  return `<div class="references"><div class="references-heading">References</div>${rows}</div>`;
}

export function renderToolLinks(wire: ChatResponseWire): string {
  if (wire.tool_links.length === 0) return "";
  const buttons = wire.tool_links
    .map(
      (link) =>
        `<a class="tool-link" data-tool="${escapeHtml(link.tool_name)}" href="${escapeHtml(link.url)}" target="_blank" rel="noopener noreferrer">${escapeHtml(link.label)}</a>`,
    )
    .join("");
  return `<div class="tool-links">${buttons}</div>`;
}

/** Assistant bubble: answer text, references, tool links, badges, warnings. */
export function renderAssistant(wire: ChatResponseWire): string {
  return [
    `<div class="assistant-message" data-trace-id="${escapeHtml(wire.trace_id)}">`,
    renderLanguageBadge(wire.language),
    `<div class="answer-text">${textToHtml(wire.text)}</div>`,
    renderWarningChips(wire.warnings),
    renderReferences(wire),
    renderToolLinks(wire),
    `</div>`,
  ].join("");
}

/** Validating entry point: malformed payloads fall back to a raw JSON panel. */
export function renderResponse(payload: unknown): string {
  if (isChatResponseWire(payload)) {
    return renderAssistant(payload);
  }
  const raw = JSON.stringify(payload, null, 2) ?? String(payload);
  return `<div class="malformed-response"><div class="malformed-heading">Unrecognized response</div><pre>${escapeHtml(raw)}</pre></div>`;
}

export function renderUserBubble(text: string, failed = false): string {
  const cls = failed ? "user-message failed" : "user-message";
  return `<div class="${cls}">${textToHtml(text)}</div>`;
}

export function renderNotice(notice: SystemNotice): string {
  const retry = notice.canRetry
    ? `<button type="button" class="retry-button" data-action="retry">Retry</button>`
    : "";
  return `<div class="system-notice">${escapeHtml(notice.text)}${retry}</div>`;
}

/** Debug view: one row per cascade stage with executed/skip markers. */
export function renderTrace(trace: TraceWire): string {
  const rows = trace.stages
    .map((stage) => {
      const marker = stage.executed ? "executed" : "skipped";
      const reason = stage.skip_reason ? ` — ${escapeHtml(stage.skip_reason)}` : "";
      return (
        `<tr class="trace-row ${marker}" data-stage="${escapeHtml(stage.stage)}">` +
        `<td>${escapeHtml(stage.stage)}</td>` +
        `<td class="trace-marker">${marker}${reason}</td>` +
        `<td class="trace-candidates">${stage.candidates_considered}</td>` +
        `<td class="trace-survivors">${stage.survivors}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="trace-view" data-trace-id="${escapeHtml(trace.trace_id)}">` +
    `<thead><tr><th>stage</th><th>status</th><th>candidates</th><th>survivors</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderTraceExpired(traceId: string): string {
  return `<div class="system-notice trace-expired">Trace ${escapeHtml(traceId)} expired</div>`;
}
