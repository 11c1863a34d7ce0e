/** Wire types mirroring the service's JSON responses. */

export interface Reference {
  doc_id: string;
  title: string;
  source_url: string | null;
  timestamp: number;
}

export interface ToolLink {
  label: string;
  url: string;
  tool_name: string;
}

export interface ChatResponseWire {
  text: string;
  language: string;
  references: Reference[];
  tool_links: ToolLink[];
  trace_id: string;
  warnings: string[];
  latency_ms: number;
  stage: string;
}

export interface StageRecord {
  stage: string;
  executed: boolean;
  candidates_considered: number;
  survivors: number;
  skip_reason: string | null;
  provider_calls: Record<string, number>;
}

export interface TraceWire {
  trace_id: string;
  stages: StageRecord[];
  provider_call_counts: Record<string, number>;
  hit_stage?: string;
  language?: string;
  intent?: string;
}

export type Role = "user" | "assistant";

export interface ChatBubble {
  role: Role;
  /** Raw text for user bubbles, rendered HTML for assistant bubbles. */
  text: string;
  html?: string;
  traceId?: string;
  failed?: boolean;
}

export interface SystemNotice {
  text: string;
  canRetry: boolean;
}

export function isChatResponseWire(value: unknown): value is ChatResponseWire {
  if (typeof value !== "object" || value === null) return false;
  const wire = value as Record<string, unknown>;
  return (
    typeof wire.text === "string" &&
    typeof wire.language === "string" &&
    Array.isArray(wire.references) &&
    Array.isArray(wire.tool_links) &&
    typeof wire.trace_id === "string" &&
    Array.isArray(wire.warnings)
  );
}
