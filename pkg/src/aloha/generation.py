"""Grounded answer assembly: timestamp-aware prompt, draft generation,
reference attachment, and localization into the user's language.

The built-in generator is extractive and deterministic: among the
top-scored evidence blocks (within 0.05 of the best score) it answers from
the newest one, which is what keeps outdated pages from winning when a
fresher revision was also retrieved.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from typing import Optional, Sequence

from .errors import ProviderUnavailable
from .langid import LanguageFrontdoor, NormalizedQuery
from .providers import HttpGenerationProvider
from .retrieval import STAGE_NONE, EvidenceSet
from .toolplanner import ToolLink

RECENCY_TIER_WIDTH = 0.05

WARNING_TRANSLATION_DEGRADED = "TranslationDegraded"
WARNING_NO_EVIDENCE = "NoEvidence"

REFUSAL_TEXT_PIVOT = "抱歉，没有找到与您的问题相关的校园资料，暂时无法回答这个问题。建议您换一种问法，或咨询相关部门。"


def _iso_date(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date().isoformat()


@dataclass(frozen=True)
class EvidenceBlock:
    doc_id: str
    kind: str
    timestamp: int
    timestamp_iso: str
    timestamp_inferred: bool
    content: str
    score: float


@dataclass(frozen=True)
class PromptBundle:
    current_time: int
    current_time_iso: str
    query_pivot: str
    evidence_blocks: tuple[EvidenceBlock, ...]
    instructions: str

    def render(self) -> str:
        blocks = []
        for block in self.evidence_blocks:
            marker = " (timestamp inferred at ingest)" if block.timestamp_inferred else ""
            blocks.append(
                f"[{block.doc_id}] kind={block.kind} timestamp={block.timestamp_iso}{marker}\n{block.content}"
            )
        return self.instructions.format(
            current_time=self.current_time_iso,
            query=self.query_pivot,
            evidence_blocks="\n\n".join(blocks),
        )


@dataclass(frozen=True)
class DraftResponse:
    text: str
    used_doc_ids: tuple[str, ...]


@dataclass(frozen=True)
class Reference:
    doc_id: str
    title: str
    source_url: Optional[str]
    timestamp: int

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "source_url": self.source_url,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class FinalResponse:
    text: str
    language: str
    references: tuple[Reference, ...]
    tool_links: tuple[ToolLink, ...]
    trace_id: str
    warnings: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "language": self.language,
            "references": [r.to_json() for r in self.references],
            "tool_links": [link.to_json() for link in self.tool_links],
            "trace_id": self.trace_id,
            "warnings": list(self.warnings),
        }


def load_prompt_template() -> str:
    return resources.files("aloha").joinpath("assets/prompt_template.txt").read_text(encoding="utf-8")


def assemble_prompt(q: NormalizedQuery, evidence: EvidenceSet, now: int) -> PromptBundle:
    """One block per evidence item, in evidence order, each with exactly one
    timestamp; the current time appears exactly once."""
    if evidence.stage == STAGE_NONE:
        raise ValueError("no-evidence requests are answered by fallback_response, not a prompt")
    blocks = []
    for item in evidence.items:
        doc = item.doc
        blocks.append(
            EvidenceBlock(
                doc_id=doc.id,
                kind=doc.kind.value,
                timestamp=doc.timestamp,
                timestamp_iso=_iso_date(doc.timestamp),
                timestamp_inferred=doc.timestamp_inferred,
                content=f"{doc.title}\n{doc.body}",
                score=item.rerank_score if item.rerank_score is not None else 0.0,
            )
        )
    return PromptBundle(
        current_time=now,
        current_time_iso=_iso_date(now),
        query_pivot=q.pivot_text,
        evidence_blocks=tuple(blocks),
        instructions=load_prompt_template(),
    )


def generate(
    bundle: PromptBundle,
    provider: Optional[HttpGenerationProvider] = None,
) -> DraftResponse:
    """Draft an answer from the bundle; the built-in never fails.

    Built-in rule: take the blocks whose score is within 0.05 of the best,
    answer with the newest of them (ties by ascending doc id).  Provider
    output is trusted for text but its used ids are filtered to the
    evidence actually supplied.
    """
    evidence_ids = [b.doc_id for b in bundle.evidence_blocks]
    if provider is not None:
        try:
            text, used = provider.generate(bundle.render(), evidence_ids)
            verified = tuple(u for u in used if u in evidence_ids)
            return DraftResponse(text=text, used_doc_ids=verified)
        except ProviderUnavailable:
            pass
    best = max(block.score for block in bundle.evidence_blocks)
    tier = [b for b in bundle.evidence_blocks if b.score >= best - RECENCY_TIER_WIDTH]
    chosen = sorted(tier, key=lambda b: (-b.timestamp, b.doc_id))[0]
    return DraftResponse(text=chosen.content, used_doc_ids=(chosen.doc_id,))


def fallback_response(q: NormalizedQuery) -> DraftResponse:
    """Honest refusal in the pivot language; quotes no document content."""
    return DraftResponse(text=REFUSAL_TEXT_PIVOT, used_doc_ids=())


def finalize(
    draft: DraftResponse,
    evidence: EvidenceSet,
    q: NormalizedQuery,
    tools: Sequence[ToolLink],
    frontdoor: LanguageFrontdoor,
    trace_id: str,
) -> FinalResponse:
    """References from the draft's used ids, localized text, warnings set.

    The language field always reports the user's language, even when
    translation degraded and the text is still in the pivot language; the
    warning makes the degradation visible.
    """
    by_id = {item.doc.id: item.doc for item in evidence.items}
    references = tuple(
        Reference(
            doc_id=doc_id,
            title=by_id[doc_id].title,
            source_url=by_id[doc_id].source_url,
            timestamp=by_id[doc_id].timestamp,
        )
        for doc_id in draft.used_doc_ids
        if doc_id in by_id
    )
    text, degraded = frontdoor.localize_response(draft.text, q.user_lang)
    warnings = []
    if degraded or q.translation_degraded:
        warnings.append(WARNING_TRANSLATION_DEGRADED)
    if evidence.stage == STAGE_NONE:
        warnings.append(WARNING_NO_EVIDENCE)
    return FinalResponse(
        text=text,
        language=q.user_lang,
        references=references,
        tool_links=tuple(tools),
        trace_id=trace_id,
        warnings=tuple(warnings),
    )
