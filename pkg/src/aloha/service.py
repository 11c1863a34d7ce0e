"""Request orchestration behind the HTTP API and CLI.

One chat request flows through three phases: query analysis (language
detection, pivoting, intent), the retrieval cascade, and post-processing
(generation, tool planning, localization).  Every request leaves behind a
resolvable trace; snapshots and indexes are shared immutably and swapped
atomically on ingest.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Request
from pydantic import BaseModel

from . import docstore, generation, retrieval
from .config import Config
from .docstore import CorpusSnapshot, DocKind
from .errors import ProviderUnavailable
from .intent import IntentIndex, build_intent_index, classify_intent, load_examples_jsonl
from .langid import LanguageFrontdoor
from .providers import (
    BuiltinTranslator,
    CallLog,
    FallbackEmbedder,
    HashedNgramEmbedder,
    HttpEmbeddingProvider,
    HttpGenerationProvider,
    HttpIntentClassifier,
    HttpParseProvider,
    HttpPlannerProvider,
    HttpRerankProvider,
    HttpTranslator,
    ProviderSuite,
    TranslatorChain,
    probe_endpoint,
)
from .queryparse import Lexicon, LexiconAnnotator
from .toolplanner import Gazetteer, ToolRegistry, plan_tools, render_links

logger = logging.getLogger(__name__)

MAX_MESSAGE_CODEPOINTS = 8192


class InvalidRequest(ValueError):
    """Maps to HTTP 400."""


class IngestValidationError(ValueError):
    """Maps to HTTP 422; carries every per-line schema error."""

    def __init__(self, errors: list[dict]):
        self.errors = errors
        super().__init__(f"{len(errors)} invalid record(s)")


class TraceStore:
    """In-memory ring buffer of trace records, oldest evicted first."""

    def __init__(self, retention: int = 1024):
        self.retention = retention
        self._traces: "OrderedDict[str, dict]" = OrderedDict()
        self._lock = threading.Lock()

    def put(self, trace_id: str, record: dict) -> None:
        with self._lock:
            self._traces[trace_id] = record
            while len(self._traces) > self.retention:
                self._traces.popitem(last=False)

    def get(self, trace_id: str) -> Optional[dict]:
        with self._lock:
            return self._traces.get(trace_id)


def _asset_path(relative: str) -> Path:
    return Path(str(resources.files("aloha").joinpath(f"assets/{relative}")))


@dataclass
class SnapshotHandle:
    """A snapshot and everything derived from it, swapped as one unit so a
    request never mixes generations."""

    snapshot: CorpusSnapshot
    gazetteer: Gazetteer
    index_cache: dict = field(default_factory=dict)


def _build_handle(snapshot: CorpusSnapshot, gazetteer_names: tuple[str, ...]) -> SnapshotHandle:
    concept_locations = [
        doc.title for doc in snapshot.documents if doc.kind is DocKind.CONCEPT and doc.is_location
    ]
    return SnapshotHandle(snapshot=snapshot, gazetteer=Gazetteer([*gazetteer_names, *concept_locations]))


@dataclass
class ServiceState:
    config: Config
    handle: SnapshotHandle
    intent_index: IntentIndex
    registry: ToolRegistry
    frontdoor: LanguageFrontdoor
    annotator: LexiconAnnotator
    providers: ProviderSuite
    gazetteer_names: tuple[str, ...]
    traces: TraceStore
    swap_lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def snapshot(self) -> CorpusSnapshot:
        return self.handle.snapshot

    def install_snapshot(self, snapshot: CorpusSnapshot) -> None:
        self.handle = _build_handle(snapshot, self.gazetteer_names)


def build_state(config: Optional[Config] = None) -> ServiceState:
    """Wire up providers, corpus, and fixtures; bundled demo data fills any
    path the config leaves unset."""
    config = config or Config()
    snapshot = None
    builtin_embedder = HashedNgramEmbedder(dim=config.embedding_dim)
    if config.store_path and (Path(config.store_path) / "manifest.json").exists():
        snapshot, manifest = docstore.load_store(config.store_path)
        # Queries must be embedded the same way the stored documents were.
        stored = HashedNgramEmbedder.from_id(manifest.get("embedder_id", ""))
        if stored is not None and stored.embedder_id != builtin_embedder.embedder_id:
            logger.info(
                "using store embedder %s instead of configured %s",
                stored.embedder_id, builtin_embedder.embedder_id,
            )
            builtin_embedder = stored
    embedder = builtin_embedder
    if config.embed_endpoint:
        embedder = FallbackEmbedder(
            HttpEmbeddingProvider(config.embed_endpoint, timeout=config.provider_timeout),
            builtin_embedder,
        )
    phrase_path = config.phrase_table_path or _asset_path("demo/phrase_table.jsonl")
    translator = TranslatorChain(
        builtin=BuiltinTranslator.from_jsonl(phrase_path),
        external=HttpTranslator(config.translate_endpoint, timeout=config.provider_timeout)
        if config.translate_endpoint
        else None,
    )
    suite = ProviderSuite(
        embedder=embedder,
        translator=translator,
        generator=HttpGenerationProvider(config.generate_endpoint, timeout=config.provider_timeout)
        if config.generate_endpoint
        else None,
        classifier=HttpIntentClassifier(config.classify_endpoint, timeout=config.provider_timeout)
        if config.classify_endpoint
        else None,
        reranker=HttpRerankProvider(config.rerank_endpoint, timeout=config.provider_timeout)
        if config.rerank_endpoint
        else None,
        parser=HttpParseProvider(config.parse_endpoint, timeout=config.provider_timeout)
        if config.parse_endpoint
        else None,
        planner=HttpPlannerProvider(config.plan_endpoint, timeout=config.provider_timeout)
        if config.plan_endpoint
        else None,
    )
    frontdoor = LanguageFrontdoor(translator=translator, pivot_lang=config.pivot_lang)

    if snapshot is None:
        corpus_path = _asset_path("demo/corpus.jsonl")
        snapshot = docstore.ingest(docstore.iter_jsonl(corpus_path), embedder)

    train_path = config.intent_train_path or _asset_path("demo/intent_train.jsonl")
    intent_index = build_intent_index(load_examples_jsonl(train_path), embedder)

    registry = ToolRegistry.from_jsonl(config.tool_registry_path or _asset_path("demo/tools.jsonl"))
    lexicon = Lexicon.from_jsonl(config.lexicon_path or _asset_path("demo/lexicon.jsonl"))
    annotator = LexiconAnnotator(lexicon, provider=suite.parser)
    gazetteer_path = config.gazetteer_path or _asset_path("demo/gazetteer.txt")
    gazetteer_names = tuple(
        ln.strip() for ln in Path(gazetteer_path).read_text(encoding="utf-8").splitlines() if ln.strip()
    )

    return ServiceState(
        config=config,
        handle=_build_handle(snapshot, gazetteer_names),
        intent_index=intent_index,
        registry=registry,
        frontdoor=frontdoor,
        annotator=annotator,
        providers=suite,
        gazetteer_names=gazetteer_names,
        traces=TraceStore(retention=config.trace_retention),
    )


def handle_chat(
    state: ServiceState,
    message: str,
    *,
    session_id: Optional[str] = None,
    client_locale_hint: Optional[str] = None,
    now: Optional[int] = None,
) -> dict:
    """Full pipeline for one message; returns the wire-format response."""
    if not isinstance(message, str) or not message.strip():
        raise InvalidRequest("message must be a non-empty string")
    if len(message) > MAX_MESSAGE_CODEPOINTS:
        raise InvalidRequest(f"message exceeds {MAX_MESSAGE_CODEPOINTS} codepoints")
    now = int(now if now is not None else time.time())
    started = time.perf_counter()
    trace_id = uuid.uuid4().hex

    log = CallLog()
    suite = state.providers.with_log(log)
    frontdoor = state.frontdoor.with_translator(suite.translator)
    handle = state.handle  # one read: snapshot, gazetteer, and cache stay paired
    config = state.config

    query = frontdoor.normalize_query(message, now)

    intent = classify_intent(
        query.pivot_text,
        state.intent_index,
        k=config.k,
        classifier=suite.classifier,
        k_vote=config.k_vote,
        gate=config.intent_gate,
        embedder=suite.embedder,
    )

    evidence, cascade_trace = retrieval.run_cascade(
        query,
        intent,
        handle.snapshot,
        suite,
        state.annotator,
        top_n=config.top_n,
        tau=config.threshold,
        threshold_on=config.threshold_on,
        trace_id=trace_id,
        index_cache=handle.index_cache,
    )

    if evidence.stage == retrieval.STAGE_NONE:
        draft = generation.fallback_response(query)
    else:
        bundle = generation.assemble_prompt(query, evidence, now)
        draft = generation.generate(bundle, provider=suite.generator)

    invocations = plan_tools(
        draft.text,
        [item.doc.title for item in evidence.items],
        state.registry,
        handle.gazetteer,
        planner=suite.planner,
    )
    links = render_links(invocations)
    final = generation.finalize(draft, evidence, query, links, frontdoor, trace_id)

    latency_ms = (time.perf_counter() - started) * 1000.0
    trace_record = {
        **cascade_trace.to_json(),
        "provider_call_counts": log.snapshot(),
        "received_at": now,
        "session_id": session_id,
        "client_locale_hint": client_locale_hint,
        "language": query.user_lang,
        "intent": intent.label.value,
        "intent_confidence": intent.confidence,
        "hit_stage": evidence.stage,
        "config": {"k": config.k, "top_n": config.top_n, "threshold": config.threshold},
        "invalid_invocations": [
            {"tool": inv.tool.name, "args": inv.args_dict()} for inv in invocations if not inv.valid
        ],
    }
    state.traces.put(trace_id, trace_record)
    logger.info(
        "chat served trace=%s lang=%s stage=%s refs=%d links=%d latency_ms=%.1f",
        trace_id, query.user_lang, evidence.stage, len(final.references), len(final.tool_links), latency_ms,
    )

    wire = final.to_json()
    wire["latency_ms"] = latency_ms
    wire["stage"] = evidence.stage
    return wire


def handle_ingest(state: ServiceState, body_text: str) -> dict:
    """Refresh the corpus from a JSONL body and swap the snapshot atomically.

    Validation runs over the whole body first so a bad batch reports every
    offending line at once and changes nothing.
    """
    records = []
    errors = []
    for line_no, line in enumerate(body_text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append((line_no, json.loads(line)))
        except json.JSONDecodeError as exc:
            errors.append({"line": line_no, "reason": f"invalid JSON: {exc}"})
    errors.extend(docstore.collect_schema_errors(records))
    if errors:
        raise IngestValidationError(sorted(errors, key=lambda e: e["line"]))
    with state.swap_lock:
        result = docstore.refresh(state.snapshot, records, state.providers.embedder)
        state.install_snapshot(result.snapshot)
    logger.info(
        "snapshot refreshed added=%d deduped=%d replaced=%d counts=%s",
        result.added, result.deduped, result.replaced, result.snapshot.counts,
    )
    return {
        "counts": result.snapshot.counts,
        "added": result.added,
        "deduped": result.deduped,
        "replaced": result.replaced,
    }


def provider_health(state: ServiceState) -> dict[str, str]:
    statuses = {}
    for name, endpoint in state.config.provider_endpoints().items():
        if not endpoint:
            statuses[name] = "builtin"
        else:
            statuses[name] = "up" if probe_endpoint(endpoint) else "down"
    return statuses


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------


class ChatRequestModel(BaseModel):
    message: str
    session_id: Optional[str] = None
    client_locale_hint: Optional[str] = None


def create_app(state: ServiceState):
    app = FastAPI(title="aloha", version="0.1.0")
    app.state.service = state

    @app.post("/v1/chat")
    def chat(request: ChatRequestModel):
        try:
            return handle_chat(
                state,
                request.message,
                session_id=request.session_id,
                client_locale_hint=request.client_locale_hint,
            )
        except InvalidRequest as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ProviderUnavailable as exc:
            raise HTTPException(status_code=503, detail=f"provider '{exc.provider}' unavailable") from exc

    @app.post("/v1/ingest")
    async def ingest(request: Request, x_admin_token: Optional[str] = Header(default=None)):
        if not state.config.admin_token:
            raise HTTPException(status_code=403, detail="ingest endpoint disabled")
        if x_admin_token != state.config.admin_token:
            raise HTTPException(status_code=403, detail="bad admin token")
        body = (await request.body()).decode("utf-8")
        try:
            return handle_ingest(state, body)
        except IngestValidationError as exc:
            raise HTTPException(status_code=422, detail={"errors": exc.errors}) from exc

    @app.get("/v1/trace/{trace_id}")
    def get_trace(trace_id: str):
        record = state.traces.get(trace_id)
        if record is None:
            raise HTTPException(status_code=404, detail="trace not found or evicted")
        return record

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "snapshot_counts": state.snapshot.counts,
            "providers": provider_health(state),
        }

    return app
