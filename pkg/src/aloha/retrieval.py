"""Hierarchical retrieval cascade over the typed document store.

Stage order is fixed: intent-routed tabular retrieval, exact concept match,
QA pairs, web pages.  A hit at any stage suppresses everything after it,
and the per-request trace proves it (executed flags, candidate counts, and
per-stage provider call tallies).

Dense stages share one pipeline: BM25 top-10 from an in-package inverted
index, semantic rerank, then the 0.1 similarity cutoff (boundary
inclusive: exactly 0.1 survives).
"""

from __future__ import annotations

import re
import struct
import unicodedata
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .docstore import CorpusSnapshot, DocKind, Document, DocView, subset
from .errors import DimensionMismatch, EmptyQuery, ProviderUnavailable, ZeroVector
from .intent import IntentClass, IntentPrediction
from .langid import NormalizedQuery, is_cjk
from .providers import EmbeddingProvider, HttpRerankProvider, ProviderSuite
from .queryparse import LexiconAnnotator, match_concept, reduce_to_command

BM25_K1 = 1.2
BM25_B = 0.75
DEFAULT_TOP_N = 10
DEFAULT_THRESHOLD = 0.1

STAGE_TABULAR = "TabularByIntent"
STAGE_CONCEPT = "ConceptMatch"
STAGE_QA = "QAPairs"
STAGE_WEB = "WebPages"
STAGE_NONE = "None"

STAGE_ORDER = (STAGE_TABULAR, STAGE_CONCEPT, STAGE_QA, STAGE_WEB)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


def tokenize(text: str) -> list[str]:
    """Casefolded word tokens; contiguous CJK runs become overlapping bigrams.

    Alphabetic-script words come from Unicode word runs; a CJK run of length
    one contributes its single character.  Chinese lexical recall works
    without an external segmenter this way.
    """
    text = unicodedata.normalize("NFKC", text).casefold()
    tokens: list[str] = []
    for match in re.finditer(r"\w+", text, re.UNICODE):
        run = match.group()
        start = 0
        while start < len(run):
            cjk = is_cjk(run[start])
            end = start
            while end < len(run) and is_cjk(run[end]) == cjk:
                end += 1
            segment = run[start:end]
            if cjk:
                if len(segment) == 1:
                    tokens.append(segment)
                else:
                    tokens.extend(segment[i : i + 2] for i in range(len(segment) - 1))
            else:
                tokens.append(segment)
            start = end
    return tokens


@dataclass(frozen=True, eq=False)
class ScoredDocument:
    doc: Document
    lexical_score: float
    rerank_score: Optional[float] = None


@dataclass(frozen=True)
class EvidenceSet:
    items: tuple[ScoredDocument, ...]
    stage: str

    def doc_ids(self) -> list[str]:
        return [item.doc.id for item in self.items]


@dataclass
class StageRecord:
    stage: str
    executed: bool = False
    candidates_considered: int = 0
    survivors: int = 0
    skip_reason: Optional[str] = None
    provider_calls: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "executed": self.executed,
            "candidates_considered": self.candidates_considered,
            "survivors": self.survivors,
            "skip_reason": self.skip_reason,
            "provider_calls": self.provider_calls,
        }


@dataclass
class CascadeTrace:
    trace_id: str
    stages: list[StageRecord]
    provider_call_counts: dict[str, int] = field(default_factory=dict)

    def stage_record(self, name: str) -> StageRecord:
        return next(rec for rec in self.stages if rec.stage == name)

    def to_json(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "stages": [rec.to_json() for rec in self.stages],
            "provider_call_counts": self.provider_call_counts,
        }


# ---------------------------------------------------------------------------
# BM25 inverted index
# ---------------------------------------------------------------------------


class InvertedIndex:
    """Positional inverted index scored with BM25 (k1=1.2, b=0.75).

    IDF is the non-negative ln(1 + (N - df + 0.5)/(df + 0.5)).  Query tokens
    contribute once per occurrence.  Only documents containing at least one
    query term are scored; everything else is a zero and never returned.
    """

    MAGIC = b"ALOHAIDX"
    VERSION = 1

    def __init__(self, doc_ids: Sequence[str], token_lists: Sequence[list[str]]):
        self.doc_ids = list(doc_ids)
        self.doc_lengths = [len(tokens) for tokens in token_lists]
        self.total_docs = len(self.doc_ids)
        self.avgdl = (sum(self.doc_lengths) / self.total_docs) if self.total_docs else 0.0
        self.postings: dict[str, list[tuple[int, list[int]]]] = {}
        for ordinal, tokens in enumerate(token_lists):
            positions: dict[str, list[int]] = {}
            for pos, token in enumerate(tokens):
                positions.setdefault(token, []).append(pos)
            for token, plist in positions.items():
                self.postings.setdefault(token, []).append((ordinal, plist))

    @classmethod
    def from_view(cls, view: DocView) -> "InvertedIndex":
        return cls(
            doc_ids=[doc.id for doc in view],
            token_lists=[tokenize(f"{doc.title}\n{doc.body}") for doc in view],
        )

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return float(np.log(1.0 + (self.total_docs - df + 0.5) / (df + 0.5)))

    def bm25_scores(self, query_tokens: Sequence[str]) -> dict[int, float]:
        scores: dict[int, float] = {}
        for token in query_tokens:
            postings = self.postings.get(token)
            if not postings:
                continue
            idf = self.idf(token)
            for ordinal, positions in postings:
                tf = len(positions)
                dl = self.doc_lengths[ordinal]
                denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self.avgdl)
                scores[ordinal] = scores.get(ordinal, 0.0) + idf * tf * (BM25_K1 + 1.0) / denom
        return scores

    # -- binary persistence (store/lexical.idx; layout in docs/lexical_index.md)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<II", self.VERSION, self.total_docs))
            fh.write(struct.pack("<I", len(self.postings)))
            for doc_id, length in zip(self.doc_ids, self.doc_lengths):
                raw = doc_id.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<I", length))
            for term in sorted(self.postings):
                raw = term.encode("utf-8")
                postings = self.postings[term]
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<I", len(postings)))
                for ordinal, positions in postings:
                    fh.write(struct.pack("<II", ordinal, len(positions)))
                    fh.write(struct.pack(f"<{len(positions)}I", *positions))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "InvertedIndex":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != cls.MAGIC:
                raise ValueError(f"not a lexical index file (magic {magic!r})")
            version, doc_count = struct.unpack("<II", fh.read(8))
            if version != cls.VERSION:
                raise ValueError(f"unsupported lexical index version {version}")
            (term_count,) = struct.unpack("<I", fh.read(4))
            index = cls.__new__(cls)
            index.doc_ids = []
            index.doc_lengths = []
            for _ in range(doc_count):
                (id_len,) = struct.unpack("<I", fh.read(4))
                index.doc_ids.append(fh.read(id_len).decode("utf-8"))
                (length,) = struct.unpack("<I", fh.read(4))
                index.doc_lengths.append(length)
            index.total_docs = doc_count
            index.avgdl = (sum(index.doc_lengths) / doc_count) if doc_count else 0.0
            index.postings = {}
            for _ in range(term_count):
                (term_len,) = struct.unpack("<I", fh.read(4))
                term = fh.read(term_len).decode("utf-8")
                (df,) = struct.unpack("<I", fh.read(4))
                plist = []
                for _ in range(df):
                    ordinal, freq = struct.unpack("<II", fh.read(8))
                    positions = list(struct.unpack(f"<{freq}I", fh.read(4 * freq)))
                    plist.append((ordinal, positions))
                index.postings[term] = plist
            return index


def _view_index(view: DocView, cache: Optional[dict] = None) -> InvertedIndex:
    if cache is None:
        return InvertedIndex.from_view(view)
    key = view.selector
    if key not in cache:
        cache[key] = InvertedIndex.from_view(view)
    return cache[key]


def lexical_retrieve(
    query: str,
    view: DocView,
    n: int = DEFAULT_TOP_N,
    *,
    index: Optional[InvertedIndex] = None,
) -> list[ScoredDocument]:
    """BM25 top-min(n, matches) over the view, ties by ascending doc id."""
    query_tokens = tokenize(query)
    if not query_tokens:
        raise EmptyQuery("query has no indexable tokens")
    if len(view) == 0:
        return []
    idx = index if index is not None else InvertedIndex.from_view(view)
    scores = idx.bm25_scores(query_tokens)
    docs = list(view)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], docs[item[0]].id))
    return [ScoredDocument(doc=docs[ordinal], lexical_score=score) for ordinal, score in ranked[:n]]


def rerank(
    query: str,
    docs: Sequence[ScoredDocument],
    *,
    embedder: EmbeddingProvider,
    reranker: Optional[HttpRerankProvider] = None,
) -> list[ScoredDocument]:
    """Attach semantic scores and sort descending, ties by ascending id.

    The default scorer is cosine similarity between the query embedding and
    each document's stored embedding.  Provider scores outside [-1, 1] are
    rejected as malformed and the default takes over.
    """
    if not docs:
        return []
    scores: Optional[list[float]] = None
    if reranker is not None:
        try:
            raw = reranker.rerank(query, [f"{d.doc.title}\n{d.doc.body}" for d in docs])
            if all(-1.0 <= s <= 1.0 for s in raw):
                scores = raw
        except ProviderUnavailable:
            scores = None
    if scores is None:
        query_vec = embedder.embed([query])[0]
        scores = []
        for item in docs:
            if item.doc.embedding is None:
                raise ValueError(f"document '{item.doc.id}' has no embedding for reranking")
            scores.append(cosine_similarity(query_vec, item.doc.embedding))
    rescored = [replace(item, rerank_score=float(s)) for item, s in zip(docs, scores)]
    rescored.sort(key=lambda item: (-item.rerank_score, item.doc.id))
    return rescored


def apply_threshold(docs: Sequence[ScoredDocument], tau: float = DEFAULT_THRESHOLD) -> list[ScoredDocument]:
    """Keep documents scoring at or above tau (scores below tau are excluded)."""
    return [d for d in docs if d.rerank_score is not None and d.rerank_score >= tau]


def _embed_similarities(
    query: str, docs: Sequence[ScoredDocument], embedder: EmbeddingProvider
) -> list[float]:
    query_vec = embedder.embed([query])[0]
    return [cosine_similarity(query_vec, d.doc.embedding) for d in docs]


def _dense_stage(
    record: StageRecord,
    query: str,
    view: DocView,
    suite: ProviderSuite,
    *,
    top_n: int,
    tau: float,
    threshold_on: str,
    index_cache: Optional[dict],
) -> list[ScoredDocument]:
    record.executed = True
    try:
        candidates = lexical_retrieve(query, view, top_n, index=_view_index(view, index_cache))
    except EmptyQuery:
        candidates = []
    record.candidates_considered = len(candidates)
    if not candidates:
        return []
    ranked = rerank(query, candidates, embedder=suite.embedder, reranker=suite.reranker)
    if threshold_on == "embed" and suite.reranker is not None:
        embed_scores = _embed_similarities(query, ranked, suite.embedder)
        survivors = [item for item, es in zip(ranked, embed_scores) if es >= tau]
    else:
        survivors = apply_threshold(ranked, tau)
    record.survivors = len(survivors)
    return survivors


def run_cascade(
    q: NormalizedQuery,
    intent: IntentPrediction,
    snapshot: CorpusSnapshot,
    suite: ProviderSuite,
    annotator: LexiconAnnotator,
    *,
    top_n: int = DEFAULT_TOP_N,
    tau: float = DEFAULT_THRESHOLD,
    threshold_on: str = "rerank",
    trace_id: Optional[str] = None,
    index_cache: Optional[dict] = None,
) -> tuple[EvidenceSet, CascadeTrace]:
    """Run the staged cascade and stop at the first stage with evidence.

    An intent-routed tabular subset with no hits falls through to the
    unstructured cascade rather than ending the request.  Every stage after
    a hit stays unexecuted with zero provider calls, which the trace records.
    """
    trace = CascadeTrace(
        trace_id=trace_id or uuid.uuid4().hex,
        stages=[StageRecord(stage=name) for name in STAGE_ORDER],
    )
    log = suite.log
    evidence: Optional[EvidenceSet] = None
    hit_stage: Optional[str] = None

    def run_stage(name: str, runner) -> Optional[EvidenceSet]:
        record = trace.stage_record(name)
        if hit_stage is not None:
            record.skip_reason = f"evidence found at {hit_stage}"
            return None
        before = log.snapshot()
        result = runner(record)
        after = log.snapshot()
        record.provider_calls = {
            k: after.get(k, 0) - before.get(k, 0) for k in after if after.get(k, 0) > before.get(k, 0)
        }
        return result

    def tabular(record: StageRecord) -> Optional[EvidenceSet]:
        if intent.label is IntentClass.GENERAL:
            record.skip_reason = "intent=General"
            return None
        view = subset(snapshot, intent.label)
        survivors = _dense_stage(
            record, q.pivot_text, view, suite,
            top_n=top_n, tau=tau, threshold_on=threshold_on, index_cache=index_cache,
        )
        if survivors:
            return EvidenceSet(items=tuple(survivors), stage=STAGE_TABULAR)
        record.skip_reason = None  # executed but empty: fall through
        return None

    def concept(record: StageRecord) -> Optional[EvidenceSet]:
        record.executed = True
        command = reduce_to_command(annotator.annotate(q.pivot_text))
        if not command.is_simple:
            return None
        view = subset(snapshot, DocKind.CONCEPT)
        record.candidates_considered = len(view)
        doc = match_concept(command.key, view, constituents=command.nouns or None)
        if doc is None:
            return None
        record.survivors = 1
        return EvidenceSet(
            items=(ScoredDocument(doc=doc, lexical_score=0.0, rerank_score=1.0),),
            stage=STAGE_CONCEPT,
        )

    def dense(kind: DocKind, stage_name: str):
        def runner(record: StageRecord) -> Optional[EvidenceSet]:
            view = subset(snapshot, kind)
            survivors = _dense_stage(
                record, q.pivot_text, view, suite,
                top_n=top_n, tau=tau, threshold_on=threshold_on, index_cache=index_cache,
            )
            if survivors:
                return EvidenceSet(items=tuple(survivors), stage=stage_name)
            return None

        return runner

    runners = [
        (STAGE_TABULAR, tabular),
        (STAGE_CONCEPT, concept),
        (STAGE_QA, dense(DocKind.QA_PAIR, STAGE_QA)),
        (STAGE_WEB, dense(DocKind.WEB_PAGE, STAGE_WEB)),
    ]
    for name, runner in runners:
        result = run_stage(name, runner)
        if result is not None:
            evidence = result
            hit_stage = name
    if evidence is None:
        evidence = EvidenceSet(items=(), stage=STAGE_NONE)
    trace.provider_call_counts = log.snapshot()
    return evidence, trace
