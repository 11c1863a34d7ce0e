"""Provider contracts and their deterministic built-in fallbacks.

Every externally hosted capability (embedding, translation, generation,
intent classification, reranking, parsing, tool planning) sits behind a
small client with a fixed wire contract.  Each capability also has a
deterministic built-in so the system keeps serving when endpoints are down.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import httpx
import numpy as np

from .errors import EmbeddingDimensionMismatch, EmptyText, ProviderUnavailable

DEFAULT_TIMEOUT = 10.0


class CallLog:
    """Per-request tally of provider invocations, keyed by capability name."""

    def __init__(self) -> None:
        self._counts: Counter[str] = Counter()

    def record(self, capability: str, n: int = 1) -> None:
        self._counts[capability] += n

    def snapshot(self) -> dict[str, int]:
        return dict(self._counts)


def _post_json(endpoint: str, payload: dict, *, capability: str, timeout: float) -> dict:
    """POST a JSON body and return the decoded JSON response.

    Any transport failure, non-2xx status, or undecodable body maps to
    ProviderUnavailable so callers can fall back to built-ins.
    """
    try:
        resp = httpx.post(endpoint, json=payload, timeout=timeout)
        resp.raise_for_status()
        return resp.json()
    except httpx.HTTPError as exc:
        raise ProviderUnavailable(capability, str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ProviderUnavailable(capability, f"bad JSON response: {exc}") from exc


def probe_endpoint(endpoint: str, timeout: float = 2.0) -> bool:
    """True when the endpoint answers HTTP at all (any status counts)."""
    try:
        httpx.get(endpoint, timeout=timeout)
        return True
    except httpx.HTTPError:
        return False


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


class EmbeddingProvider(Protocol):
    embedder_id: str

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one L2-normalized row per input text."""
        ...


def l2_normalize(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise EmbeddingDimensionMismatch("embedding batch contains a zero vector")
    return (matrix / norms).astype(np.float32)


class HashedNgramEmbedder:
    """Deterministic character n-gram feature-hashing embedder.

    Character 1..3-grams of the casefolded, whitespace-collapsed text are
    hashed into a fixed number of signed buckets (blake2b, stable across
    platforms and runs), then L2-normalized.  No model download, bit-exact
    reproducibility, and good enough locality for same-topic short queries.
    """

    def __init__(self, dim: int = 512, ngram_range: tuple[int, int] = (1, 3)):
        self.dim = dim
        self.ngram_range = ngram_range
        self.embedder_id = f"hashed-ngram-v1-d{dim}-n{ngram_range[0]}{ngram_range[1]}"

    @classmethod
    def from_id(cls, embedder_id: str) -> Optional["HashedNgramEmbedder"]:
        """Reconstruct the embedder a store was built with, or None if the
        id does not describe a hashed-ngram configuration."""
        match = re.fullmatch(r"hashed-ngram-v1-d(\d+)-n(\d)(\d)", embedder_id)
        if not match:
            return None
        dim, lo, hi = (int(g) for g in match.groups())
        return cls(dim=dim, ngram_range=(lo, hi))

    @staticmethod
    def _normalize(text: str) -> str:
        text = unicodedata.normalize("NFKC", text).casefold()
        return " ".join(text.split())

    def _bucket(self, gram: str) -> tuple[int, float]:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        index = int.from_bytes(digest[:4], "little") % self.dim
        sign = 1.0 if digest[4] & 1 else -1.0
        return index, sign

    def embed_one(self, text: str) -> np.ndarray:
        normalized = self._normalize(text)
        if not normalized:
            raise EmptyText("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        lo, hi = self.ngram_range
        for n in range(lo, hi + 1):
            for i in range(len(normalized) - n + 1):
                index, sign = self._bucket(normalized[i : i + n])
                vec[index] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # Sign cancellation across buckets; fall back to unsigned counts.
            for n in range(lo, hi + 1):
                for i in range(len(normalized) - n + 1):
                    index, _ = self._bucket(normalized[i : i + n])
                    vec[index] += 1.0
            norm = np.linalg.norm(vec)
        return (vec / norm).astype(np.float32)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.embed_one(t) for t in texts])


class HttpEmbeddingProvider:
    """Client for the embedding wire contract: POST /embed {"texts": [...]}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT, embedder_id: Optional[str] = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.embedder_id = embedder_id or f"http:{endpoint}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        body = _post_json(self.endpoint, {"texts": list(texts)}, capability="embed", timeout=self.timeout)
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderUnavailable("embed", "response missing 'vectors' or wrong length")
        matrix = np.asarray(vectors, dtype=np.float32)
        if matrix.ndim != 2:
            raise EmbeddingDimensionMismatch("provider returned ragged embedding batch")
        return l2_normalize(matrix)


class FallbackEmbedder:
    """Primary provider with a built-in fallback on ProviderUnavailable."""

    def __init__(self, primary: EmbeddingProvider, fallback: EmbeddingProvider):
        self.primary = primary
        self.fallback = fallback
        self.embedder_id = primary.embedder_id

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        try:
            return self.primary.embed(texts)
        except ProviderUnavailable:
            return self.fallback.embed(texts)


class CountingEmbedder:
    """Records each embed call in a CallLog before delegating."""

    def __init__(self, inner: EmbeddingProvider, log: CallLog):
        self.inner = inner
        self.log = log
        self.embedder_id = inner.embedder_id

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        self.log.record("embed")
        return self.inner.embed(texts)


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


class TranslationProvider(Protocol):
    def translate(self, text: str, source: str, target: str) -> str: ...


@dataclass
class PhrasePair:
    src_lang: str
    tgt_lang: str
    src: str
    tgt: str


class BuiltinTranslator:
    """Lookup-table translator over fixture phrase pairs.

    Unknown phrases fall back to a passthrough tagged with the target
    language ("[fr]原文"), which keeps offline pipelines running and makes
    the miss visible in test output.
    """

    def __init__(self, pairs: Iterable[PhrasePair] = ()):
        self._table: dict[tuple[str, str, str], str] = {}
        for pair in pairs:
            self._table[(pair.src_lang, pair.tgt_lang, pair.src.strip())] = pair.tgt

    @classmethod
    def from_jsonl(cls, path) -> "BuiltinTranslator":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                pairs.append(PhrasePair(rec["src_lang"], rec["tgt_lang"], rec["src"], rec["tgt"]))
        return cls(pairs)

    def lookup(self, text: str, source: str, target: str) -> Optional[str]:
        return self._table.get((source, target, text.strip()))

    def translate(self, text: str, source: str, target: str) -> str:
        if not text.strip():
            raise EmptyText("cannot translate empty text")
        hit = self.lookup(text, source, target)
        if hit is not None:
            return hit
        return f"[{target}]{text}"


class HttpTranslator:
    """Client for POST /translate {"text","source","target"} -> {"text"}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def translate(self, text: str, source: str, target: str) -> str:
        body = _post_json(
            self.endpoint,
            {"text": text, "source": source, "target": target},
            capability="translate",
            timeout=self.timeout,
        )
        out = body.get("text")
        if not isinstance(out, str):
            raise ProviderUnavailable("translate", "response missing 'text'")
        return out


class TranslatorChain:
    """External translator first (when configured), built-in table second.

    ``translate_status`` additionally reports whether the result is a real
    translation or a degraded stand-in (passthrough tag or pivot fallback).
    """

    def __init__(
        self,
        builtin: Optional[BuiltinTranslator] = None,
        external: Optional[TranslationProvider] = None,
        log: Optional[CallLog] = None,
    ):
        self.builtin = builtin
        self.external = external
        self.log = log

    def translate_status(self, text: str, source: str, target: str) -> tuple[str, bool]:
        if not text.strip():
            raise EmptyText("cannot translate empty text")
        if self.external is not None:
            try:
                if self.log is not None:
                    self.log.record("translate")
                return self.external.translate(text, source, target), False
            except ProviderUnavailable:
                pass
        if self.builtin is not None:
            hit = self.builtin.lookup(text, source, target)
            if hit is not None:
                return hit, False
            return self.builtin.translate(text, source, target), True
        raise ProviderUnavailable("translate", "no provider configured")

    def translate(self, text: str, source: str, target: str) -> str:
        return self.translate_status(text, source, target)[0]


# ---------------------------------------------------------------------------
# Generation / classification / rerank / parse / plan wire clients
# ---------------------------------------------------------------------------


class HttpGenerationProvider:
    """Client for POST /generate {"prompt","evidence_ids"} -> {"text","used_ids"}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def generate(self, prompt: str, evidence_ids: Sequence[str]) -> tuple[str, list[str]]:
        body = _post_json(
            self.endpoint,
            {"prompt": prompt, "evidence_ids": list(evidence_ids)},
            capability="generate",
            timeout=self.timeout,
        )
        text = body.get("text")
        used = body.get("used_ids", [])
        if not isinstance(text, str) or not isinstance(used, list):
            raise ProviderUnavailable("generate", "malformed response")
        return text, [str(u) for u in used]


class HttpIntentClassifier:
    """Client for POST /classify {"query","candidates"} -> {"label","confidence"}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def classify(self, query: str, candidates: Sequence[str]) -> tuple[str, float]:
        body = _post_json(
            self.endpoint,
            {"query": query, "candidates": list(candidates)},
            capability="classify",
            timeout=self.timeout,
        )
        label = body.get("label")
        confidence = body.get("confidence", 0.0)
        if not isinstance(label, str):
            raise ProviderUnavailable("classify", "response missing 'label'")
        return label, float(confidence)


class HttpRerankProvider:
    """Client for POST /rerank {"query","documents"} -> {"scores"}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def rerank(self, query: str, documents: Sequence[str]) -> list[float]:
        body = _post_json(
            self.endpoint,
            {"query": query, "documents": list(documents)},
            capability="rerank",
            timeout=self.timeout,
        )
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(documents):
            raise ProviderUnavailable("rerank", "response missing 'scores' or wrong length")
        return [float(s) for s in scores]


class HttpParseProvider:
    """Client for POST /parse {"text"} -> {"tokens": [...], "arcs": [...]}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def parse(self, text: str) -> dict:
        body = _post_json(self.endpoint, {"text": text}, capability="parse", timeout=self.timeout)
        if "tokens" not in body or "arcs" not in body:
            raise ProviderUnavailable("parse", "response missing tokens/arcs")
        return body


class HttpPlannerProvider:
    """Client for POST /plan {"response","tools"} -> {"invocations": [...]}."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def plan(self, response_text: str, tools: Sequence[dict]) -> list[dict]:
        body = _post_json(
            self.endpoint,
            {"response": response_text, "tools": list(tools)},
            capability="plan",
            timeout=self.timeout,
        )
        invocations = body.get("invocations")
        if not isinstance(invocations, list):
            raise ProviderUnavailable("plan", "response missing 'invocations'")
        return invocations


@dataclass
class ProviderSuite:
    """The full set of capabilities a request pipeline draws on.

    ``None`` means no external endpoint is configured and the capability
    runs purely on its built-in.
    """

    embedder: EmbeddingProvider
    translator: TranslatorChain
    generator: Optional[HttpGenerationProvider] = None
    classifier: Optional[HttpIntentClassifier] = None
    reranker: Optional[HttpRerankProvider] = None
    parser: Optional[HttpParseProvider] = None
    planner: Optional[HttpPlannerProvider] = None
    log: CallLog = field(default_factory=CallLog)

    def with_log(self, log: CallLog) -> "ProviderSuite":
        """Per-request copy whose calls are tallied in ``log``."""
        translator = TranslatorChain(
            builtin=self.translator.builtin, external=self.translator.external, log=log
        )
        base = self.embedder.inner if isinstance(self.embedder, CountingEmbedder) else self.embedder
        return ProviderSuite(
            embedder=CountingEmbedder(base, log),
            translator=translator,
            generator=self.generator,
            classifier=self.classifier,
            reranker=self.reranker,
            parser=self.parser,
            planner=self.planner,
            log=log,
        )
