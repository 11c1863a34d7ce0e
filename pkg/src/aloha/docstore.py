"""Typed, timestamped corpus: concepts, QA pairs, web pages, and
intent-tagged tables, with JSONL ingestion and immutable snapshots.

Snapshots are never mutated; ``refresh`` returns a new snapshot and the
service swaps its reference atomically.  Outdated pages are deliberately
kept next to their replacements (same URL, different body) — staleness is
handled at prompt time via timestamps, not at ingest time.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .errors import InvalidTable, MissingIntentTag, RaggedTable, SchemaError
from .intent import IntentClass
from .providers import EmbeddingProvider


class DocKind(str, Enum):
    CONCEPT = "Concept"
    QA_PAIR = "QAPair"
    WEB_PAGE = "WebPage"
    TABULAR = "Tabular"


@dataclass(frozen=True, eq=False)
class Document:
    """One corpus item.

    ``title`` holds the canonical entity name (Concept), the question
    (QAPair), the page title (WebPage), or the table caption (Tabular).
    ``intent_tag`` is present exactly when ``kind`` is Tabular.  Equality is
    identity; compare ids when value semantics are needed (the embedding
    array makes field-wise comparison ill-defined).
    """

    id: str
    kind: DocKind
    title: str
    body: str
    timestamp: int
    source_url: Optional[str] = None
    intent_tag: Optional[IntentClass] = None
    embedding: Optional[np.ndarray] = None
    timestamp_inferred: bool = False
    is_location: bool = False

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ValueError(f"document '{self.id}': timestamp must be positive")
        if (self.kind is DocKind.TABULAR) != (self.intent_tag is not None):
            if self.kind is DocKind.TABULAR:
                raise MissingIntentTag(self.id)
            raise ValueError(f"document '{self.id}': intent_tag only allowed on Tabular documents")
        if self.kind is DocKind.TABULAR:
            try:
                parse_markdown_table(self.body)
            except (RaggedTable, ValueError) as exc:
                raise InvalidTable(self.id, str(exc)) from exc

    def embedding_input(self) -> str:
        return f"{self.title}\n{self.body}"

    def body_hash(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CorpusSnapshot:
    """Immutable view of the whole corpus at one point in time."""

    documents: tuple[Document, ...]
    built_at: int
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValueError(f"duplicate document id '{doc.id}' in snapshot")
            seen.add(doc.id)
        expected = _count_kinds(self.documents)
        if self.counts and self.counts != expected:
            raise ValueError("snapshot counts inconsistent with documents")
        if not self.counts:
            object.__setattr__(self, "counts", expected)

    def by_id(self, doc_id: str) -> Optional[Document]:
        for doc in self.documents:
            if doc.id == doc_id:
                return doc
        return None


@dataclass(frozen=True)
class DocView:
    """A filtered, ordered window over a snapshot's documents."""

    documents: tuple[Document, ...]
    selector: str

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)


@dataclass(frozen=True)
class RawTable:
    caption: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.header:
            raise RaggedTable("table header must be non-empty")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.header):
                raise RaggedTable(f"row {i} has {len(row)} cells, header has {len(self.header)}")


def _count_kinds(documents: Iterable[Document]) -> dict[str, int]:
    counts = {kind.value: 0 for kind in DocKind}
    for doc in documents:
        counts[doc.kind.value] += 1
    return counts


# ---------------------------------------------------------------------------
# Markdown pipe tables
# ---------------------------------------------------------------------------


def _escape_cell(cell: str) -> str:
    # Backslashes are escaped too so rendering stays invertible for cells
    # that already contain the escape sequence.
    cell = cell.replace("\\", "\\\\").replace("|", "\\|")
    return " ".join(cell.splitlines()) if ("\n" in cell or "\r" in cell) else cell


def _unescape_cell(cell: str) -> str:
    out = []
    i = 0
    while i < len(cell):
        if cell[i] == "\\" and i + 1 < len(cell) and cell[i + 1] in ("\\", "|"):
            out.append(cell[i + 1])
            i += 2
        else:
            out.append(cell[i])
            i += 1
    return "".join(out)


def _split_row(line: str) -> list[str]:
    line = line.strip()
    if not (line.startswith("|") and line.endswith("|")):
        raise ValueError(f"not a pipe-table row: {line!r}")
    cells: list[str] = []
    current: list[str] = []
    body = line[1:-1]
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            current.append(body[i : i + 2])
            i += 2
            continue
        if ch == "|":
            cells.append("".join(current))
            current = []
        else:
            current.append(ch)
        i += 1
    cells.append("".join(current))
    return [_unescape_cell(c.strip()) for c in cells]


def table_to_markdown(table: RawTable) -> str:
    """Render a raw table as caption line + Markdown pipe table.

    Cell-internal '|' is escaped as '\\|' and newlines collapse to single
    spaces; re-parsing the output recovers the (newline-normalized) cells.
    """
    lines = [" ".join(table.caption.splitlines())]
    lines.append("| " + " | ".join(_escape_cell(h) for h in table.header) + " |")
    lines.append("|" + "|".join(" --- " for _ in table.header) + "|")
    for row in table.rows:
        lines.append("| " + " | ".join(_escape_cell(c) for c in row) + " |")
    return "\n".join(lines)


def parse_markdown_table(text: str) -> RawTable:
    """Inverse of table_to_markdown: caption line, header, separator, rows."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise ValueError("pipe table needs caption, header, separator, and at least one data row")
    caption = lines[0]
    header = _split_row(lines[1])
    separator = [c.strip() for c in lines[2].strip().strip("|").split("|")]
    if len(separator) != len(header) or any(set(c) - {"-", ":"} for c in separator if c):
        raise ValueError("malformed separator row")
    rows = []
    for line in lines[3:]:
        if not line.strip():
            continue
        row = _split_row(line)
        if len(row) != len(header):
            raise RaggedTable(f"data row has {len(row)} cells, header has {len(header)}")
        rows.append(tuple(row))
    if not rows:
        raise ValueError("pipe table needs at least one data row")
    return RawTable(caption=caption, header=tuple(header), rows=tuple(rows))


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

_KNOWN_KEYS = {"id", "kind", "title", "body", "table", "source_url", "timestamp", "intent_tag", "is_location"}


def _record_to_document(record: dict, line_no: int, now: int) -> Document:
    if not isinstance(record, dict):
        raise SchemaError(line_no, "record is not a JSON object")
    for key in ("id", "kind", "title"):
        if key not in record or not isinstance(record[key], str) or not record[key]:
            raise SchemaError(line_no, f"missing or empty '{key}'")
    try:
        kind = DocKind(record["kind"])
    except ValueError:
        raise SchemaError(line_no, f"unknown kind {record['kind']!r}") from None

    if "table" in record:
        table_obj = record["table"]
        try:
            raw = RawTable(
                caption=str(table_obj["caption"]),
                header=tuple(str(h) for h in table_obj["header"]),
                rows=tuple(tuple(str(c) for c in row) for row in table_obj["rows"]),
            )
        except (KeyError, TypeError, RaggedTable) as exc:
            raise SchemaError(line_no, f"bad table object: {exc}") from exc
        body = table_to_markdown(raw)
    else:
        body = record.get("body")
        if not isinstance(body, str) or not body:
            raise SchemaError(line_no, "missing or empty 'body' (or 'table')")

    timestamp = record.get("timestamp")
    inferred = False
    if timestamp is None:
        timestamp = now
        inferred = True
    elif not isinstance(timestamp, (int, float)) or timestamp <= 0:
        raise SchemaError(line_no, "'timestamp' must be a positive number")

    intent_tag = None
    if record.get("intent_tag") is not None:
        try:
            intent_tag = IntentClass(record["intent_tag"])
        except ValueError:
            raise SchemaError(line_no, f"unknown intent_tag {record['intent_tag']!r}") from None

    if kind is DocKind.TABULAR and intent_tag is None:
        raise MissingIntentTag(record["id"])
    if kind is not DocKind.TABULAR and intent_tag is not None:
        raise SchemaError(line_no, "intent_tag only allowed on Tabular documents")

    try:
        return Document(
            id=record["id"],
            kind=kind,
            title=record["title"],
            body=body,
            timestamp=int(timestamp),
            source_url=record.get("source_url"),
            intent_tag=intent_tag,
            timestamp_inferred=inferred,
            is_location=bool(record.get("is_location", False)),
        )
    except (InvalidTable, MissingIntentTag):
        raise
    except ValueError as exc:
        raise SchemaError(line_no, str(exc)) from exc


def iter_jsonl(source: Union[str, Path, IO[str], Iterable[str]]) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs, raising SchemaError on bad JSON."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from iter_jsonl(fh)
        return
    for line_no, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield line_no, json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, f"invalid JSON: {exc}") from exc


def collect_schema_errors(records: Iterable[tuple[int, dict]], now: Optional[int] = None) -> list[dict]:
    """Validate every record, returning one {line, reason} entry per failure."""
    now = int(now if now is not None else time.time())
    errors = []
    for line_no, record in records:
        try:
            _record_to_document(record, line_no, now)
        except (SchemaError, MissingIntentTag, InvalidTable) as exc:
            errors.append({"line": getattr(exc, "line", line_no), "reason": str(exc)})
    return errors


def ingest(
    records: Iterable[tuple[int, dict]],
    embedder: EmbeddingProvider,
    now: Optional[int] = None,
) -> CorpusSnapshot:
    """Validate, embed (title + newline + body), and snapshot a record stream."""
    now = int(now if now is not None else time.time())
    documents = [_record_to_document(record, line_no, now) for line_no, record in records]
    documents = _embed_missing(documents, embedder)
    return CorpusSnapshot(documents=tuple(documents), built_at=now)


def _embed_missing(documents: list[Document], embedder: EmbeddingProvider) -> list[Document]:
    pending = [i for i, doc in enumerate(documents) if doc.embedding is None]
    if pending:
        matrix = embedder.embed([documents[i].embedding_input() for i in pending])
        for row, i in enumerate(pending):
            documents[i] = replace(documents[i], embedding=matrix[row])
    return documents


def refresh(
    old: CorpusSnapshot,
    new_records: Iterable[tuple[int, dict]],
    embedder: EmbeddingProvider,
    now: Optional[int] = None,
) -> "RefreshResult":
    """Union of old and new documents.

    Two documents sharing a source_url are both kept (old pages cannot be
    auto-replaced; timestamps disambiguate at prompt time).  Byte-identical
    re-crawls (same source_url and body hash) collapse to the newer copy.
    A re-used document id replaces the older record outright.
    """
    now = int(now if now is not None else time.time())
    fresh = [_record_to_document(record, line_no, now) for line_no, record in new_records]
    fresh = _embed_missing(fresh, embedder)

    merged: list[Document] = list(old.documents)
    index_by_id = {doc.id: i for i, doc in enumerate(merged)}
    deduped = 0
    replaced = 0
    for doc in fresh:
        if doc.id in index_by_id:
            merged[index_by_id[doc.id]] = doc
            replaced += 1
            continue
        duplicate_at = None
        if doc.source_url is not None:
            for i, existing in enumerate(merged):
                if existing.source_url == doc.source_url and existing.body_hash() == doc.body_hash():
                    duplicate_at = i
                    break
        if duplicate_at is not None:
            existing = merged[duplicate_at]
            if doc.timestamp >= existing.timestamp:
                merged[duplicate_at] = doc
            deduped += 1
            continue
        merged.append(doc)
        index_by_id[doc.id] = len(merged) - 1
    snapshot = CorpusSnapshot(documents=tuple(merged), built_at=now)
    return RefreshResult(snapshot=snapshot, added=len(fresh) - deduped - replaced, deduped=deduped, replaced=replaced)


@dataclass(frozen=True)
class RefreshResult:
    snapshot: CorpusSnapshot
    added: int
    deduped: int
    replaced: int


def subset(snapshot: CorpusSnapshot, selector: Union[DocKind, IntentClass]) -> DocView:
    """View over documents matching a kind or an intent tag.

    Selecting by intent tag implies kind = Tabular.  Empty views are legal.
    """
    if isinstance(selector, IntentClass):
        docs = tuple(d for d in snapshot.documents if d.kind is DocKind.TABULAR and d.intent_tag is selector)
        return DocView(documents=docs, selector=f"intent:{selector.value}")
    docs = tuple(d for d in snapshot.documents if d.kind is selector)
    return DocView(documents=docs, selector=f"kind:{selector.value}")


# ---------------------------------------------------------------------------
# On-disk store: documents.jsonl + embeddings.bin + manifest.json
# ---------------------------------------------------------------------------


def save_store(snapshot: CorpusSnapshot, store_dir: Union[str, Path], embedder_id: str) -> None:
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    dim = 0
    with open(store / "documents.jsonl", "w", encoding="utf-8") as fh:
        for doc in snapshot.documents:
            fh.write(json.dumps(_document_to_record(doc), ensure_ascii=False) + "\n")
    rows = []
    for doc in snapshot.documents:
        if doc.embedding is None:
            raise ValueError(f"document '{doc.id}' has no embedding; ingest before saving")
        rows.append(np.asarray(doc.embedding, dtype="<f4"))
        dim = rows[-1].shape[0]
    matrix = np.stack(rows) if rows else np.zeros((0, 0), dtype="<f4")
    matrix.astype("<f4").tofile(store / "embeddings.bin")
    manifest = {
        "dimension": dim,
        "count": len(snapshot.documents),
        "embedder_id": embedder_id,
        "built_at": snapshot.built_at,
    }
    (store / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_store(store_dir: Union[str, Path]) -> tuple[CorpusSnapshot, dict]:
    store = Path(store_dir)
    manifest = json.loads((store / "manifest.json").read_text(encoding="utf-8"))
    count, dim = manifest["count"], manifest["dimension"]
    raw = np.fromfile(store / "embeddings.bin", dtype="<f4")
    matrix = raw.reshape(count, dim) if count else np.zeros((0, 0), dtype="<f4")
    documents = []
    with open(store / "documents.jsonl", encoding="utf-8") as fh:
        for i, (line_no, record) in enumerate(iter_jsonl(fh)):
            doc = _record_to_document(record, line_no, now=manifest.get("built_at", 1))
            documents.append(replace(doc, embedding=matrix[i], timestamp_inferred=record.get("timestamp_inferred", False)))
    if len(documents) != count:
        raise SchemaError(0, f"manifest count {count} != {len(documents)} documents on disk")
    snapshot = CorpusSnapshot(documents=tuple(documents), built_at=manifest.get("built_at", int(time.time())))
    return snapshot, manifest


def _document_to_record(doc: Document) -> dict:
    record = {
        "id": doc.id,
        "kind": doc.kind.value,
        "title": doc.title,
        "body": doc.body,
        "timestamp": doc.timestamp,
    }
    if doc.source_url is not None:
        record["source_url"] = doc.source_url
    if doc.intent_tag is not None:
        record["intent_tag"] = doc.intent_tag.value
    if doc.timestamp_inferred:
        record["timestamp_inferred"] = True
    if doc.is_location:
        record["is_location"] = True
    return record

