import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aloha.docstore import (
    CorpusSnapshot,
    DocKind,
    Document,
    RawTable,
    ingest,
    iter_jsonl,
    load_store,
    parse_markdown_table,
    refresh,
    save_store,
    subset,
    table_to_markdown,
)
from aloha.errors import InvalidTable, MissingIntentTag, RaggedTable, SchemaError
from aloha.intent import IntentClass

ASSETS = Path(__file__).resolve().parent.parent / "src" / "aloha" / "assets"


@pytest.fixture(scope="module")
def demo_snapshot(embedder):
    return ingest(iter_jsonl(ASSETS / "demo" / "corpus.jsonl"), embedder, now=1736035200)


class TestMarkdownTables:
    def test_one_by_one(self):
        rendered = table_to_markdown(RawTable(caption="h", header=("col",), rows=(("v",),)))
        lines = rendered.splitlines()
        assert lines[0] == "h"
        assert lines[1] == "| col |"
        assert lines[2] == "| --- |"
        assert lines[3] == "| v |"

    def test_canteen_hours_row_count(self):
        table = RawTable(
            caption="颐年食堂各区域开放时间",
            header=("区域", "餐段", "时间"),
            rows=(
                ("一层大厅", "早餐、午餐、晚餐", "06:30-19:30"),
                ("二层餐厅", "午餐、晚餐", "10:45-19:30"),
                ("地下咖啡厅", "全天", "08:00-22:00"),
            ),
        )
        rendered = table_to_markdown(table)
        data_lines = rendered.splitlines()[3:]
        assert len(data_lines) == len(table.rows)

    def test_pipe_escaping_round_trip(self):
        table = RawTable(caption="c", header=("h",), rows=(("a|b",),))
        rendered = table_to_markdown(table)
        assert "a\\|b" in rendered
        assert parse_markdown_table(rendered) == table

    def test_ragged_row_rejected(self):
        with pytest.raises(RaggedTable):
            RawTable(caption="c", header=("a", "b"), rows=(("only-one",),))

    def test_newlines_collapse_to_spaces(self):
        table = RawTable(caption="c", header=("h",), rows=(("line1\nline2",),))
        parsed = parse_markdown_table(table_to_markdown(table))
        assert parsed.rows[0][0] == "line1 line2"


def _normalize_cell(cell: str) -> str:
    return " ".join(cell.splitlines()).strip()


printable_cells = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="\r") | st.just("\n"),
    max_size=12,
)


@given(
    caption=printable_cells,
    header=st.lists(printable_cells, min_size=1, max_size=4),
    n_rows=st.integers(min_value=1, max_value=4),
    data=st.data(),
)
@settings(max_examples=120, deadline=None)
def test_round_trip_property(caption, header, n_rows, data):
    rows = [
        tuple(data.draw(printable_cells) for _ in header)
        for _ in range(n_rows)
    ]
    table = RawTable(caption=caption, header=tuple(header), rows=tuple(rows))
    parsed = parse_markdown_table(table_to_markdown(table))
    assert parsed.caption == " ".join(table.caption.splitlines())
    assert parsed.header == tuple(_normalize_cell(h) for h in table.header)
    assert parsed.rows == tuple(tuple(_normalize_cell(c) for c in row) for row in table.rows)


def test_round_trip_exact_for_normalized_cells():
    table = RawTable(
        caption="speeds",
        header=("name", "pipe|cell", "back\\slash"),
        rows=(("a", "b|c", "d\\|e"), ("f", "g", "h")),
    )
    assert parse_markdown_table(table_to_markdown(table)) == table


class TestIngest:
    def test_empty_stream(self, embedder):
        snapshot = ingest([], embedder, now=100)
        assert snapshot.documents == ()
        assert snapshot.counts == {"Concept": 0, "QAPair": 0, "WebPage": 0, "Tabular": 0}

    def test_demo_corpus_matches_manifest(self, demo_snapshot):
        manifest = json.loads((ASSETS / "demo" / "manifest.json").read_text(encoding="utf-8"))
        for kind in ("Concept", "QAPair", "WebPage", "Tabular"):
            assert demo_snapshot.counts[kind] == manifest[kind]
        assert len(demo_snapshot.documents) == manifest["total"]

    def test_three_unstructured_kinds(self, embedder):
        # One entity card, one question-answer pair, one page: the three
        # plain-text document kinds in a single batch.
        records = [
            (1, {"id": "c1", "kind": "Concept", "title": "School of International Studies",
                 "body": "The school offers degree programs in international politics and diplomacy.",
                 "timestamp": 1700000000}),
            (2, {"id": "q1", "kind": "QAPair",
                 "title": "How do I book a seminar room in the library?",
                 "body": "Sign in to the library portal and pick a free slot up to three days ahead.",
                 "timestamp": 1700000000}),
            (3, {"id": "w1", "kind": "WebPage", "title": "Orientation week schedule published",
                 "body": "The orientation week schedule for new students is now available on the portal.",
                 "timestamp": 1700000000}),
        ]
        snapshot = ingest(records, embedder, now=1700000001)
        assert snapshot.counts == {"Concept": 1, "QAPair": 1, "WebPage": 1, "Tabular": 0}

    def test_schema_error_carries_line(self, embedder):
        records = [(1, {"id": "a", "kind": "Concept", "title": "t", "body": "b", "timestamp": 1}),
                   (7, {"id": "b", "kind": "Nope", "title": "t", "body": "b"})]
        with pytest.raises(SchemaError) as err:
            ingest(records, embedder)
        assert err.value.line == 7

    def test_tabular_without_intent_tag_rejected(self, embedder):
        body = table_to_markdown(RawTable(caption="c", header=("h",), rows=(("v",),)))
        with pytest.raises(MissingIntentTag):
            ingest([(1, {"id": "t1", "kind": "Tabular", "title": "t", "body": body, "timestamp": 1})], embedder)

    def test_tabular_body_must_parse(self, embedder):
        with pytest.raises(InvalidTable):
            ingest(
                [(1, {"id": "t1", "kind": "Tabular", "title": "t", "body": "not a table",
                      "timestamp": 1, "intent_tag": "Conference Expense"})],
                embedder,
            )

    def test_missing_timestamp_inferred(self, embedder):
        snapshot = ingest([(1, {"id": "a", "kind": "Concept", "title": "t", "body": "b"})], embedder, now=4242)
        doc = snapshot.documents[0]
        assert doc.timestamp == 4242
        assert doc.timestamp_inferred

    def test_all_documents_embedded_unit_norm(self, demo_snapshot):
        import numpy as np

        for doc in demo_snapshot.documents:
            assert doc.embedding is not None
            assert np.linalg.norm(doc.embedding) == pytest.approx(1.0, abs=1e-5)


class TestRefresh:
    def test_zero_new_records_is_identity(self, demo_snapshot, embedder):
        result = refresh(demo_snapshot, [], embedder)
        assert [d.id for d in result.snapshot.documents] == [d.id for d in demo_snapshot.documents]
        assert result.added == 0 and result.deduped == 0

    def test_same_url_different_bodies_coexist(self, embedder):
        old = ingest(
            [(1, {"id": "v2024", "kind": "WebPage", "title": "寒假安排", "body": "2024年寒假自1月15日开始。",
                  "source_url": "https://campus.example/vacation", "timestamp": 1700000000})],
            embedder,
        )
        result = refresh(
            old,
            [(1, {"id": "v2025", "kind": "WebPage", "title": "寒假安排", "body": "2025年寒假自1月13日开始。",
                  "source_url": "https://campus.example/vacation", "timestamp": 1734480000})],
            embedder,
        )
        ids = {d.id for d in result.snapshot.documents}
        assert ids == {"v2024", "v2025"}

    def test_byte_identical_recrawl_collapses_to_newer(self, embedder):
        old = ingest(
            [(1, {"id": "page-a", "kind": "WebPage", "title": "公告", "body": "完全相同的内容。",
                  "source_url": "https://campus.example/p", "timestamp": 1700000000})],
            embedder,
        )
        result = refresh(
            old,
            [(1, {"id": "page-b", "kind": "WebPage", "title": "公告", "body": "完全相同的内容。",
                  "source_url": "https://campus.example/p", "timestamp": 1734480000})],
            embedder,
        )
        docs = result.snapshot.documents
        assert len(docs) == 1
        assert docs[0].timestamp == 1734480000
        assert result.deduped == 1

    def test_old_snapshot_not_mutated(self, demo_snapshot, embedder):
        before = [d.id for d in demo_snapshot.documents]
        refresh(
            demo_snapshot,
            [(1, {"id": "new-doc", "kind": "Concept", "title": "新楼", "body": "介绍。", "timestamp": 1736000000})],
            embedder,
        )
        assert [d.id for d in demo_snapshot.documents] == before


class TestSubset:
    def test_concept_selector(self, demo_snapshot):
        view = subset(demo_snapshot, DocKind.CONCEPT)
        assert len(view) == demo_snapshot.counts["Concept"]
        assert all(d.kind is DocKind.CONCEPT for d in view)

    def test_intent_selector_implies_tabular(self, demo_snapshot):
        view = subset(demo_snapshot, IntentClass.OPENING_SCHEDULE)
        assert len(view) >= 1
        assert all(d.kind is DocKind.TABULAR and d.intent_tag is IntentClass.OPENING_SCHEDULE for d in view)

    def test_empty_snapshot_empty_view(self, embedder):
        snapshot = ingest([], embedder, now=10)
        assert len(subset(snapshot, DocKind.WEB_PAGE)) == 0

    def test_view_soundness_and_completeness(self, demo_snapshot):
        for kind in DocKind:
            view = subset(demo_snapshot, kind)
            in_view = {d.id for d in view}
            satisfying = {d.id for d in demo_snapshot.documents if d.kind is kind}
            assert in_view == satisfying


class TestDocumentInvariants:
    def test_intent_tag_on_non_tabular_rejected(self):
        with pytest.raises(ValueError):
            Document(id="x", kind=DocKind.CONCEPT, title="t", body="b", timestamp=1,
                     intent_tag=IntentClass.CONFERENCE)

    def test_nonpositive_timestamp_rejected(self):
        with pytest.raises(ValueError):
            Document(id="x", kind=DocKind.CONCEPT, title="t", body="b", timestamp=0)

    def test_duplicate_ids_rejected_in_snapshot(self):
        a = Document(id="dup", kind=DocKind.CONCEPT, title="t", body="b", timestamp=1)
        b = Document(id="dup", kind=DocKind.CONCEPT, title="t2", body="b2", timestamp=2)
        with pytest.raises(ValueError):
            CorpusSnapshot(documents=(a, b), built_at=3)


class TestStorePersistence:
    def test_save_load_round_trip(self, demo_snapshot, embedder, tmp_path):
        import numpy as np

        save_store(demo_snapshot, tmp_path / "store", embedder.embedder_id)
        loaded, manifest = load_store(tmp_path / "store")
        assert manifest["embedder_id"] == embedder.embedder_id
        assert manifest["count"] == len(demo_snapshot.documents)
        assert [d.id for d in loaded.documents] == [d.id for d in demo_snapshot.documents]
        for a, b in zip(loaded.documents, demo_snapshot.documents):
            assert a.body == b.body
            assert a.timestamp == b.timestamp
            assert np.allclose(a.embedding, b.embedding, atol=1e-7)
