import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aloha.docstore import DocKind, DocView, Document, ingest, iter_jsonl
from aloha.errors import DimensionMismatch, EmptyQuery, ZeroVector
from aloha.intent import CandidateSet, IntentClass, IntentPrediction
from aloha.langid import NormalizedQuery
from aloha.providers import CallLog, ProviderSuite, TranslatorChain
from aloha.queryparse import Lexicon, LexiconAnnotator
from aloha.retrieval import (
    STAGE_CONCEPT,
    STAGE_NONE,
    STAGE_ORDER,
    STAGE_QA,
    STAGE_TABULAR,
    STAGE_WEB,
    InvertedIndex,
    ScoredDocument,
    apply_threshold,
    cosine_similarity,
    lexical_retrieve,
    rerank,
    run_cascade,
    tokenize,
)

ASSETS = Path(__file__).resolve().parent.parent / "src" / "aloha" / "assets"


# ---------------------------------------------------------------------------
# Definitional BM25 oracle, independent of the index implementation
# ---------------------------------------------------------------------------

K1, B = 1.2, 0.75


def bm25_oracle(query_tokens, doc_token_lists):
    """BM25 computed straight from the formula with plain dict counting."""
    n_docs = len(doc_token_lists)
    avgdl = sum(len(d) for d in doc_token_lists) / n_docs
    scores = []
    for tokens in doc_token_lists:
        tf = {}
        for t in tokens:
            tf[t] = tf.get(t, 0) + 1
        score = 0.0
        for term in query_tokens:
            f = tf.get(term, 0)
            if f == 0:
                continue
            df = sum(1 for d in doc_token_lists if term in d)
            idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
            score += idf * f * (K1 + 1.0) / (f + K1 * (1.0 - B + B * len(tokens) / avgdl))
        scores.append(score)
    return scores


def cosine_oracle(a, b):
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(y) ** 2 for y in b))
    return dot / (na * nb)


def _doc(doc_id, kind, title, body, embedding=None, **kwargs):
    return Document(id=doc_id, kind=kind, title=title, body=body, timestamp=kwargs.pop("timestamp", 1),
                    embedding=embedding, **kwargs)


class TestCosine:
    def test_self_similarity(self):
        v = np.array([0.3, -0.4, 0.5])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_eight_dim_longhand(self):
        rng = random.Random(8)
        a = np.array([rng.uniform(-1, 1) for _ in range(8)])
        b = np.array([rng.uniform(-1, 1) for _ in range(8)])
        assert cosine_similarity(a, b) == pytest.approx(cosine_oracle(a, b), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine_similarity(np.zeros(3), np.ones(3))

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=16), st.data())
    @settings(max_examples=80, deadline=None)
    def test_matches_longhand_oracle(self, values, data):
        other = data.draw(st.lists(st.floats(-5, 5), min_size=len(values), max_size=len(values)))
        a, b = np.array(values), np.array(other)
        if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
            return
        assert cosine_similarity(a, b) == pytest.approx(cosine_oracle(a, b), abs=1e-12)


class TestTokenize:
    def test_cjk_bigrams(self):
        assert tokenize("新缘食堂") == ["新缘", "缘食", "食堂"]

    def test_single_cjk_char(self):
        assert tokenize("字 word") == ["字", "word"]

    def test_mixed_runs(self):
        assert tokenize("图书馆2024开放") == ["图书", "书馆", "2024", "开放"]


class TestLexicalRetrieve:
    def _view(self, bodies):
        docs = tuple(
            _doc(f"d{i:02d}", DocKind.WEB_PAGE, f"title {i}", body) for i, body in enumerate(bodies)
        )
        return DocView(documents=docs, selector="test")

    def test_unique_term_doc_ranks_first(self):
        view = self._view(["apple banana", "banana cherry", "durian elderberry"])
        results = lexical_retrieve("durian", view, 10)
        assert results[0].doc.id == "d02"
        assert len(results) == 1  # zero-score documents never surface

    def test_five_doc_scores_match_oracle(self):
        bodies = [
            "open hours library campus",
            "library books loan desk",
            "campus card service center",
            "gym open hours weekend",
            "library gym shuttle stop",
        ]
        view = self._view(bodies)
        query = "library open hours"
        results = lexical_retrieve(query, view, 10)
        token_lists = [tokenize(f"{d.title}\n{d.body}") for d in view]
        oracle = bm25_oracle(tokenize(query), token_lists)
        by_id = {f"d{i:02d}": s for i, s in enumerate(oracle)}
        for item in results:
            assert item.lexical_score == pytest.approx(by_id[item.doc.id], abs=1e-9)
        expected_order = sorted(
            (i for i, s in enumerate(oracle) if s > 0), key=lambda i: (-oracle[i], f"d{i:02d}")
        )
        assert [item.doc.id for item in results] == [f"d{i:02d}" for i in expected_order]

    def test_top_n_clamps_to_view(self):
        view = self._view(["shared word here", "shared word there", "shared word everywhere"])
        results = lexical_retrieve("shared", view, 10)
        assert len(results) == 3

    def test_empty_query_raises(self):
        view = self._view(["anything"])
        with pytest.raises(EmptyQuery):
            lexical_retrieve("!!!", view, 10)

    def test_empty_view_returns_empty(self):
        results = lexical_retrieve("word", DocView(documents=(), selector="empty"), 10)
        assert results == []

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_bm25_property_vs_oracle(self, data):
        vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]
        n_docs = data.draw(st.integers(min_value=1, max_value=20))
        token_lists = [
            data.draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=50))
            for _ in range(n_docs)
        ]
        query_tokens = data.draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=6))
        index = InvertedIndex([f"d{i:03d}" for i in range(n_docs)], token_lists)
        ours = index.bm25_scores(query_tokens)
        oracle = bm25_oracle(query_tokens, token_lists)
        for ordinal, expected in enumerate(oracle):
            assert ours.get(ordinal, 0.0) == pytest.approx(expected, abs=1e-9)


class TestRerank:
    def test_single_candidate(self, embedder):
        doc = _doc("d0", DocKind.QA_PAIR, "title", "body", embedding=embedder.embed(["title\nbody"])[0])
        out = rerank("query words", [ScoredDocument(doc=doc, lexical_score=1.0)], embedder=embedder)
        assert len(out) == 1
        assert out[0].rerank_score is not None

    def test_identical_embedding_scores_one(self, embedder):
        text = "图书馆的开放时间"
        doc = _doc("d0", DocKind.QA_PAIR, text, "", embedding=embedder.embed([f"{text}\n"])[0])
        # Embed the same input string the document was embedded with.
        out = rerank(f"{text}\n", [ScoredDocument(doc=doc, lexical_score=1.0)], embedder=embedder)
        assert out[0].rerank_score == pytest.approx(1.0, abs=1e-5)

    def test_four_candidate_ordering_matches_oracle(self, embedder):
        texts = ["开放时间查询", "报销流程说明", "校园卡办理", "网络维护公告"]
        docs = [
            _doc(f"d{i}", DocKind.QA_PAIR, t, "说明", embedding=embedder.embed([f"{t}\n说明"])[0])
            for i, t in enumerate(texts)
        ]
        query = "开放时间"
        out = rerank(query, [ScoredDocument(doc=d, lexical_score=1.0) for d in docs], embedder=embedder)
        qv = embedder.embed([query])[0]
        oracle_scores = {d.id: cosine_oracle(qv, d.embedding) for d in docs}
        expected_order = sorted(oracle_scores, key=lambda i: (-oracle_scores[i], i))
        assert [item.doc.id for item in out] == expected_order
        for item in out:
            assert item.rerank_score == pytest.approx(oracle_scores[item.doc.id], abs=1e-6)

    def test_provider_scores_out_of_range_rejected(self, embedder):
        class BadReranker:
            def rerank(self, query, documents):
                return [3.7 for _ in documents]

        doc = _doc("d0", DocKind.QA_PAIR, "title", "body", embedding=embedder.embed(["title\nbody"])[0])
        out = rerank("query", [ScoredDocument(doc=doc, lexical_score=1.0)], embedder=embedder, reranker=BadReranker())
        assert -1.0 <= out[0].rerank_score <= 1.0


class TestThreshold:
    def _scored(self, scores):
        return [
            ScoredDocument(
                doc=_doc(f"d{i}", DocKind.QA_PAIR, "t", "b"), lexical_score=1.0, rerank_score=s
            )
            for i, s in enumerate(scores)
        ]

    def test_boundary_inclusive(self):
        survivors = apply_threshold(self._scored([0.5, 0.1, 0.09]), 0.1)
        assert [d.rerank_score for d in survivors] == [0.5, 0.1]

    def test_all_below_yields_empty(self):
        assert apply_threshold(self._scored([0.05, 0.01]), 0.1) == []

    def test_negative_tau_is_identity(self):
        docs = self._scored([0.9, -0.5, 0.0])
        assert apply_threshold(docs, -1.0) == docs


# ---------------------------------------------------------------------------
# Cascade
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def snapshot(embedder):
    return ingest(iter_jsonl(ASSETS / "demo" / "corpus.jsonl"), embedder, now=1736035200)


@pytest.fixture(scope="module")
def annotator():
    return LexiconAnnotator(Lexicon.from_jsonl(ASSETS / "demo" / "lexicon.jsonl"))


def _suite(embedder):
    log = CallLog()
    return ProviderSuite(embedder=embedder, translator=TranslatorChain(), log=log).with_log(log)


def _query(pivot):
    return NormalizedQuery(raw_text=pivot, user_lang="zh", pivot_text=pivot, received_at=1736035200)


def _general():
    return IntentPrediction(
        label=IntentClass.GENERAL,
        candidates=CandidateSet(classes=frozenset(), neighbors=()),
        method="knn_vote",
        confidence=1.0,
    )


def _intent(label):
    return IntentPrediction(
        label=label,
        candidates=CandidateSet(classes=frozenset({label}), neighbors=(("x", 0.9),)),
        method="knn_vote",
        confidence=1.0,
    )


class TestCascade:
    def test_concept_short_circuit(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        evidence, trace = run_cascade(_query("介绍国际关系学院"), _general(), snapshot, suite, annotator)
        assert evidence.stage == STAGE_CONCEPT
        assert [item.doc.id for item in evidence.items] == ["c-sis"]
        assert evidence.items[0].rerank_score == 1.0
        qa = trace.stage_record(STAGE_QA)
        web = trace.stage_record(STAGE_WEB)
        assert not qa.executed and not web.executed
        assert qa.provider_calls == {} and web.provider_calls == {}
        assert qa.candidates_considered == 0

    def test_intent_routed_tabular(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        evidence, trace = run_cascade(
            _query("颐年食堂的开放时间是几点"), _intent(IntentClass.OPENING_SCHEDULE), snapshot, suite, annotator
        )
        assert evidence.stage == STAGE_TABULAR
        assert evidence.items[0].doc.id == "t-yannan-hours"
        assert "一层大厅" in evidence.items[0].doc.body  # the Markdown table came along
        assert trace.stage_record(STAGE_CONCEPT).executed is False

    def test_empty_tabular_falls_through(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        evidence, trace = run_cascade(
            _query("专家咨询费的发放标准是什么"), _intent(IntentClass.EXPERT_CONSULTATION), snapshot, suite, annotator
        )
        tabular = trace.stage_record(STAGE_TABULAR)
        assert tabular.executed and tabular.survivors == 0
        assert evidence.stage in (STAGE_QA, STAGE_WEB, STAGE_NONE)

    def test_no_match_yields_stage_none(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        query_text = "qwzx jvkp"
        # Adversarial fixture verified by oracle: nothing in the corpus is
        # even weakly similar to this string.
        qv = embedder.embed([query_text])[0]
        max_cos = max(cosine_oracle(qv, d.embedding) for d in snapshot.documents)
        assert max_cos < 0.1
        evidence, trace = run_cascade(_query(query_text), _general(), snapshot, suite, annotator)
        assert evidence.stage == STAGE_NONE
        assert evidence.items == ()

    def test_qa_hit_before_web(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        evidence, trace = run_cascade(
            _query("学生宿舍如何接入有线校园网"), _general(), snapshot, suite, annotator
        )
        assert evidence.stage == STAGE_QA
        assert not trace.stage_record(STAGE_WEB).executed

    def test_web_hit(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        evidence, trace = run_cascade(_query("寒假什么时候开始"), _general(), snapshot, suite, annotator)
        assert evidence.stage == STAGE_WEB
        assert {item.doc.id for item in evidence.items} <= {"w-vacation-2024", "w-vacation-2025", "w-network", "w-seminar"}

    def test_skip_discipline_across_fixtures(self, snapshot, embedder, annotator):
        fixtures = [
            ("介绍国际关系学院", _general()),
            ("学生宿舍如何接入有线校园网", _general()),
            ("寒假什么时候开始", _general()),
            ("颐年食堂的开放时间是几点", _intent(IntentClass.OPENING_SCHEDULE)),
        ]
        for pivot, intent in fixtures:
            suite = _suite(embedder)
            evidence, trace = run_cascade(_query(pivot), intent, snapshot, suite, annotator)
            assert evidence.stage != STAGE_NONE
            hit_pos = STAGE_ORDER.index(evidence.stage)
            for later in STAGE_ORDER[hit_pos + 1 :]:
                record = trace.stage_record(later)
                assert record.executed is False
                assert record.candidates_considered == 0
                assert record.provider_calls == {}

    def test_threshold_soundness_and_candidate_bound(self, snapshot, embedder, annotator):
        rng = random.Random(1234)
        vocab = "食堂 图书馆 开放 时间 报销 住宿 网络 寒假 讲座 校园 会议 专家 软件 交通 假期".split()
        for _ in range(200):
            pivot = "".join(rng.choice(vocab) for _ in range(rng.randint(1, 6)))
            suite = _suite(embedder)
            evidence, trace = run_cascade(_query(pivot), _general(), snapshot, suite, annotator)
            if evidence.stage not in (STAGE_CONCEPT, STAGE_NONE):
                for item in evidence.items:
                    assert item.rerank_score >= 0.1
            for name in (STAGE_TABULAR, STAGE_QA, STAGE_WEB):
                assert trace.stage_record(name).candidates_considered <= 10

    def test_determinism(self, snapshot, embedder, annotator):
        results = []
        for _ in range(2):
            suite = _suite(embedder)
            evidence, trace = run_cascade(
                _query("寒假什么时候开始"), _general(), snapshot, suite, annotator, trace_id="fixed"
            )
            results.append((evidence.doc_ids(), [item.rerank_score for item in evidence.items], trace.to_json()))
        assert results[0] == results[1]

    def test_stage_order_fixed(self, snapshot, embedder, annotator):
        suite = _suite(embedder)
        _evidence, trace = run_cascade(_query("寒假什么时候开始"), _general(), snapshot, suite, annotator)
        assert tuple(r.stage for r in trace.stages) == STAGE_ORDER


class TestThresholdOnEmbed:
    def test_embed_cutoff_with_provider_reranker(self, snapshot, embedder, annotator):
        # A reranker that scores everything high would let junk through the
        # 0.1 cutoff; threshold_on=embed filters on embedding cosine instead
        # while keeping the provider's ordering.
        class GenerousReranker:
            def rerank(self, query, documents):
                return [0.99 - 0.01 * i for i in range(len(documents))]

        log = CallLog()
        suite = ProviderSuite(
            embedder=embedder, translator=TranslatorChain(), reranker=GenerousReranker(), log=log
        ).with_log(log)
        query_text = "寒假什么时候开始"
        evidence, _trace = run_cascade(
            _query(query_text), _general(), snapshot, suite, annotator, threshold_on="embed"
        )
        qv = embedder.embed([query_text])[0]
        for item in evidence.items:
            assert cosine_oracle(qv, item.doc.embedding) >= 0.1
            assert item.rerank_score > 0.9  # provider scores retained on the items


class TestIndexPersistence:
    def test_save_load_round_trip(self, tmp_path):
        token_lists = [tokenize("图书馆 开放时间 查询"), tokenize("报销 流程 说明 figure"), tokenize("open hours library")]
        index = InvertedIndex(["a", "b", "c"], token_lists)
        path = tmp_path / "lexical.idx"
        index.save(path)
        loaded = InvertedIndex.load(path)
        assert loaded.doc_ids == index.doc_ids
        assert loaded.doc_lengths == index.doc_lengths
        assert loaded.postings == index.postings
        query = tokenize("图书馆 open")
        assert loaded.bm25_scores(query) == index.bm25_scores(query)

    def test_magic_header_checked(self, tmp_path):
        path = tmp_path / "bogus.idx"
        path.write_bytes(b"NOTANIDX" + b"\x00" * 16)
        with pytest.raises(ValueError):
            InvertedIndex.load(path)
