import numpy as np
import pytest

from aloha.config import Config, load_config, parse_config_text
from aloha.errors import EmptyText, ProviderUnavailable
from aloha.providers import (
    BuiltinTranslator,
    CallLog,
    CountingEmbedder,
    HashedNgramEmbedder,
    HttpEmbeddingProvider,
    HttpGenerationProvider,
    HttpIntentClassifier,
    HttpPlannerProvider,
    HttpRerankProvider,
    HttpTranslator,
    PhrasePair,
    TranslatorChain,
)

UNREACHABLE = "http://127.0.0.1:9"


class TestHashedEmbedder:
    def test_deterministic_across_instances(self):
        a = HashedNgramEmbedder(dim=128).embed(["图书馆的开放时间", "hello world"])
        b = HashedNgramEmbedder(dim=128).embed(["图书馆的开放时间", "hello world"])
        assert np.array_equal(a, b)

    def test_rows_unit_norm(self):
        matrix = HashedNgramEmbedder(dim=64).embed(["a", "bb", "c c c"])
        assert np.allclose(np.linalg.norm(matrix, axis=1), 1.0, atol=1e-6)

    def test_similar_texts_closer_than_dissimilar(self):
        embedder = HashedNgramEmbedder(dim=512)
        m = embedder.embed(["图书馆的开放时间是什么", "图书馆几点开放", "国际机票如何报销"])
        close = float(m[0] @ m[1])
        far = float(m[0] @ m[2])
        assert close > far

    def test_empty_text_rejected(self):
        with pytest.raises(EmptyText):
            HashedNgramEmbedder().embed_one("   ")

    def test_whitespace_normalization_invariance(self):
        embedder = HashedNgramEmbedder(dim=128)
        assert np.array_equal(embedder.embed(["a  b\tc"]), embedder.embed(["a b c"]))


class TestBuiltinTranslator:
    def test_lookup_hit(self):
        translator = BuiltinTranslator([PhrasePair("en", "zh", "hello", "你好")])
        assert translator.translate("hello", "en", "zh") == "你好"
        assert translator.lookup("hello", "en", "zh") == "你好"

    def test_unknown_phrase_tagged_passthrough(self):
        translator = BuiltinTranslator()
        assert translator.translate("unknown-sentence", "en", "zh") == "[zh]unknown-sentence"
        assert translator.lookup("unknown-sentence", "en", "zh") is None

    def test_chain_reports_degradation(self):
        chain = TranslatorChain(builtin=BuiltinTranslator([PhrasePair("en", "zh", "hi", "嗨")]))
        text, degraded = chain.translate_status("hi", "en", "zh")
        assert (text, degraded) == ("嗨", False)
        text, degraded = chain.translate_status("bye", "en", "zh")
        assert degraded and text == "[zh]bye"

    def test_chain_without_providers_raises(self):
        with pytest.raises(ProviderUnavailable):
            TranslatorChain().translate("x", "en", "zh")


class TestHttpClientsUnreachable:
    def test_embed(self):
        with pytest.raises(ProviderUnavailable):
            HttpEmbeddingProvider(f"{UNREACHABLE}/embed", timeout=0.2).embed(["x"])

    def test_translate(self):
        with pytest.raises(ProviderUnavailable):
            HttpTranslator(f"{UNREACHABLE}/translate", timeout=0.2).translate("x", "en", "zh")

    def test_generate(self):
        with pytest.raises(ProviderUnavailable):
            HttpGenerationProvider(f"{UNREACHABLE}/generate", timeout=0.2).generate("p", [])

    def test_classify(self):
        with pytest.raises(ProviderUnavailable):
            HttpIntentClassifier(f"{UNREACHABLE}/classify", timeout=0.2).classify("q", ["a"])

    def test_rerank(self):
        with pytest.raises(ProviderUnavailable):
            HttpRerankProvider(f"{UNREACHABLE}/rerank", timeout=0.2).rerank("q", ["d"])

    def test_plan(self):
        with pytest.raises(ProviderUnavailable):
            HttpPlannerProvider(f"{UNREACHABLE}/plan", timeout=0.2).plan("r", [])

    def test_chain_falls_back_to_builtin(self):
        chain = TranslatorChain(
            builtin=BuiltinTranslator([PhrasePair("en", "zh", "hello", "你好")]),
            external=HttpTranslator(f"{UNREACHABLE}/translate", timeout=0.2),
        )
        text, degraded = chain.translate_status("hello", "en", "zh")
        assert (text, degraded) == ("你好", False)


class TestFallbackEmbedder:
    def test_primary_failure_uses_builtin(self):
        from aloha.providers import FallbackEmbedder

        builtin = HashedNgramEmbedder(dim=64)
        chain = FallbackEmbedder(HttpEmbeddingProvider(f"{UNREACHABLE}/embed", timeout=0.2), builtin)
        out = chain.embed(["some text"])
        assert np.array_equal(out, builtin.embed(["some text"]))
        assert chain.embedder_id.startswith("http:")  # identity follows the configured primary


class TestCallLog:
    def test_counts_accumulate(self):
        log = CallLog()
        embedder = CountingEmbedder(HashedNgramEmbedder(dim=32), log)
        embedder.embed(["a"])
        embedder.embed(["b", "c"])
        assert log.snapshot() == {"embed": 2}

    def test_snapshot_is_a_copy(self):
        log = CallLog()
        log.record("rerank")
        snap = log.snapshot()
        log.record("rerank")
        assert snap == {"rerank": 1}


class TestConfig:
    def test_defaults_match_pinned_constants(self):
        config = Config()
        assert config.k == 50
        assert config.top_n == 10
        assert config.threshold == 0.1
        assert config.pivot_lang == "zh"
        assert config.trace_retention == 1024

    def test_parse_file_text(self):
        config = parse_config_text(
            """
            # comment
            k = 25
            threshold = 0.2
            pivot_lang = "en"
            embed_endpoint = http://127.0.0.1:9999/embed
            admin_token = secret  # trailing comment
            """
        )
        assert config.k == 25
        assert config.threshold == 0.2
        assert config.pivot_lang == "en"
        assert config.embed_endpoint == "http://127.0.0.1:9999/embed"
        assert config.admin_token == "secret"

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            parse_config_text("no_such_key = 1")

    def test_env_overrides(self, tmp_path):
        path = tmp_path / "service.conf"
        path.write_text("k = 25\n", encoding="utf-8")
        config = load_config(path, env={"ALOHA_K": "75", "ALOHA_INTENT_GATE": "0.5"})
        assert config.k == 75
        assert config.intent_gate == 0.5

    def test_env_only(self):
        config = load_config(env={"ALOHA_STORE_PATH": "/tmp/store"})
        assert config.store_path == "/tmp/store"
