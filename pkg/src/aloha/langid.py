"""Language frontdoor: detect the query language, pivot it for retrieval,
and localize the final answer back to the user's language.

Retrieval always runs in a single pivot language (Chinese by default,
because that is what the corpus is written in).  Non-pivot queries are
translated in, responses are translated back out.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

from .errors import EmptyText, ProviderUnavailable
from .providers import TranslatorChain

PIVOT_DEFAULT = "zh"
UNKNOWN_TAG = "und"

CJK_SHORTCUT_RATIO = 0.30

# Han unified ideograph blocks; kana/hangul deliberately excluded so that
# Japanese or Korean input falls through to the profile scorer (and usually
# to "und", which is served in the pivot language).
_CJK_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0xF900, 0xFAFF))


def is_cjk(char: str) -> bool:
    cp = ord(char)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


@dataclass(frozen=True)
class DetectionResult:
    """Winning language with confidence, plus the runner-up when one exists."""

    tag: str
    confidence: float
    runner_up: Optional[tuple[str, float]] = None


@dataclass(frozen=True)
class NormalizedQuery:
    """A user query in both its original and pivot-language form.

    ``pivot_text`` is what every retrieval stage sees.  The raw text is kept
    alongside because translation can mangle entity names; downstream
    matching may consult both.
    """

    raw_text: str
    user_lang: str
    pivot_text: str
    received_at: int
    translation_degraded: bool = False


def _char_ngrams(text: str, lo: int = 1, hi: int = 3) -> Counter:
    padded = f" {text} "
    grams: Counter = Counter()
    for n in range(lo, hi + 1):
        for i in range(len(padded) - n + 1):
            grams[padded[i : i + n]] += 1
    return grams


class NgramProfileDetector:
    """Character 1-3-gram cosine scorer over bundled seed corpora.

    A profile per language is built once from seed sentences; queries are
    scored by cosine similarity between their n-gram count vector and each
    profile.  Deterministic for identical input bytes.
    """

    def __init__(self, seed_texts: dict[str, list[str]]):
        self._profiles: dict[str, Counter] = {}
        self._profile_norms: dict[str, float] = {}
        for lang, sentences in sorted(seed_texts.items()):
            profile: Counter = Counter()
            for sentence in sentences:
                profile.update(_char_ngrams(self._normalize(sentence)))
            self._profiles[lang] = profile
            self._profile_norms[lang] = sum(v * v for v in profile.values()) ** 0.5

    @staticmethod
    def _normalize(text: str) -> str:
        text = unicodedata.normalize("NFC", text).casefold()
        return " ".join(text.split())

    def score(self, text: str) -> list[tuple[str, float]]:
        """Cosine per language, sorted best first (ties by tag)."""
        grams = _char_ngrams(self._normalize(text))
        query_norm = sum(v * v for v in grams.values()) ** 0.5
        scores = []
        for lang, profile in self._profiles.items():
            dot = sum(count * profile.get(gram, 0) for gram, count in grams.items())
            denom = query_norm * self._profile_norms[lang]
            scores.append((lang, dot / denom if denom > 0 else 0.0))
        scores.sort(key=lambda item: (-item[1], item[0]))
        return scores


def _load_seed_texts() -> dict[str, list[str]]:
    seeds = {}
    base = resources.files("aloha").joinpath("assets/langid")
    for entry in base.iterdir():
        name = entry.name
        if name.startswith("seed_") and name.endswith(".txt"):
            lang = name[len("seed_") : -len(".txt")]
            lines = [ln.strip() for ln in entry.read_text(encoding="utf-8").splitlines()]
            seeds[lang] = [ln for ln in lines if ln]
    return seeds


class LanguageFrontdoor:
    """Detection + pivot translation + response localization.

    Stateless after construction; safe to share across concurrent requests.
    An external detector callable, when given, takes precedence over the
    built-in; on ProviderUnavailable the built-in answers.
    """

    def __init__(
        self,
        translator: TranslatorChain,
        pivot_lang: str = PIVOT_DEFAULT,
        detector: Optional[Callable[[str], DetectionResult]] = None,
        seed_texts: Optional[dict[str, list[str]]] = None,
    ):
        self.translator = translator
        self.pivot_lang = pivot_lang
        self.external_detector = detector
        self._ngram = NgramProfileDetector(seed_texts or _load_seed_texts())

    def with_translator(self, translator: TranslatorChain) -> "LanguageFrontdoor":
        """Shallow copy sharing the (expensive) n-gram profiles but using a
        different translator chain, e.g. one that tallies provider calls."""
        clone = object.__new__(LanguageFrontdoor)
        clone.translator = translator
        clone.pivot_lang = self.pivot_lang
        clone.external_detector = self.external_detector
        clone._ngram = self._ngram
        return clone

    # -- detection ----------------------------------------------------------

    def detect_language(self, text: str) -> DetectionResult:
        if not text.strip():
            raise EmptyText("cannot detect language of empty text")
        if self.external_detector is not None:
            try:
                return self.external_detector(text)
            except ProviderUnavailable:
                pass
        return self._detect_builtin(text)

    def _detect_builtin(self, text: str) -> DetectionResult:
        alphabetic = [c for c in text if c.isalpha()]
        if not alphabetic:
            return DetectionResult(tag=UNKNOWN_TAG, confidence=0.0)
        cjk_ratio = sum(1 for c in alphabetic if is_cjk(c)) / len(alphabetic)
        if cjk_ratio >= CJK_SHORTCUT_RATIO:
            return DetectionResult(tag="zh", confidence=cjk_ratio)
        scores = self._ngram.score(text)
        best_lang, best = scores[0]
        if best <= 0.0:
            return DetectionResult(tag=UNKNOWN_TAG, confidence=0.0)
        total = sum(s for _, s in scores if s > 0)
        runner_up = None
        if len(scores) > 1 and scores[1][1] > 0:
            runner_up = (scores[1][0], scores[1][1] / total)
        return DetectionResult(tag=best_lang, confidence=best / total, runner_up=runner_up)

    # -- translation --------------------------------------------------------

    def translate(self, text: str, source: str, target: str) -> str:
        """Provider-backed translation; identity (source == target) is the
        caller's job and is never requested here."""
        if not text.strip():
            raise EmptyText("cannot translate empty text")
        return self.translator.translate(text, source, target)

    def normalize_query(self, raw: str, now: int) -> NormalizedQuery:
        detection = self.detect_language(raw)
        # Unknown language: serve in the pivot language without translating.
        user_lang = self.pivot_lang if detection.tag == UNKNOWN_TAG else detection.tag
        if user_lang == self.pivot_lang:
            return NormalizedQuery(raw_text=raw, user_lang=user_lang, pivot_text=raw, received_at=now)
        try:
            pivot_text, degraded = self.translator.translate_status(raw, user_lang, self.pivot_lang)
        except ProviderUnavailable:
            return NormalizedQuery(
                raw_text=raw,
                user_lang=user_lang,
                pivot_text=raw,
                received_at=now,
                translation_degraded=True,
            )
        return NormalizedQuery(
            raw_text=raw,
            user_lang=user_lang,
            pivot_text=pivot_text,
            received_at=now,
            translation_degraded=degraded,
        )

    def localize_response(self, pivot_response: str, target: str) -> tuple[str, bool]:
        """Translate a pivot-language answer to the user's language.

        Returns (text, degraded).  On total provider failure the pivot text
        is served as-is with the degraded flag set, rather than refusing.
        """
        if not pivot_response:
            raise EmptyText("cannot localize empty response")
        if target == self.pivot_lang:
            return pivot_response, False
        try:
            return self.translator.translate_status(pivot_response, self.pivot_lang, target)
        except ProviderUnavailable:
            return pivot_response, True
