"""Intent classification with heuristic candidate filtering.

Queries about schedules and financial standards need tabular evidence; the
classifier decides which of 11 tabular intent classes applies, or General
for everything else.  Candidate filtering first restricts the label space
to the classes of the k most similar training queries, which cannot evict
the gold class as long as recall@k holds, and empirically never hurts.
"""

from __future__ import annotations

import json
import math
import zlib
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, EmptyTrainingSet, ProviderUnavailable
from .providers import EmbeddingProvider, HttpIntentClassifier


class IntentClass(str, Enum):
    """The 11 tabular intent classes plus the General sentinel."""

    ROUTINE_REIMBURSEMENT = "Routine Reimbursement"
    SOFTWARE_REIMBURSEMENT = "Reimbursement for Software Development or Purchase"
    INTER_CITY_TRANSPORT = "Inter-City Transportation Expense"
    INTERNATIONAL_TRANSPORT = "International Transportation Expense"
    ACCOMMODATION = "Accommodation Expense"
    FIELD_INVESTIGATION = "Field Investigation Expense"
    CONFERENCE = "Conference Expense"
    EXPERT_CONSULTATION = "Expert Consultation Expense"
    OFF_CAMPUS_SERVICE = "Service Expense for Off-Campus Personnel"
    OPENING_SCHEDULE = "Opening Schedule of Buildings"
    HOLIDAY_SERVICE_SCHEDULE = "Service Schedule of Buildings during Holiday Period"
    GENERAL = "General"


TABULAR_CLASSES: tuple[IntentClass, ...] = tuple(c for c in IntentClass if c is not IntentClass.GENERAL)

DEFAULT_K = 50
DEFAULT_K_VOTE = 5
DEFAULT_GATE = 0.35


@dataclass(frozen=True)
class TrainingExample:
    id: str
    query_text: str
    label: IntentClass
    embedding: np.ndarray


@dataclass(frozen=True)
class IntentIndex:
    """Immutable nearest-neighbor index over embedded training queries."""

    examples: tuple[TrainingExample, ...]
    embedder_id: str
    embedder: EmbeddingProvider
    matrix: np.ndarray  # row i = examples[i].embedding, L2-normalized

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def labels(self) -> set[IntentClass]:
        return {ex.label for ex in self.examples}


@dataclass(frozen=True)
class CandidateSet:
    """Distinct labels of the k nearest training queries."""

    classes: frozenset[IntentClass]
    neighbors: tuple[tuple[str, float], ...]  # (example id, cosine), best first


@dataclass(frozen=True)
class IntentPrediction:
    label: IntentClass
    candidates: CandidateSet
    method: str  # "knn_vote" | "provider"
    confidence: float


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    recall_at_k: float
    n: int

    def to_json(self) -> str:
        return json.dumps({"accuracy": self.accuracy, "recall_at_k": self.recall_at_k, "n": self.n})


def split_train_test(n: int, test_fraction: float = 0.2) -> tuple[int, int]:
    """Deterministic 80/20 sizing; the test side rounds up."""
    test = math.ceil(n * test_fraction)
    return n - test, test


def build_intent_index(
    examples: Sequence[tuple[str, str, Union[IntentClass, str]]],
    embedder: EmbeddingProvider,
) -> IntentIndex:
    """Embed and L2-normalize every training query into an immutable index."""
    if not examples:
        raise EmptyTrainingSet("intent index needs at least one example")
    ids = [ex[0] for ex in examples]
    texts = [ex[1] for ex in examples]
    labels = [ex[2] if isinstance(ex[2], IntentClass) else IntentClass(ex[2]) for ex in examples]
    matrix = embedder.embed(texts)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        matrix = matrix / norms
    built = tuple(
        TrainingExample(id=ids[i], query_text=texts[i], label=labels[i], embedding=matrix[i])
        for i in range(len(examples))
    )
    matrix = matrix.astype(np.float32)
    matrix.setflags(write=False)
    return IntentIndex(examples=built, embedder_id=embedder.embedder_id, embedder=embedder, matrix=matrix)


def load_examples_jsonl(path: Union[str, Path]) -> list[tuple[str, str, IntentClass]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append((rec["id"], rec["text"], IntentClass(rec["label"])))
    return out


def hic_candidates(index: IntentIndex, query_vec: np.ndarray, k: int) -> CandidateSet:
    """Top-min(k, |index|) training queries by cosine; ties by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = np.asarray(query_vec, dtype=np.float32)
    if query_vec.shape[0] != index.matrix.shape[1]:
        raise DimensionMismatch(
            f"query dimension {query_vec.shape[0]} != index dimension {index.matrix.shape[1]}"
        )
    norm = float(np.linalg.norm(query_vec))
    if norm > 0 and abs(norm - 1.0) > 1e-6:
        query_vec = query_vec / norm
    scores = index.matrix @ query_vec
    order = sorted(range(len(index)), key=lambda i: (-float(scores[i]), index.examples[i].id))
    top = order[: min(k, len(index))]
    neighbors = tuple((index.examples[i].id, float(scores[i])) for i in top)
    classes = frozenset(index.examples[i].label for i in top)
    return CandidateSet(classes=classes, neighbors=neighbors)


def knn_vote(
    index: IntentIndex,
    query_vec: np.ndarray,
    candidates: CandidateSet,
    k_vote: int = DEFAULT_K_VOTE,
) -> IntentPrediction:
    """Majority vote among the top-k_vote neighbors whose label is allowed.

    Vote ties go to the class whose best neighbor ranks highest.  Confidence
    is the winning vote fraction.
    """
    if not candidates.classes:
        raise ValueError("candidate set is empty")
    ranked = hic_candidates(index, query_vec, k=len(index)).neighbors
    by_id = {ex.id: ex for ex in index.examples}
    considered = [by_id[nid] for nid, _ in ranked if by_id[nid].label in candidates.classes][:k_vote]
    if not considered:
        raise ValueError("no training example carries any of the candidate classes")
    votes = Counter(ex.label for ex in considered)
    best_count = max(votes.values())
    tied = [label for label, count in votes.items() if count == best_count]
    if len(tied) == 1:
        winner = tied[0]
    else:
        winner = next(ex.label for ex in considered if ex.label in tied)
    return IntentPrediction(
        label=winner,
        candidates=candidates,
        method="knn_vote",
        confidence=best_count / len(considered),
    )


def classify_intent(
    pivot_text: str,
    index: IntentIndex,
    k: int = DEFAULT_K,
    classifier: Optional[HttpIntentClassifier] = None,
    *,
    k_vote: int = DEFAULT_K_VOTE,
    gate: float = DEFAULT_GATE,
    embedder: Optional[EmbeddingProvider] = None,
) -> IntentPrediction:
    """Classify a pivot-language query, or General when nothing is close.

    Candidates come from the k nearest training queries.  If the best
    similarity falls below the gate the query has no tabular intent and
    General is returned outright.  A provider-backed classifier sees the
    candidate class names and must answer with one of them (or General);
    anything else, or an unreachable provider, falls back to the kNN vote.
    """
    active_embedder = embedder if embedder is not None else index.embedder
    query_vec = active_embedder.embed([pivot_text])[0]
    candidates = hic_candidates(index, query_vec, k=k)
    top_score = candidates.neighbors[0][1] if candidates.neighbors else -1.0
    if top_score < gate:
        return IntentPrediction(
            label=IntentClass.GENERAL,
            candidates=candidates,
            method="knn_vote",
            confidence=min(1.0, max(0.0, 1.0 - max(top_score, 0.0))),
        )
    if classifier is not None:
        try:
            label_str, confidence = classifier.classify(pivot_text, sorted(c.value for c in candidates.classes))
            label = IntentClass(label_str)
            if label is IntentClass.GENERAL or label in candidates.classes:
                return IntentPrediction(
                    label=label,
                    candidates=candidates,
                    method="provider",
                    confidence=max(0.0, min(1.0, confidence)),
                )
        except (ProviderUnavailable, ValueError):
            pass
    return knn_vote(index, query_vec, candidates, k_vote=k_vote)


def evaluate_intent(
    index: IntentIndex,
    testset: Sequence[tuple[str, Union[IntentClass, str]]],
    k: int = DEFAULT_K,
    with_hic: bool = True,
    *,
    k_vote: int = DEFAULT_K_VOTE,
) -> EvalReport:
    """Accuracy and candidate recall of the kNN classifier on a labeled set.

    ``with_hic=False`` widens the candidate set to the whole index (all
    labels allowed), which is what an unconstrained classifier sees.  The
    similarity gate is a routing concern and does not apply here.
    """
    if not testset:
        raise ValueError("testset must be non-empty")
    correct = 0
    recalled = 0
    for text, label in testset:
        gold = label if isinstance(label, IntentClass) else IntentClass(label)
        vec = index.embedder.embed([text])[0]
        candidates = hic_candidates(index, vec, k=k if with_hic else len(index))
        if gold in candidates.classes:
            recalled += 1
        prediction = knn_vote(index, vec, candidates, k_vote=k_vote)
        if prediction.label is gold:
            correct += 1
    n = len(testset)
    return EvalReport(accuracy=correct / n, recall_at_k=recalled / n, n=n)


# ---------------------------------------------------------------------------
# Seed-question paraphrasing (offline fixture generation)
# ---------------------------------------------------------------------------


class ParaphraseRule(int, Enum):
    SIMPLIFY = 1
    ADD_IDENTITY = 2
    REORDER = 3
    SYNONYM = 4


_PERSONAS_ZH = ("我是正教授。", "我是一名新来的博士生。", "我是行政助理。", "我是大一新生。")
_PERSONAS_EN = ("I am a full professor. ", "I am a new PhD student. ", "I am a staff assistant. ")

_POLITENESS_PREFIXES = ("请问", "麻烦问一下", "想了解一下", "could you tell me ", "please tell me ")

_SYNONYMS = {
    "哪里": "什么地方",
    "报销": "报账",
    "标准": "规定",
    "开放时间": "开门时间",
    "怎么": "如何",
    "where": "at what place",
    "reimburse": "claim back",
    "opening hours": "open times",
}


@dataclass(frozen=True)
class ParaphraseOutcome:
    texts: tuple[str, ...]
    skipped: tuple[ParaphraseRule, ...]


def _rotate_tokens(question: str) -> str:
    tokens = question.split()
    if len(tokens) >= 2:
        cut = len(tokens) // 2
        return " ".join(tokens[cut:] + tokens[:cut])
    # Unspaced scripts: rotate at the midpoint character.
    cut = len(question) // 2
    return question[cut:] + question[:cut]


def paraphrase_seed(
    question: str,
    rules: Sequence[ParaphraseRule],
    provider=None,
) -> ParaphraseOutcome:
    """One deterministic paraphrase per requested rule.

    The built-in transforms are canned (persona prefixes, token reordering,
    a small synonym table) and exist to generate offline fixtures; a
    generation provider, when given, takes precedence per rule.  Rules the
    built-in cannot cover for this input are reported as skipped.
    """
    texts: list[str] = []
    skipped: list[ParaphraseRule] = []
    has_cjk = any("一" <= ch <= "鿿" for ch in question)
    for rule in rules:
        if provider is not None:
            try:
                texts.append(provider.paraphrase(question, rule))
                continue
            except ProviderUnavailable:
                pass
        if rule is ParaphraseRule.SIMPLIFY:
            simplified = question
            for prefix in _POLITENESS_PREFIXES:
                if simplified.casefold().startswith(prefix.casefold()):
                    simplified = simplified[len(prefix) :].lstrip("，, ")
                    break
            if simplified == question:
                simplified = question.rstrip("？?。. ") or question
            texts.append(simplified)
        elif rule is ParaphraseRule.ADD_IDENTITY:
            personas = _PERSONAS_ZH if has_cjk else _PERSONAS_EN
            persona = personas[zlib.crc32(question.encode("utf-8")) % len(personas)]
            texts.append(persona + question)
        elif rule is ParaphraseRule.REORDER:
            texts.append(_rotate_tokens(question))
        elif rule is ParaphraseRule.SYNONYM:
            rewritten = question
            for old, new in _SYNONYMS.items():
                if old in rewritten:
                    rewritten = rewritten.replace(old, new, 1)
                    break
            if rewritten == question:
                skipped.append(rule)
                continue
            texts.append(rewritten)
    return ParaphraseOutcome(texts=tuple(texts), skipped=tuple(skipped))
