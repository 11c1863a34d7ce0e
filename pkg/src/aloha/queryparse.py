"""Decide whether a pivot-language query is a simple command and, if so,
extract the key used for exact concept matching.

A query reduces to a simple command when, after dropping everything that is
neither a noun nor a verb, it has subject-verb or verb-object shape, or
consists of nouns alone.  Anything carrying a dependent clause or other
constituents is complex and falls through to dense retrieval.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

from .docstore import DocView, Document
from .errors import EmptyText, ProviderUnavailable
from .providers import HttpParseProvider


class Pos(str, Enum):
    NOUN = "Noun"
    VERB = "Verb"
    OTHER = "Other"


class Relation(str, Enum):
    SUBJECT = "Subject"
    PREDICATE = "Predicate"
    OBJECT = "Object"
    CLAUSE = "Clause"
    OTHER_CONSTITUENT = "OtherConstituent"


class CommandShape(str, Enum):
    SV = "SV"
    VO = "VO"
    NOUNS_ONLY = "NounsOnly"


@dataclass(frozen=True)
class Token:
    surface: str
    pos: Pos
    index: int


@dataclass(frozen=True)
class Arc:
    head: int
    dep: int
    relation: Relation


@dataclass(frozen=True)
class ParseResult:
    tokens: tuple[Token, ...]
    arcs: tuple[Arc, ...]
    annotator_id: str


@dataclass(frozen=True)
class CommandForm:
    variant: str  # "Simple" | "Complex"
    key: Optional[str] = None
    shape: Optional[CommandShape] = None
    nouns: tuple[str, ...] = ()

    @property
    def is_simple(self) -> bool:
        return self.variant == "Simple"


COMPLEX = CommandForm(variant="Complex")


class Lexicon:
    """Surface-form -> part-of-speech table plus a clause-marker list."""

    def __init__(self, entries: dict[str, Pos], clause_markers: set[str]):
        self.entries = entries
        self.clause_markers = clause_markers
        self._surfaces = sorted(set(entries) | clause_markers, key=len, reverse=True)

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "Lexicon":
        entries: dict[str, Pos] = {}
        markers: set[str] = set()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("role") == "clause_marker":
                    markers.add(rec["surface"])
                else:
                    entries[rec["surface"]] = Pos(rec["pos"])
        return cls(entries, markers)


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


class LexiconAnnotator:
    """Longest-match segmentation plus positional arc heuristics.

    Deliberately simple: the first verb is the predicate, the nearest noun
    before it the subject, the nearest noun after it the object.  Tokens
    outside the lexicon become Other; clause markers yield a Clause arc.
    A parse provider, when configured, takes precedence.
    """

    annotator_id = "lexicon-v1"

    def __init__(self, lexicon: Lexicon, provider: Optional[HttpParseProvider] = None):
        self.lexicon = lexicon
        self.provider = provider

    def annotate(self, text: str) -> ParseResult:
        if not text.strip():
            raise EmptyText("cannot annotate empty text")
        if self.provider is not None:
            try:
                return self._from_wire(self.provider.parse(text))
            except ProviderUnavailable:
                pass
        return self._annotate_builtin(text)

    def _from_wire(self, body: dict) -> ParseResult:
        tokens = tuple(
            Token(surface=t["surface"], pos=Pos(t["pos"]), index=i) for i, t in enumerate(body["tokens"])
        )
        arcs = tuple(Arc(head=a["head"], dep=a["dep"], relation=Relation(a["rel"])) for a in body["arcs"])
        for arc in arcs:
            if not (0 <= arc.head < len(tokens) and 0 <= arc.dep < len(tokens)):
                raise ProviderUnavailable("parse", "arc index out of range")
        return ParseResult(tokens=tokens, arcs=arcs, annotator_id="provider")

    def _segment(self, text: str) -> list[tuple[str, str]]:
        """Greedy longest-match split into (surface, tag) pieces.

        tag is "noun"/"verb"/"clause"/"other".  Latin-script lexicon entries
        only match on word boundaries; CJK entries match anywhere.
        """
        normalized = unicodedata.normalize("NFKC", text)
        folded = normalized.casefold()
        pieces: list[tuple[str, str]] = []
        other_start = None
        i = 0
        while i < len(folded):
            match = None
            for surface in self.lexicon._surfaces:
                target = surface.casefold()
                if not folded.startswith(target, i):
                    continue
                boundary_ok = True
                if target and _is_word_char(target[0]) and not ("一" <= target[0] <= "鿿"):
                    if i > 0 and _is_word_char(folded[i - 1]):
                        boundary_ok = False
                    end = i + len(target)
                    if end < len(folded) and _is_word_char(folded[end]) and not ("一" <= folded[end] <= "鿿"):
                        boundary_ok = False
                if boundary_ok:
                    match = surface
                    break
            if match is None:
                if other_start is None:
                    other_start = i
                i += 1
                continue
            if other_start is not None:
                chunk = normalized[other_start:i].strip()
                if chunk:
                    pieces.append((chunk, "other"))
                other_start = None
            surface_original = normalized[i : i + len(match)]
            if match in self.lexicon.clause_markers:
                pieces.append((surface_original, "clause"))
            else:
                pieces.append((surface_original, self.lexicon.entries[match].value.lower()))
            i += len(match)
        if other_start is not None:
            chunk = normalized[other_start:].strip()
            if chunk:
                pieces.append((chunk, "other"))
        return pieces

    def _annotate_builtin(self, text: str) -> ParseResult:
        pieces = self._segment(text)
        tokens = []
        clause_indices = []
        for idx, (surface, tag) in enumerate(pieces):
            if tag == "noun":
                pos = Pos.NOUN
            elif tag == "verb":
                pos = Pos.VERB
            else:
                pos = Pos.OTHER
            if tag == "clause":
                clause_indices.append(idx)
            tokens.append(Token(surface=surface, pos=pos, index=idx))

        arcs: list[Arc] = []
        predicate = next((t.index for t in tokens if t.pos is Pos.VERB), None)
        if predicate is not None:
            arcs.append(Arc(head=predicate, dep=predicate, relation=Relation.PREDICATE))
            subject = next(
                (t.index for t in reversed(tokens[:predicate]) if t.pos is Pos.NOUN), None
            )
            if subject is not None:
                arcs.append(Arc(head=predicate, dep=subject, relation=Relation.SUBJECT))
            obj = next((t.index for t in tokens[predicate + 1 :] if t.pos is Pos.NOUN), None)
            if obj is not None:
                arcs.append(Arc(head=predicate, dep=obj, relation=Relation.OBJECT))
        for idx in clause_indices:
            arcs.append(Arc(head=predicate if predicate is not None else idx, dep=idx, relation=Relation.CLAUSE))
        return ParseResult(tokens=tuple(tokens), arcs=tuple(arcs), annotator_id=self.annotator_id)


def reduce_to_command(parse: ParseResult) -> CommandForm:
    """Collapse a parse to a simple command, or reject it as complex."""
    if any(a.relation in (Relation.CLAUSE, Relation.OTHER_CONSTITUENT) for a in parse.arcs):
        return COMPLEX
    content = [t for t in parse.tokens if t.pos in (Pos.NOUN, Pos.VERB)]
    if not content:
        return COMPLEX
    if len(content) == 2 and content[0].pos is Pos.NOUN and content[1].pos is Pos.VERB:
        return CommandForm(
            variant="Simple", key=content[0].surface, shape=CommandShape.SV, nouns=(content[0].surface,)
        )
    if len(content) == 2 and content[0].pos is Pos.VERB and content[1].pos is Pos.NOUN:
        return CommandForm(
            variant="Simple", key=content[1].surface, shape=CommandShape.VO, nouns=(content[1].surface,)
        )
    if all(t.pos is Pos.NOUN for t in content):
        nouns = tuple(t.surface for t in content)
        return CommandForm(
            variant="Simple", key=" ".join(nouns), shape=CommandShape.NOUNS_ONLY, nouns=nouns
        )
    return COMPLEX


_TERMINAL_PUNCT = "。？！?!.,;:…，"


def normalize_key(text: str) -> str:
    """Trim, casefold, collapse internal whitespace, strip terminal punctuation."""
    text = " ".join(unicodedata.normalize("NFKC", text).casefold().split())
    return text.rstrip(_TERMINAL_PUNCT).rstrip()


def match_concept(
    key: str, concepts: DocView, constituents: Optional[Sequence[str]] = None
) -> Optional[Document]:
    """Unique exact match of the key against normalized concept titles.

    Multi-noun keys additionally match when any single constituent equals a
    title.  Two or more distinct matching documents mean ambiguity, which is
    treated as no match: a wrong concept card is worse than falling through
    to dense retrieval.
    """
    target = normalize_key(key)
    if not target:
        return None
    exact = [doc for doc in concepts if normalize_key(doc.title) == target]
    if len(exact) == 1:
        return exact[0]
    if len(exact) >= 2:
        return None
    parts = [normalize_key(p) for p in (constituents if constituents else target.split())]
    parts = [p for p in parts if p]
    if len(parts) >= 2:
        hits: list[Document] = []
        for doc in concepts:
            if normalize_key(doc.title) in parts and doc not in hits:
                hits.append(doc)
        if len(hits) == 1:
            return hits[0]
    return None
