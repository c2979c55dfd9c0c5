"""Keyword extraction: tokenize, POS-tag, chunk noun phrases, filter.

The tagger is deliberately a small rule system (closed-class lexicon plus
suffix and capitalization heuristics).  It is not a model and does not try
to be one; the fixture corpus in tests/ defines the supported behavior.
Anything smarter can be dropped in behind the Tagger interface without
touching the chunker or filter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Protocol

NOUN = "NOUN"
PROPN = "PROPN"
ADJ = "ADJ"
DET = "DET"
PRON = "PRON"
VERB = "VERB"
ADP = "ADP"
NUM = "NUM"
OTHER = "OTHER"

POS_TAGS = {NOUN, PROPN, ADJ, DET, PRON, VERB, ADP, NUM, OTHER}

# Tags allowed inside a noun phrase; a span must end on NOUN or PROPN.
CHUNK_TAGS = {ADJ, NOUN, PROPN, NUM}
HEAD_TAGS = {NOUN, PROPN}

_WORD_RE = re.compile(r"[A-Za-z0-9']+")

# Noun-ish derivational suffixes, longest first so "ology" wins over "y".
_NOUN_SUFFIXES = (
    "ology", "ance", "ence", "ency", "ment", "ness", "ship", "hood",
    "tion", "sion", "ity", "ics", "ism",
)

# Mid-sentence capitalization reads as a proper noun, except the pronoun I.
_CAP_PRONOUNS = {"I", "I'm", "I've", "I'll", "I'd"}


@dataclass(frozen=True)
class Token:
    text: str
    pos: str
    index: int


@dataclass(frozen=True)
class KeywordSpan:
    """A noun-headed span of tokens, the unit fed to mapping lookup."""

    surface: str
    normalized: str
    token_start: int
    token_end: int
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.token_start > self.token_end:
            raise ValueError("token_start must be <= token_end")


def tokenize(text: str) -> list[str]:
    """Whitespace/punctuation split; apostrophes stay inside words."""
    return _WORD_RE.findall(text)


def normalize(text: str) -> str:
    return " ".join(text.lower().split())


class Tagger(Protocol):
    def tag(self, text: str) -> list[Token]: ...


def _read_data_lines(name: str) -> Iterable[str]:
    raw = resources.files("talkoverlay.data").joinpath(name).read_text("utf-8")
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            yield line


def load_lexicon(lines: Iterable[str] | None = None) -> dict[str, str]:
    """Parse word<TAB>TAG lines; later entries override earlier ones."""
    if lines is None:
        lines = _read_data_lines("lexicon.txt")
    lexicon: dict[str, str] = {}
    for line in lines:
        word, sep, tag = line.partition("\t")
        if not sep or tag not in POS_TAGS:
            raise ValueError(f"bad lexicon line: {line!r}")
        lexicon[word.lower()] = tag
    return lexicon


def load_stopwords(lines: Iterable[str] | None = None) -> frozenset[str]:
    if lines is None:
        lines = _read_data_lines("stopwords.txt")
    return frozenset(w.lower() for w in lines)


class RuleTagger:
    """Deterministic lexicon + heuristics tagger.

    Rule order matters:
      1. capitalized past the first word -> PROPN (so lexicon verbs like
         "buy" still read as names in "Best Buy"); the pronoun I is exempt
      2. case-insensitive lexicon lookup
      3. capitalized first word not in the lexicon -> PROPN
      4. contains a digit -> NUM if purely numeric, else PROPN ("40D")
      5. suffix heuristics (-ly adverb, -ed participle, noun suffixes)
      6. everything else -> NOUN
    """

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = lexicon if lexicon is not None else load_lexicon()

    def tag(self, text: str) -> list[Token]:
        tokens = []
        for i, word in enumerate(tokenize(text)):
            tokens.append(Token(text=word, pos=self._tag_word(word, i), index=i))
        return tokens

    def _tag_word(self, word: str, index: int) -> str:
        if index > 0 and word[0].isupper() and word not in _CAP_PRONOUNS:
            return PROPN
        tag = self.lexicon.get(word.lower())
        if tag is not None:
            return tag
        if index == 0 and word[0].isupper():
            return PROPN
        if any(ch.isdigit() for ch in word):
            return NUM if all(ch.isdigit() or ch in ".," for ch in word) else PROPN
        lower = word.lower()
        if len(lower) > 3:
            if lower.endswith("ly"):
                return OTHER
            if lower.endswith("ed"):
                return ADJ
        for suffix in _NOUN_SUFFIXES:
            if lower.endswith(suffix) and len(lower) > len(suffix) + 1:
                return NOUN
        return NOUN


def chunk_noun_phrases(tokens: list[Token]) -> list[KeywordSpan]:
    """Greedy maximal spans of (ADJ|NOUN|PROPN|NUM)* (NOUN|PROPN)+.

    DET/PRON/VERB/ADP/OTHER break spans, so "leading determiner stripped"
    holds by construction.  Within a run, trailing tokens after the last
    NOUN/PROPN are dropped; runs with no noun at all yield nothing.
    """
    spans: list[KeywordSpan] = []
    run: list[Token] = []

    def flush():
        if not run:
            return
        end = len(run) - 1
        while end >= 0 and run[end].pos not in HEAD_TAGS:
            end -= 1
        if end < 0:
            return
        kept = run[: end + 1]
        surface = " ".join(t.text for t in kept)
        spans.append(
            KeywordSpan(
                surface=surface,
                normalized=normalize(surface),
                token_start=kept[0].index,
                token_end=kept[-1].index,
                tags=tuple(t.pos for t in kept),
            )
        )

    for tok in tokens:
        if tok.pos in CHUNK_TAGS:
            run.append(tok)
        else:
            flush()
            run = []
    flush()
    return spans


def filter_keywords(
    spans: list[KeywordSpan], stopwords: frozenset[str]
) -> list[KeywordSpan]:
    """Drop stoplisted spans, pure-number spans, and repeats (keep first)."""
    out: list[KeywordSpan] = []
    seen: set[str] = set()
    for span in spans:
        if span.normalized in stopwords:
            continue
        if span.tags and all(t == NUM for t in span.tags):
            continue
        if span.normalized in seen:
            continue
        seen.add(span.normalized)
        out.append(span)
    return out


class KeywordExtractor:
    """tag -> chunk -> filter, bundled with the shipped data files."""

    def __init__(self, tagger: Tagger | None = None,
                 stopwords: frozenset[str] | None = None):
        self.tagger = tagger if tagger is not None else RuleTagger()
        self.stopwords = stopwords if stopwords is not None else load_stopwords()

    def extract(self, text: str) -> list[KeywordSpan]:
        if not text.strip():
            return []
        tokens = self.tagger.tag(text)
        return filter_keywords(chunk_noun_phrases(tokens), self.stopwords)

    def keywords(self, text: str) -> list[str]:
        return [s.normalized for s in self.extract(text)]
