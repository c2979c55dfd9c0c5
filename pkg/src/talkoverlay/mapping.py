"""Authoring table: keyword -> visual element, plus matching and suggestions.

The table is strictly one-to-one (keyword_norm is the unique key).  Matching
is exact or whole-word containment: the entry key "camera" fires on the
extracted span "popular camera" but not on "cameras".  Ties go to the
longest key so "camera strap" beats "camera" when both are present.
"""

from __future__ import annotations

import json
import os
import tempfile
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol

from .keywords import KeywordSpan, normalize

VALID_KINDS = ("image", "icon", "video", "screen")
ANCHOR_HINTS = ("front2d", "surface")  # plus marker:<name> and hand:<side>
MAPPING_FORMAT_VERSION = 1


class InvalidUrl(Exception):
    pass


class InvalidDuration(Exception):
    pass


class ParseError(Exception):
    """Mapping document malformed; message carries location diagnostics."""


class ProviderUnavailable(Exception):
    pass


def validate_anchor_hint(hint: str) -> str:
    if hint in ANCHOR_HINTS:
        return hint
    if hint.startswith("marker:") and len(hint) > len("marker:"):
        return hint
    if hint in ("hand:left", "hand:right"):
        return hint
    raise ParseError(f"bad anchor_hint {hint!r}")


@dataclass(frozen=True)
class MappingEntry:
    keyword_norm: str
    kind: str
    url: str
    duration_ms: int | None = None
    show_keyword: bool = False
    anchor_hint: str = "front2d"

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ParseError(f"bad kind {self.kind!r}")
        if not self.url:
            raise InvalidUrl("url must be non-empty")
        if self.duration_ms is not None and self.duration_ms <= 0:
            raise InvalidDuration(f"duration_ms must be > 0, got {self.duration_ms}")
        validate_anchor_hint(self.anchor_hint)

    @property
    def key_words(self) -> tuple[str, ...]:
        return tuple(self.keyword_norm.split())


@dataclass(frozen=True)
class MatchResult:
    matched: list[tuple[KeywordSpan, MappingEntry]]
    unmatched: list[KeywordSpan]


def _contains_whole_words(span_words: tuple[str, ...], key_words: tuple[str, ...]) -> bool:
    n = len(key_words)
    if n == 0 or n > len(span_words):
        return False
    return any(
        span_words[i : i + n] == key_words for i in range(len(span_words) - n + 1)
    )


class MappingRegistry:
    def __init__(self):
        self._entries: dict[str, MappingEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[MappingEntry]:
        return list(self._entries.values())

    def get(self, keyword: str) -> MappingEntry | None:
        return self._entries.get(normalize(keyword))

    def upsert(self, entry: MappingEntry) -> None:
        key = normalize(entry.keyword_norm)
        if key != entry.keyword_norm:
            entry = MappingEntry(
                keyword_norm=key,
                kind=entry.kind,
                url=entry.url,
                duration_ms=entry.duration_ms,
                show_keyword=entry.show_keyword,
                anchor_hint=entry.anchor_hint,
            )
        self._entries[key] = entry

    def delete(self, keyword: str) -> bool:
        return self._entries.pop(normalize(keyword), None) is not None

    def match(self, spans: list[KeywordSpan]) -> MatchResult:
        """Partition spans into (span, entry) hits and misses.

        A span hits when its normalized form equals an entry key or the
        key occurs as a contiguous whole-word run inside it.  Longest key
        wins ties; key text is the final tie-break for determinism.
        """
        matched: list[tuple[KeywordSpan, MappingEntry]] = []
        unmatched: list[KeywordSpan] = []
        for span in spans:
            span_words = tuple(span.normalized.split())
            candidates = [
                e
                for e in self._entries.values()
                if e.keyword_norm == span.normalized
                or _contains_whole_words(span_words, e.key_words)
            ]
            if candidates:
                best = max(candidates, key=lambda e: (len(e.keyword_norm), e.keyword_norm))
                matched.append((span, best))
            else:
                unmatched.append(span)
        return MatchResult(matched=matched, unmatched=unmatched)

    # -- persistence ----------------------------------------------------

    def to_document(self) -> dict:
        return {
            "version": MAPPING_FORMAT_VERSION,
            "entries": [
                {
                    "keyword": e.keyword_norm,
                    "kind": e.kind,
                    "url": e.url,
                    "duration_ms": e.duration_ms,
                    "show_keyword": e.show_keyword,
                    "anchor_hint": e.anchor_hint,
                }
                for e in self._entries.values()
            ],
        }

    def save(self, path: str) -> None:
        """Atomic write: temp file in the same directory, then rename."""
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(prefix=".mapping-", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.to_document(), fh, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @staticmethod
    def entry_from_fields(fields: dict, where: str = "entry") -> MappingEntry:
        if not isinstance(fields, dict):
            raise ParseError(f"{where}: must be an object")
        keyword = fields.get("keyword")
        if not isinstance(keyword, str) or not keyword.strip():
            raise ParseError(f"{where}: 'keyword' must be a non-empty string")
        kind = fields.get("kind")
        if kind not in VALID_KINDS:
            raise ParseError(f"{where}: 'kind' must be one of {VALID_KINDS}, got {kind!r}")
        url = fields.get("url")
        if not isinstance(url, str) or not url:
            raise ParseError(f"{where}: 'url' must be a non-empty string")
        duration = fields.get("duration_ms")
        if duration is not None and (not isinstance(duration, int) or duration <= 0):
            raise ParseError(f"{where}: 'duration_ms' must be a positive integer")
        show_keyword = fields.get("show_keyword", False)
        if not isinstance(show_keyword, bool):
            raise ParseError(f"{where}: 'show_keyword' must be a boolean")
        anchor_hint = fields.get("anchor_hint") or "front2d"
        if not isinstance(anchor_hint, str):
            raise ParseError(f"{where}: 'anchor_hint' must be a string")
        try:
            validate_anchor_hint(anchor_hint)
        except ParseError:
            raise ParseError(f"{where}: bad anchor_hint {anchor_hint!r}") from None
        return MappingEntry(
            keyword_norm=normalize(keyword),
            kind=kind,
            url=url,
            duration_ms=duration,
            show_keyword=show_keyword,
            anchor_hint=anchor_hint,
        )

    @classmethod
    def load(cls, path: str) -> "MappingRegistry":
        registry = cls()
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        if not raw.strip():
            return registry  # empty file reads as an empty table
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ParseError(f"{path}: top level must be an object")
        if doc.get("version") != MAPPING_FORMAT_VERSION:
            raise ParseError(f"{path}: unsupported version {doc.get('version')!r}")
        entries = doc.get("entries")
        if not isinstance(entries, list):
            raise ParseError(f"{path}: 'entries' must be a list")
        for i, fields in enumerate(entries):
            registry.upsert(cls.entry_from_fields(fields, where=f"{path}: entries[{i}]"))
        return registry


# -- suggestion providers ------------------------------------------------


class SuggestionProvider(Protocol):
    def suggest(self, keyword: str) -> list[str]: ...


class FixtureSuggestionProvider:
    """Offline keyword -> URL map; the hermetic default."""

    def __init__(self, path: str | None = None):
        if path is None:
            raw = resources.files("talkoverlay.data").joinpath("suggestions.json").read_text("utf-8")
        else:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    raw = fh.read()
            except OSError as exc:
                raise ProviderUnavailable(str(exc)) from exc
        try:
            table = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProviderUnavailable(f"bad fixture file: {exc}") from exc
        self._table = {normalize(k): list(v) for k, v in table.items()}

    def suggest(self, keyword: str) -> list[str]:
        return list(self._table.get(normalize(keyword), []))


class HttpSuggestionProvider:
    """GET <endpoint>?q=<keyword>, expecting a JSON array of URL strings."""

    def __init__(self, endpoint: str, timeout_s: float = 3.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def suggest(self, keyword: str) -> list[str]:
        url = f"{self.endpoint}?q={urllib.parse.quote(normalize(keyword))}"
        try:
            with urllib.request.urlopen(url, timeout=self.timeout_s) as resp:
                body = resp.read().decode("utf-8")
            urls = json.loads(body)
        except (urllib.error.URLError, OSError, json.JSONDecodeError, ValueError) as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if not isinstance(urls, list) or not all(isinstance(u, str) for u in urls):
            raise ProviderUnavailable("endpoint did not return a JSON array of strings")
        return urls


def suggest_visuals(
    keyword: str, provider: SuggestionProvider, limit: int = 5
) -> list[str]:
    return provider.suggest(keyword)[: max(0, limit)]
