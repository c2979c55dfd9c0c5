"""Authoritative scene: element spawning, placement, aging, manipulation.

The engine never renders anything; it owns the list of live elements and
answers every mutation with an updated snapshot.  All randomness (the text
and background colors of spawned cards) comes from one injected RNG so a
session is fully reproducible from its seed plus its inbound event log.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .config import EngineConfig
from .gestures import (
    GestureEvent,
    PINCH_END,
    PINCH_MOVE,
    PINCH_START,
    POINT,
    SWIPE,
    TWO_HAND_END,
    TWO_HAND_START,
    TWO_HAND_UPDATE,
    _norm_angle,
)
from .keywords import KeywordSpan
from .mapping import MappingEntry, MatchResult
from .transcripts import FinalizedUtterance

KEYWORD_TEXT = "keyword_text"
LIST = "list"
PROFILE = "profile"
LABEL = "label"
ELEMENT_KINDS = ("keyword_text", "list", "profile", "image", "icon", "video", "screen", "label")

_ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
    "1st": 1, "2nd": 2, "3rd": 3, "4th": 4, "5th": 5,
    "6th": 6, "7th": 7, "8th": 8, "9th": 9, "10th": 10,
}

_PROFILE_RE = re.compile(r"\bmy name is\s+(.+)", re.IGNORECASE)


class UnknownMarker(Exception):
    pass


# -- anchors ---------------------------------------------------------------


@dataclass(frozen=True)
class Screen2D:
    x: float
    y: float

    def to_dict(self) -> dict:
        return {"type": "screen2d", "x": self.x, "y": self.y}


@dataclass(frozen=True)
class HandAnchor:
    side: str

    def to_dict(self) -> dict:
        return {"type": "hand", "side": self.side}


@dataclass(frozen=True)
class MarkerAnchor:
    name: str

    def to_dict(self) -> dict:
        return {"type": "marker", "name": self.name}


@dataclass(frozen=True)
class SurfaceAnchor:
    u: float
    v: float

    def to_dict(self) -> dict:
        return {"type": "surface", "u": self.u, "v": self.v}


Anchor = Screen2D | HandAnchor | MarkerAnchor | SurfaceAnchor


@dataclass(frozen=True)
class Style:
    text_rgb: tuple[int, int, int]
    bg_rgb: tuple[int, int, int]
    alpha: float

    def to_dict(self) -> dict:
        return {
            "text_rgb": list(self.text_rgb),
            "bg_rgb": list(self.bg_rgb),
            "alpha": self.alpha,
        }


@dataclass
class SceneElement:
    id: int
    kind: str
    content: str
    anchor: Anchor
    created_ms: int
    expires_ms: int
    style: Style
    scale: float = 1.0
    rotation_deg: float = 0.0
    show_keyword: bool = False
    trigger: str = ""  # normalized keyword that spawned it, for dedup
    grabbed: bool = False

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"bad element kind {self.kind!r}")
        if self.expires_ms <= self.created_ms:
            raise ValueError("expires_ms must be after created_ms")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class SceneSnapshot:
    t_ms: int
    elements: tuple[dict, ...]

    def to_payload(self) -> dict:
        return {"t_ms": self.t_ms, "elements": list(self.elements)}


# -- templates ---------------------------------------------------------------


@dataclass(frozen=True)
class ListItem:
    ordinal: int
    keyword: str


@dataclass(frozen=True)
class Profile:
    name: str


TemplateAction = ListItem | Profile


class TemplateDetector:
    """Regex triggers for the list and profile templates.

    The profile pattern wins over ordinals.  An ordinal fires only at the
    utterance start: token 0, or token 1 right after a connective/filler
    (POS OTHER), so "the first time I tried" stays inert.
    """

    def __init__(self, extractor):
        self.extractor = extractor

    def detect(self, text: str) -> TemplateAction | None:
        m = _PROFILE_RE.search(text)
        if m:
            name = self._pick_name(m.group(1))
            if name:
                return Profile(name=name)
        tokens = self.extractor.tagger.tag(text)
        for i, tok in enumerate(tokens[:2]):
            ordinal = _ORDINAL_WORDS.get(tok.text.lower())
            if ordinal is None:
                continue
            if i == 1 and tokens[0].pos != "OTHER":
                break
            remainder = " ".join(t.text for t in tokens[i + 1 :])
            spans = self.extractor.extract(remainder)
            if spans:
                return ListItem(ordinal=ordinal, keyword=spans[0].normalized)
            return None
        return None

    @staticmethod
    def _pick_name(tail: str) -> str:
        words = tail.replace(",", " ").replace(".", " ").split()
        if not words:
            return ""
        name = []
        for w in words[:3]:
            if w[0].isupper():
                name.append(w)
            else:
                break
        return " ".join(name) if name else words[0]


# -- the engine --------------------------------------------------------------


@dataclass
class _PendingPoint:
    x: float
    y: float
    set_ms: int
    surface: bool = False


@dataclass
class _Grab:
    element_id: int
    base_scale: float
    base_rotation: float


class SceneEngine:
    def __init__(
        self,
        config: EngineConfig | None = None,
        rng: random.Random | None = None,
        marker_names: set[str] | None = None,
    ):
        self.config = config if config is not None else EngineConfig()
        self.rng = rng if rng is not None else random.Random(0)
        self.marker_names = set(marker_names) if marker_names is not None else {"lightblue", "yellow"}
        self.elements: list[SceneElement] = []
        self._next_id = 1
        self._dirty = False
        self._pending: _PendingPoint | None = None
        self._grab: _Grab | None = None
        self._side_counts = {"left": 0, "right": 0}
        self._next_side = "left"
        self._marker_pos: dict[str, tuple[float, float]] = {}
        self._marker_seen_ms: dict[str, int] = {}
        self._hand_pos: dict[str, tuple[float, float]] = {}
        self.spawned_total = 0
        self.removed_total = 0

    # -- bookkeeping ------------------------------------------------------

    def consume_dirty(self) -> bool:
        dirty, self._dirty = self._dirty, False
        return dirty

    def _element(self, element_id: int) -> SceneElement | None:
        for el in self.elements:
            if el.id == element_id:
                return el
        return None

    def live_triggers(self) -> set[str]:
        return {el.trigger for el in self.elements if el.trigger}

    def next_deadline(self) -> int | None:
        deadlines = [el.expires_ms for el in self.elements if not el.grabbed]
        return min(deadlines) if deadlines else None

    # -- placement ---------------------------------------------------------

    def _auto_place(self) -> Screen2D:
        """Alternate sides of the reserved center band, stepping down."""
        side = self._next_side
        self._next_side = "right" if side == "left" else "left"
        slots = self.config.placement_y_slots()
        y = slots[self._side_counts[side] % len(slots)]
        self._side_counts[side] += 1
        x = self.config.placement_x_left if side == "left" else self.config.placement_x_right
        return Screen2D(x=x, y=y)

    def _take_pending(self, now_ms: int, surface: bool) -> _PendingPoint | None:
        if self._pending is None:
            return None
        if now_ms >= self._pending.set_ms + self.config.pending_point_ttl_ms:
            self._pending = None
            return None
        if self._pending.surface != surface:
            return None
        taken, self._pending = self._pending, None
        return taken

    def set_pending_point(self, x: float, y: float, now_ms: int, surface: bool = False) -> None:
        self._pending = _PendingPoint(x=x, y=y, set_ms=now_ms, surface=surface)

    # -- spawning ----------------------------------------------------------

    def _draw_style(self, kind: str) -> Style:
        text_rgb = tuple(self.rng.randrange(256) for _ in range(3))
        bg_rgb = tuple(self.rng.randrange(256) for _ in range(3))
        alpha = 1.0 if kind == "screen" else self.config.default_alpha
        return Style(text_rgb=text_rgb, bg_rgb=bg_rgb, alpha=alpha)

    def spawn(
        self,
        kind: str,
        content: str,
        anchor: Anchor,
        now_ms: int,
        duration_ms: int,
        show_keyword: bool = False,
        trigger: str = "",
    ) -> int:
        if isinstance(anchor, MarkerAnchor) and anchor.name not in self.marker_names:
            raise UnknownMarker(anchor.name)
        element = SceneElement(
            id=self._next_id,
            kind=kind,
            content=content,
            anchor=anchor,
            created_ms=now_ms,
            expires_ms=now_ms + duration_ms,
            style=self._draw_style(kind),
            show_keyword=show_keyword,
            trigger=trigger,
        )
        self._next_id += 1
        self.elements.append(element)
        self.spawned_total += 1
        self._dirty = True
        return element.id

    def _entry_anchor(self, entry: MappingEntry, now_ms: int) -> Anchor:
        hint = entry.anchor_hint
        if hint.startswith("marker:"):
            return MarkerAnchor(name=hint.split(":", 1)[1])
        if hint.startswith("hand:"):
            return HandAnchor(side=hint.split(":", 1)[1])
        if hint == "surface":
            taken = self._take_pending(now_ms, surface=True)
            if taken is not None:
                return SurfaceAnchor(u=taken.x, v=taken.y)
            return SurfaceAnchor(u=0.5, v=0.5)
        taken = self._take_pending(now_ms, surface=False)
        if taken is not None:
            return Screen2D(x=taken.x, y=taken.y)
        return self._auto_place()

    def process_utterance(
        self,
        utterance: FinalizedUtterance,
        match_result: MatchResult,
        now_ms: int,
        pending_point: tuple[float, float] | None = None,
    ) -> list[int]:
        """Spawn elements for one utterance's match result.

        Matched spans become their visual (plus a keyword card above it when
        show_keyword is set); unmatched spans become plain keyword cards.
        Spawns happen in token order.  A span whose normalized form is
        already live (same trigger) spawns nothing.
        """
        if pending_point is not None:
            self.set_pending_point(pending_point[0], pending_point[1], now_ms)
        by_start: list[tuple[int, KeywordSpan, MappingEntry | None]] = []
        for span, entry in match_result.matched:
            by_start.append((span.token_start, span, entry))
        for span in match_result.unmatched:
            by_start.append((span.token_start, span, None))
        by_start.sort(key=lambda item: item[0])

        created: list[int] = []
        live = self.live_triggers()
        for _, span, entry in by_start:
            if span.normalized in live:
                continue
            live.add(span.normalized)
            if entry is None:
                duration = self.config.keyword_duration_ms
                anchor = self._entry_anchor_for_text(now_ms)
                created.append(
                    self.spawn(
                        KEYWORD_TEXT, span.normalized, anchor, now_ms, duration,
                        trigger=span.normalized,
                    )
                )
                continue
            duration = entry.duration_ms or self.config.visual_duration_ms
            anchor = self._entry_anchor(entry, now_ms)
            visual_id = self.spawn(
                entry.kind, entry.url, anchor, now_ms, duration,
                show_keyword=entry.show_keyword, trigger=span.normalized,
            )
            created.append(visual_id)
            if entry.show_keyword:
                created.append(
                    self.spawn(
                        KEYWORD_TEXT,
                        span.normalized,
                        self._paired_anchor(anchor),
                        now_ms,
                        duration,
                        trigger=span.normalized,
                    )
                )
        return created

    def _entry_anchor_for_text(self, now_ms: int) -> Anchor:
        taken = self._take_pending(now_ms, surface=False)
        if taken is not None:
            return Screen2D(x=taken.x, y=taken.y)
        return self._auto_place()

    def _paired_anchor(self, anchor: Anchor) -> Anchor:
        """The keyword card rides just above its visual, same coordinate frame."""
        dy = self.config.paired_keyword_offset_y
        if isinstance(anchor, Screen2D):
            return Screen2D(x=anchor.x, y=max(0.0, anchor.y - dy))
        if isinstance(anchor, SurfaceAnchor):
            return SurfaceAnchor(u=anchor.u, v=max(0.0, anchor.v - dy))
        return anchor

    # -- templates ----------------------------------------------------------

    def apply_template(self, action: TemplateAction, now_ms: int) -> int:
        duration = self.config.template_duration_ms
        if isinstance(action, Profile):
            for el in list(self.elements):
                if el.kind == PROFILE:
                    self._remove(el)
            return self.spawn(
                PROFILE, action.name, self._entry_anchor_for_text(now_ms), now_ms, duration
            )
        active = None
        for el in self.elements:
            if el.kind == LIST:
                active = el
        line = f"{action.ordinal}. {action.keyword}"
        if active is None:
            return self.spawn(
                LIST, line, self._entry_anchor_for_text(now_ms), now_ms, duration
            )
        active.content = f"{active.content}\n{line}"
        active.expires_ms = now_ms + duration
        self._dirty = True
        return active.id

    # -- aging ---------------------------------------------------------------

    def tick(self, now_ms: int) -> list[int]:
        """Remove everything at or past expiry; grabbed elements wait."""
        removed = [
            el for el in self.elements if el.expires_ms <= now_ms and not el.grabbed
        ]
        for el in removed:
            self._remove(el)
        if self._pending and now_ms >= self._pending.set_ms + self.config.pending_point_ttl_ms:
            self._pending = None
        return [el.id for el in removed]

    def _remove(self, element: SceneElement) -> None:
        self.elements.remove(element)
        self.removed_total += 1
        if self._grab and self._grab.element_id == element.id:
            self._grab = None
        self._dirty = True

    # -- gestures --------------------------------------------------------------

    def _hit_test(self, x: float, y: float, screen_only: bool = True) -> SceneElement | None:
        """Topmost element whose card bounds contain the point."""
        for el in reversed(self.elements):
            if screen_only and not isinstance(el.anchor, Screen2D):
                continue
            ex, ey = self.resolved_position(el)
            if (
                abs(x - ex) <= self.config.hit_half_width * el.scale
                and abs(y - ey) <= self.config.hit_half_height * el.scale
            ):
                return el
        return None

    def apply_gesture(self, event: GestureEvent, now_ms: int) -> None:
        kind = event.kind
        if kind == POINT:
            self.set_pending_point(event.x, event.y, now_ms)
        elif kind in (PINCH_START, TWO_HAND_START):
            el = self._hit_test(event.x, event.y)
            if el is not None:
                prev = self._grabbed_element()
                if prev is not None and prev.id != el.id:
                    # unbracketed start: release the old grab so it can expire
                    prev.grabbed = False
                    prev.expires_ms = max(
                        prev.expires_ms, now_ms + self.config.grab_release_min_life_ms
                    )
                self._grab = _Grab(
                    element_id=el.id, base_scale=el.scale, base_rotation=el.rotation_deg
                )
                el.grabbed = True
                self._dirty = True
        elif kind == PINCH_MOVE:
            el = self._grabbed_element()
            if el is not None:
                el.anchor = Screen2D(
                    x=min(1.0, max(0.0, event.x)), y=min(1.0, max(0.0, event.y))
                )
                self._dirty = True
        elif kind == TWO_HAND_UPDATE:
            el = self._grabbed_element()
            if el is not None:
                el.scale = self._grab.base_scale * event.scale_ratio
                el.rotation_deg = _norm_angle(
                    self._grab.base_rotation + event.rotation_deg
                )
                self._dirty = True
        elif kind in (PINCH_END, TWO_HAND_END):
            el = self._grabbed_element()
            if el is not None:
                el.grabbed = False
                # Manipulated elements deserve a fresh lease on life.
                el.expires_ms = max(
                    el.expires_ms, now_ms + self.config.grab_release_min_life_ms
                )
                self._dirty = True
            self._grab = None
        elif kind == SWIPE:
            el = self._hit_test(event.x, event.y, screen_only=False)
            if el is not None:
                self._remove(el)

    def _grabbed_element(self) -> SceneElement | None:
        if self._grab is None:
            return None
        return self._element(self._grab.element_id)

    # -- anchors in motion -------------------------------------------------------

    def bind_marker(self, element_id: int, marker_name: str) -> None:
        if marker_name not in self.marker_names:
            raise UnknownMarker(marker_name)
        el = self._element(element_id)
        if el is None:
            raise KeyError(f"no element {element_id}")
        el.anchor = MarkerAnchor(name=marker_name)
        self._dirty = True

    def update_marker(self, marker_name: str, centroid: tuple[float, float], now_ms: int) -> None:
        if marker_name not in self.marker_names:
            raise UnknownMarker(marker_name)
        self._marker_pos[marker_name] = centroid
        self._marker_seen_ms[marker_name] = now_ms
        if any(
            isinstance(el.anchor, MarkerAnchor) and el.anchor.name == marker_name
            for el in self.elements
        ):
            self._dirty = True

    def update_hand(self, side: str, center: tuple[float, float]) -> None:
        self._hand_pos[side] = center
        if any(
            isinstance(el.anchor, HandAnchor) and el.anchor.side == side
            for el in self.elements
        ):
            self._dirty = True

    def resolved_position(self, el: SceneElement) -> tuple[float, float]:
        anchor = el.anchor
        if isinstance(anchor, Screen2D):
            return (anchor.x, anchor.y)
        if isinstance(anchor, SurfaceAnchor):
            return (anchor.u, anchor.v)
        if isinstance(anchor, MarkerAnchor):
            pos = self._marker_pos.get(anchor.name)
            if pos is None:
                return (0.5, 0.5)
            return (pos[0], max(0.0, pos[1] - self.config.marker_offset_y))
        pos = self._hand_pos.get(anchor.side)
        return pos if pos is not None else (0.5, 0.5)

    # -- snapshots -------------------------------------------------------------

    def snapshot(self, now_ms: int) -> SceneSnapshot:
        serialized = []
        for el in self.elements:
            x, y = self.resolved_position(el)
            serialized.append(
                {
                    "id": el.id,
                    "kind": el.kind,
                    "content": el.content,
                    "anchor": el.anchor.to_dict(),
                    "x": x,
                    "y": y,
                    "scale": el.scale,
                    "rotation_deg": el.rotation_deg,
                    "created_ms": el.created_ms,
                    "expires_ms": el.expires_ms,
                    "show_keyword": el.show_keyword,
                    "style": el.style.to_dict(),
                    "trigger": el.trigger,
                    "grabbed": el.grabbed,
                }
            )
        return SceneSnapshot(t_ms=now_ms, elements=tuple(serialized))
