"""Per-session pipeline: one engine owns one scene and all its stages.

The engine is synchronous and clock-free: every entry point takes the
caller's notion of now (live server: monotonic session clock; replay: the
trace timestamp).  That is the whole determinism story: hand the engine
the same messages with the same stamps and the same seed, and it produces
byte-identical scene updates.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

from . import protocol
from .config import AppConfig
from .gestures import GestureClassifier, HandFrame, StaleFrame
from .keywords import KeywordExtractor
from .mapping import (
    InvalidDuration,
    InvalidUrl,
    MappingRegistry,
    ParseError,
    suggest_visuals,
)
from .markers import BadFrame, ColorMarkerSpec, FrameBuffer, detect
from .protocol import Outbound
from .scene import SceneEngine, TemplateDetector, UnknownMarker
from .transcripts import OutOfOrderEvent, TranscriptEvent, TranscriptIngestor


def _percentile(samples: list[float], q: float) -> float:
    """Nearest-rank percentile; q in [0, 1]."""
    if not samples:
        return 0.0
    ordered = sorted(samples)
    rank = min(len(ordered), max(1, math.ceil(q * len(ordered))))
    return ordered[rank - 1]


@dataclass
class SessionCounters:
    transcripts: int = 0
    utterances: int = 0
    empty_finals: int = 0
    out_of_order: int = 0
    stale_frames: int = 0
    frames: int = 0
    seq_errors: int = 0
    mapping_errors: int = 0


class SessionEngine:
    """Serialized message handler for one session.

    Not thread-safe by design: the server funnels each session through its
    own lock, replay is single-threaded anyway.
    """

    def __init__(
        self,
        session_id: str,
        config: AppConfig | None = None,
        registry: MappingRegistry | None = None,
        seed: int = 1,
        debug_gestures: bool = False,
        extractor: KeywordExtractor | None = None,
    ):
        self.session_id = session_id
        self.config = config if config is not None else AppConfig()
        self.registry = registry if registry is not None else MappingRegistry()
        self.seed = seed
        self.debug_gestures = debug_gestures
        self.extractor = extractor if extractor is not None else KeywordExtractor()
        self.specs = [ColorMarkerSpec.from_dict(d) for d in self.config.marker_specs]
        self.scene = SceneEngine(
            config=self.config.engine,
            rng=random.Random(seed),
            marker_names={s.name for s in self.specs},
        )
        self.templates = TemplateDetector(self.extractor)
        self.classifier = GestureClassifier(self.config.gesture)
        self.ingestor = TranscriptIngestor()
        self.counters = SessionCounters()
        self.latency_ms: list[float] = []
        self._last_seq = -1
        self._scene_seq = 0
        self._debug_seq = 0
        self._mapping_seq = 0

    # -- outbound builders -------------------------------------------------

    def _scene_update(self, now_ms: int, bump: bool = True) -> dict:
        if bump:
            self._scene_seq += 1
        return protocol.make_message(
            protocol.SCENE_UPDATE,
            self.session_id,
            self._scene_seq,
            self.scene.snapshot(now_ms).to_payload(),
        )

    def _error(self, code: str, detail: str) -> Outbound:
        # seq 0: error numbering is per-connection and stamped by the server.
        return Outbound("reply", protocol.make_error(self.session_id, 0, code, detail))

    # -- entry points --------------------------------------------------------

    def idle_tick(self, now_ms: int) -> list[Outbound]:
        """Housekeeping tick between messages; emits an update on expiry."""
        self.scene.tick(now_ms)
        if self.scene.consume_dirty():
            return [Outbound("broadcast", self._scene_update(now_ms))]
        return []

    def handle_inbound(self, msg: dict, now_ms: int) -> list[Outbound]:
        if msg.get("session_id") != self.session_id:
            return [self._error("session", "message for a different session")]
        mtype = msg["type"]
        if mtype == protocol.CLIENT_HELLO:
            # Snapshot resend: echoes the current seq rather than minting a
            # new one, so joining never creates gaps for other clients.
            return [Outbound("reply", self._scene_update(now_ms, bump=False))]

        seq = msg["seq"]
        if seq <= self._last_seq:
            self.counters.seq_errors += 1
            return [self._error("seq", f"seq {seq} not above {self._last_seq}")]
        self._last_seq = seq

        self.scene.tick(now_ms)
        out: list[Outbound] = []
        handler = {
            protocol.TRANSCRIPT_MSG: self._on_transcript,
            protocol.HAND_FRAME_MSG: self._on_hand_frame,
            protocol.FRAME_MSG: self._on_frame,
            protocol.MAPPING_UPDATE: self._on_mapping_update,
            protocol.POINT_HINT: self._on_point_hint,
        }[mtype]
        out.extend(handler(msg, now_ms))
        if self.scene.consume_dirty():
            out.append(Outbound("broadcast", self._scene_update(now_ms)))
        return out

    # -- per-type handlers -----------------------------------------------------

    def _on_transcript(self, msg: dict, now_ms: int) -> list[Outbound]:
        started = time.perf_counter()
        payload = msg["payload"]
        event = TranscriptEvent(
            session_id=self.session_id,
            seq=msg["seq"],
            text=payload["text"],
            is_final=payload["is_final"],
            t_ms=now_ms,
        )
        self.counters.transcripts += 1
        try:
            utterances = self.ingestor.ingest(event)
        except OutOfOrderEvent:
            self.counters.out_of_order += 1
            return [self._error("seq", "transcript out of order")]
        self.counters.empty_finals = self.ingestor.empty_final_count(self.session_id)
        for utterance in utterances:
            self.counters.utterances += 1
            action = self.templates.detect(utterance.text)
            if action is not None:
                # Template utterances are consumed whole; no keyword spawns.
                self.scene.apply_template(action, now_ms)
                continue
            spans = self.extractor.extract(utterance.text)
            result = self.registry.match(spans)
            self.scene.process_utterance(utterance, result, now_ms)
        if payload["is_final"]:
            self.latency_ms.append((time.perf_counter() - started) * 1000.0)
        return []

    def _on_hand_frame(self, msg: dict, now_ms: int) -> list[Outbound]:
        payload = msg["payload"]
        frame = HandFrame(
            side=payload["side"],
            t_ms=now_ms,
            landmarks=tuple(tuple(p) for p in payload["landmarks"]),
        )
        try:
            events = self.classifier.feed(frame)
        except StaleFrame:
            self.counters.stale_frames += 1
            return []
        n = len(frame.landmarks)
        center = (
            sum(p[0] for p in frame.landmarks) / n,
            sum(p[1] for p in frame.landmarks) / n,
        )
        self.scene.update_hand(frame.side, center)
        out: list[Outbound] = []
        for event in events:
            self.scene.apply_gesture(event, now_ms)
            if self.debug_gestures:
                self._debug_seq += 1
                out.append(
                    Outbound(
                        "broadcast",
                        protocol.make_message(
                            protocol.GESTURE_DEBUG,
                            self.session_id,
                            self._debug_seq,
                            event.to_payload(),
                        ),
                    )
                )
        return out

    def _on_frame(self, msg: dict, now_ms: int) -> list[Outbound]:
        payload = msg["payload"]
        try:
            frame = FrameBuffer.from_base64(
                payload["width"], payload["height"], payload["pixels_b64"]
            )
        except BadFrame as exc:
            return [self._error("frame", str(exc))]
        self.counters.frames += 1
        for detection in detect(frame, self.specs):
            self.scene.update_marker(detection.name, detection.centroid, now_ms)
        return []

    def _on_mapping_update(self, msg: dict, now_ms: int) -> list[Outbound]:
        payload = msg["payload"]
        op = payload["op"]
        entry_fields = payload["entry"]
        try:
            if op == "upsert":
                entry = MappingRegistry.entry_from_fields(entry_fields, where="MappingUpdate")
                if entry.anchor_hint.startswith("marker:"):
                    name = entry.anchor_hint.split(":", 1)[1]
                    if name not in self.scene.marker_names:
                        raise UnknownMarker(name)
                self.registry.upsert(entry)
                echo_entry = {
                    "keyword": entry.keyword_norm,
                    "kind": entry.kind,
                    "url": entry.url,
                    "duration_ms": entry.duration_ms,
                    "show_keyword": entry.show_keyword,
                    "anchor_hint": entry.anchor_hint,
                }
            else:
                self.registry.delete(entry_fields["keyword"])
                echo_entry = {"keyword": entry_fields["keyword"]}
        except (ParseError, InvalidUrl, InvalidDuration) as exc:
            self.counters.mapping_errors += 1
            return [self._error("mapping", str(exc))]
        except UnknownMarker as exc:
            self.counters.mapping_errors += 1
            return [self._error("anchor", f"unknown marker {exc}")]
        self._mapping_seq += 1
        return [
            Outbound(
                "broadcast",
                protocol.make_message(
                    protocol.MAPPING_UPDATE,
                    self.session_id,
                    self._mapping_seq,
                    {"op": op, "entry": echo_entry},
                ),
            )
        ]

    def _on_point_hint(self, msg: dict, now_ms: int) -> list[Outbound]:
        payload = msg["payload"]
        self.scene.set_pending_point(
            float(payload["x"]),
            float(payload["y"]),
            now_ms,
            surface=payload.get("surface", False),
        )
        return []

    # -- introspection ------------------------------------------------------------

    def suggest(self, keyword: str, provider) -> list[str]:
        limit = self.config.flat["server.max_suggestions"]
        return suggest_visuals(keyword, provider, limit=limit)

    def scene_seq(self) -> int:
        return self._scene_seq

    def metrics(self) -> dict:
        return {
            "session_id": self.session_id,
            "transcripts": self.counters.transcripts,
            "utterances": self.counters.utterances,
            "empty_finals": self.counters.empty_finals,
            "out_of_order": self.counters.out_of_order,
            "stale_frames": self.counters.stale_frames,
            "frames": self.counters.frames,
            "seq_errors": self.counters.seq_errors,
            "mapping_errors": self.counters.mapping_errors,
            "elements_live": len(self.scene.elements),
            "elements_spawned": self.scene.spawned_total,
            "elements_removed": self.scene.removed_total,
            "transcript_latency_p50_ms": _percentile(self.latency_ms, 0.50),
            "transcript_latency_p95_ms": _percentile(self.latency_ms, 0.95),
            "transcript_latency_max_ms": max(self.latency_ms, default=0.0),
        }
