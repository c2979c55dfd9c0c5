"""Wire protocol: message envelopes, payload validation, canonical JSON.

Every frame on the wire is a JSON object {type, session_id, seq, payload}.
Inbound t_ms values inside payloads are advisory; the server stamps its own
session clock on arrival and that stamp is what traces record, so live and
replayed runs execute the same code path with the same timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

CLIENT_HELLO = "ClientHello"
TRANSCRIPT_MSG = "TranscriptMsg"
HAND_FRAME_MSG = "HandFrameMsg"
FRAME_MSG = "FrameMsg"
MAPPING_UPDATE = "MappingUpdate"
POINT_HINT = "PointHint"
SCENE_UPDATE = "SceneUpdate"
GESTURE_DEBUG = "GestureDebug"
ERROR = "Error"

INBOUND_TYPES = (CLIENT_HELLO, TRANSCRIPT_MSG, HAND_FRAME_MSG, FRAME_MSG, MAPPING_UPDATE, POINT_HINT)
OUTBOUND_TYPES = (SCENE_UPDATE, GESTURE_DEBUG, MAPPING_UPDATE, ERROR)


class ProtocolError(Exception):
    """Message rejected; code becomes the Error payload's code field."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


def canonical_json(obj) -> str:
    """Stable serialization used for golden files and broadcasts."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def parse_message(raw: str) -> dict:
    """Parse and structurally validate one inbound frame."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError("parse", f"invalid JSON: {exc.msg}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("parse", "frame must be a JSON object")
    return validate_envelope(msg)


def validate_envelope(msg: dict) -> dict:
    mtype = msg.get("type")
    if mtype not in INBOUND_TYPES:
        raise ProtocolError("type", f"unknown or non-client type {mtype!r}")
    session_id = msg.get("session_id")
    if not isinstance(session_id, str) or not session_id:
        raise ProtocolError("session", "session_id must be a non-empty string")
    seq = msg.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ProtocolError("seq", "seq must be a non-negative integer")
    payload = msg.get("payload")
    if payload is None:
        payload = {}
    if not isinstance(payload, dict):
        raise ProtocolError("payload", "payload must be a JSON object")
    _VALIDATORS[mtype](payload)
    return {"type": mtype, "session_id": session_id, "seq": seq, "payload": payload}


def _require(payload: dict, key: str, kinds, what: str):
    value = payload.get(key)
    if isinstance(value, bool) and bool not in (
        kinds if isinstance(kinds, tuple) else (kinds,)
    ):
        raise ProtocolError("payload", f"{what}: '{key}' has the wrong type")
    if not isinstance(value, kinds):
        raise ProtocolError("payload", f"{what}: '{key}' missing or wrong type")
    return value


def _validate_hello(payload: dict) -> None:
    role = payload.get("role", "presenter")
    if role not in ("presenter", "viewer"):
        raise ProtocolError("payload", f"ClientHello: bad role {role!r}")


def _validate_transcript(payload: dict) -> None:
    _require(payload, "text", str, "TranscriptMsg")
    _require(payload, "is_final", bool, "TranscriptMsg")


def _validate_hand_frame(payload: dict) -> None:
    side = payload.get("side")
    if side not in ("left", "right"):
        raise ProtocolError("payload", f"HandFrameMsg: bad side {side!r}")
    landmarks = payload.get("landmarks")
    if not isinstance(landmarks, list) or len(landmarks) != 21:
        raise ProtocolError("payload", "HandFrameMsg: landmarks must be a list of 21 points")
    for p in landmarks:
        if (
            not isinstance(p, list)
            or len(p) != 3
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        ):
            raise ProtocolError("payload", "HandFrameMsg: each landmark is [x, y, z]")


def _validate_frame(payload: dict) -> None:
    width = _require(payload, "width", int, "FrameMsg")
    height = _require(payload, "height", int, "FrameMsg")
    if width < 1 or height < 1:
        raise ProtocolError("payload", "FrameMsg: width/height must be positive")
    _require(payload, "pixels_b64", str, "FrameMsg")


def _validate_mapping_update(payload: dict) -> None:
    op = payload.get("op")
    if op not in ("upsert", "delete"):
        raise ProtocolError("payload", f"MappingUpdate: bad op {op!r}")
    entry = payload.get("entry")
    if not isinstance(entry, dict):
        raise ProtocolError("payload", "MappingUpdate: 'entry' must be an object")
    keyword = entry.get("keyword")
    if not isinstance(keyword, str) or not keyword.strip():
        raise ProtocolError("payload", "MappingUpdate: entry.keyword must be a non-empty string")


def _validate_point_hint(payload: dict) -> None:
    for key in ("x", "y"):
        value = payload.get(key)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError("payload", f"PointHint: '{key}' must be a number")
        if not 0.0 <= float(value) <= 1.0:
            raise ProtocolError("payload", f"PointHint: '{key}' must be in [0, 1]")
    surface = payload.get("surface", False)
    if not isinstance(surface, bool):
        raise ProtocolError("payload", "PointHint: 'surface' must be a boolean")


_VALIDATORS = {
    CLIENT_HELLO: _validate_hello,
    TRANSCRIPT_MSG: _validate_transcript,
    HAND_FRAME_MSG: _validate_hand_frame,
    FRAME_MSG: _validate_frame,
    MAPPING_UPDATE: _validate_mapping_update,
    POINT_HINT: _validate_point_hint,
}


@dataclass(frozen=True)
class Outbound:
    """An outbound message plus who should get it."""

    scope: str  # "reply" or "broadcast"
    message: dict

    def __post_init__(self):
        if self.scope not in ("reply", "broadcast"):
            raise ValueError(f"bad scope {self.scope!r}")


def make_message(mtype: str, session_id: str, seq: int, payload: dict) -> dict:
    return {"type": mtype, "session_id": session_id, "seq": seq, "payload": payload}


def make_error(session_id: str, seq: int, code: str, detail: str) -> dict:
    return make_message(ERROR, session_id, seq, {"code": code, "detail": detail})
