import base64

import pytest

from talkoverlay.protocol import canonical_json
from talkoverlay.session import SessionEngine, _percentile


def msg(mtype, seq, payload, session="s1"):
    return {"type": mtype, "session_id": session, "seq": seq, "payload": payload}


def transcript(seq, text, final=True):
    return msg("TranscriptMsg", seq, {"text": text, "is_final": final})


def hello(session="s1"):
    return msg("ClientHello", 0, {"role": "presenter"}, session)


_FINGER_X = (0.30, 0.42, 0.50, 0.58, 0.66)


def landmarks(dx=0.0, dy=0.0, pinch=False):
    """Open right-hand skeleton; optionally with thumb touching index tip."""
    pts = [[0.50 + dx, 0.80 + dy, 0.0] for _ in range(21)]
    for f, (joint, tip) in enumerate(((3, 4), (6, 8), (10, 12), (14, 16), (18, 20))):
        pts[joint] = [_FINGER_X[f] + dx, 0.55 + dy, 0.0]
        pts[tip] = [_FINGER_X[f] + dx, 0.30 + dy, 0.0]
    if pinch:
        pts[4] = [0.42 + dx, 0.30 + dy, 0.0]
    return pts


def center_of(pts):
    return (
        sum(p[0] for p in pts) / len(pts),
        sum(p[1] for p in pts) / len(pts),
    )


def yellow_frame(width=20, height=20, x0=4, y0=4, size=10):
    pixels = bytearray(width * height * 3)
    for y in range(y0, y0 + size):
        for x in range(x0, x0 + size):
            i = (y * width + x) * 3
            pixels[i : i + 3] = bytes((255, 220, 40))
    return {
        "width": width,
        "height": height,
        "pixels_b64": base64.b64encode(bytes(pixels)).decode(),
    }


@pytest.fixture()
def eng():
    return SessionEngine("s1", seed=7)


def only(outs, scope=None):
    assert len(outs) == 1, outs
    if scope:
        assert outs[0].scope == scope
    return outs[0].message


def test_percentile_nearest_rank():
    assert _percentile([], 0.95) == 0.0
    assert _percentile([5.0], 0.95) == 5.0
    data = [float(v) for v in range(1, 101)]
    assert _percentile(data, 0.50) == 50.0
    assert _percentile(data, 0.95) == 95.0


def test_hello_gets_snapshot_without_seq_bump(eng):
    reply = only(eng.handle_inbound(hello(), now_ms=0), "reply")
    assert reply["type"] == "SceneUpdate" and reply["seq"] == 0
    assert reply["payload"] == {"t_ms": 0, "elements": []}
    assert eng.scene_seq() == 0


def test_hello_after_activity_echoes_current_seq(eng):
    eng.handle_inbound(transcript(1, "the camera is great"), now_ms=100)
    assert eng.scene_seq() == 1
    reply = only(eng.handle_inbound(hello(), now_ms=200), "reply")
    assert reply["seq"] == 1
    assert len(reply["payload"]["elements"]) == 1
    # a later change continues the stream gap-free
    update = only(eng.handle_inbound(transcript(2, "a new backpack"), now_ms=300))
    assert update["seq"] == 2


def test_session_mismatch_is_an_error(eng):
    out = only(eng.handle_inbound(transcript(1, "hello", final=True) | {"session_id": "other"}, 0), "reply")
    assert out["type"] == "Error" and out["payload"]["code"] == "session"


def test_seq_violations_rejected_without_poisoning(eng):
    eng.handle_inbound(transcript(5, "the camera is great"), now_ms=0)
    dup = only(eng.handle_inbound(transcript(5, "a backpack"), now_ms=10), "reply")
    assert dup["type"] == "Error" and dup["payload"]["code"] == "seq"
    old = only(eng.handle_inbound(transcript(4, "a backpack"), now_ms=20), "reply")
    assert old["payload"]["code"] == "seq"
    assert eng.counters.seq_errors == 2
    ok = only(eng.handle_inbound(transcript(6, "a nice backpack"), now_ms=30), "broadcast")
    assert ok["type"] == "SceneUpdate"


def test_final_transcript_broadcasts_scene_update(eng):
    update = only(eng.handle_inbound(transcript(1, "the camera is great"), 1000), "broadcast")
    assert update["type"] == "SceneUpdate" and update["seq"] == 1
    (el,) = update["payload"]["elements"]
    assert el["kind"] == "keyword_text" and el["content"] == "camera"
    assert el["created_ms"] == 1000 and el["expires_ms"] == 5000


def test_interim_transcript_emits_nothing(eng):
    assert eng.handle_inbound(transcript(1, "the cam", final=False), 0) == []
    update = only(eng.handle_inbound(transcript(2, "the camera is great"), 900))
    (el,) = update["payload"]["elements"]
    assert el["content"] == "camera"


def test_template_utterance_is_consumed_whole(eng):
    update = only(eng.handle_inbound(transcript(1, "Hi, my name is John Smith"), 0))
    (el,) = update["payload"]["elements"]
    assert el["kind"] == "profile" and el["content"] == "John Smith"
    assert eng.counters.utterances == 1


def test_mapping_upsert_echo_and_match(eng):
    up = msg(
        "MappingUpdate",
        1,
        {"op": "upsert", "entry": {"keyword": "HIV virus", "kind": "image", "url": "https://img.example.org/v.png"}},
    )
    echo = only(eng.handle_inbound(up, 0), "broadcast")
    assert echo["type"] == "MappingUpdate" and echo["seq"] == 1
    assert echo["payload"]["entry"] == {
        "keyword": "hiv virus",
        "kind": "image",
        "url": "https://img.example.org/v.png",
        "duration_ms": None,
        "show_keyword": False,
        "anchor_hint": "front2d",
    }
    update = only(eng.handle_inbound(transcript(2, "the HIV virus spreads"), 100))
    (el,) = update["payload"]["elements"]
    assert el["kind"] == "image" and el["expires_ms"] == 10100


def test_mapping_delete_echo(eng):
    eng.handle_inbound(
        msg("MappingUpdate", 1, {"op": "upsert", "entry": {"keyword": "camera", "kind": "icon", "url": "x:y"}}),
        0,
    )
    echo = only(
        eng.handle_inbound(msg("MappingUpdate", 2, {"op": "delete", "entry": {"keyword": "camera"}}), 10),
        "broadcast",
    )
    assert echo["payload"] == {"op": "delete", "entry": {"keyword": "camera"}}
    assert echo["seq"] == 2  # mapping stream has its own numbering


def test_mapping_rejects_bad_entry(eng):
    bad = msg(
        "MappingUpdate",
        1,
        {"op": "upsert", "entry": {"keyword": "camera", "kind": "image", "url": "https://x/y.png", "duration_ms": -5}},
    )
    out = only(eng.handle_inbound(bad, 0), "reply")
    assert out["type"] == "Error" and out["payload"]["code"] == "mapping"
    assert eng.counters.mapping_errors == 1


def test_mapping_rejects_unknown_marker_anchor(eng):
    bad = msg(
        "MappingUpdate",
        1,
        {"op": "upsert", "entry": {"keyword": "logo", "kind": "image", "url": "https://x/y.png", "anchor_hint": "marker:beige"}},
    )
    out = only(eng.handle_inbound(bad, 0), "reply")
    assert out["payload"]["code"] == "anchor"


def test_point_hint_feeds_next_spawn(eng):
    assert eng.handle_inbound(msg("PointHint", 1, {"x": 0.9, "y": 0.2}), 0) == []
    update = only(eng.handle_inbound(transcript(2, "the camera is great"), 500))
    (el,) = update["payload"]["elements"]
    assert (el["x"], el["y"]) == (0.9, 0.2)


def test_hand_frame_moves_hand_anchored_element(eng):
    out = eng.handle_inbound(
        msg(
            "MappingUpdate",
            1,
            {"op": "upsert", "entry": {"keyword": "notes", "kind": "icon", "url": "https://x/n.png", "anchor_hint": "hand:left"}},
        ),
        0,
    )
    assert out[0].message["type"] == "MappingUpdate"
    eng.handle_inbound(transcript(2, "my notes are here"), 100)
    pts = landmarks(dx=-0.2, dy=0.1)
    frame = msg("HandFrameMsg", 3, {"side": "left", "landmarks": pts})
    update = only(eng.handle_inbound(frame, 200), "broadcast")
    (el,) = update["payload"]["elements"]
    assert el["anchor"] == {"type": "hand", "side": "left"}
    assert (el["x"], el["y"]) == pytest.approx(center_of(pts))


def test_stale_hand_frames_are_counted_not_fatal(eng):
    frame = msg("HandFrameMsg", 1, {"side": "left", "landmarks": landmarks()})
    eng.handle_inbound(frame, 100)
    assert eng.handle_inbound(frame | {"seq": 2}, 100) == []  # same stamp: stale
    assert eng.counters.stale_frames == 1
    eng.handle_inbound(frame | {"seq": 3}, 116)
    assert eng.counters.stale_frames == 1


def test_frame_moves_marker_anchored_element(eng):
    eng.handle_inbound(
        msg(
            "MappingUpdate",
            1,
            {"op": "upsert", "entry": {"keyword": "logo", "kind": "image", "url": "https://x/l.png", "anchor_hint": "marker:yellow"}},
        ),
        0,
    )
    eng.handle_inbound(transcript(2, "our logo is new"), 100)
    update = only(eng.handle_inbound(msg("FrameMsg", 3, yellow_frame()), 200), "broadcast")
    (el,) = update["payload"]["elements"]
    assert el["x"] == pytest.approx(8.5 / 20)  # mean blob column over width
    assert el["y"] == pytest.approx(8.5 / 20 - 0.10)  # rides above the marker
    assert eng.counters.frames == 1


def test_frame_without_marker_stays_quiet(eng):
    assert eng.handle_inbound(msg("FrameMsg", 1, yellow_frame()), 0) == []


def test_bad_frame_payload_is_an_error(eng):
    bad = {"width": 20, "height": 20, "pixels_b64": "not base64!!"}
    out = only(eng.handle_inbound(msg("FrameMsg", 1, bad), 0), "reply")
    assert out["payload"]["code"] == "frame"
    short = {"width": 20, "height": 20, "pixels_b64": base64.b64encode(b"\x00" * 30).decode()}
    out = only(eng.handle_inbound(msg("FrameMsg", 2, short), 10), "reply")
    assert out["payload"]["code"] == "frame"


def test_idle_tick_broadcasts_expiry_once(eng):
    eng.handle_inbound(transcript(1, "the camera is great"), 0)
    assert eng.idle_tick(3999) == []
    update = only(eng.idle_tick(4000), "broadcast")
    assert update["payload"]["elements"] == []
    assert eng.idle_tick(4001) == []


def test_gesture_debug_stream():
    quiet = SessionEngine("s1", seed=7)
    noisy = SessionEngine("s1", seed=7, debug_gestures=True)
    frames = [
        msg("HandFrameMsg", 1, {"side": "right", "landmarks": landmarks()}),
        msg("HandFrameMsg", 2, {"side": "right", "landmarks": landmarks(pinch=True)}),
    ]
    assert quiet.handle_inbound(frames[0], 0) == []
    assert quiet.handle_inbound(frames[1], 50) == []  # pinch hits empty space
    assert noisy.handle_inbound(frames[0], 0) == []
    out = only(noisy.handle_inbound(frames[1], 50), "broadcast")
    assert out["type"] == "GestureDebug" and out["seq"] == 1
    assert out["payload"]["kind"] == "PinchStart"
    assert out["payload"]["side"] == "right"


def test_metrics_shape(eng):
    eng.handle_inbound(transcript(1, "the camera is great"), 0)
    eng.handle_inbound(transcript(1, "dup"), 1)
    m = eng.metrics()
    assert m["session_id"] == "s1"
    assert m["transcripts"] == 1 and m["utterances"] == 1
    assert m["seq_errors"] == 1
    assert m["elements_live"] == 1 and m["elements_spawned"] == 1
    assert m["transcript_latency_p95_ms"] > 0.0
    assert m["transcript_latency_max_ms"] >= m["transcript_latency_p50_ms"]


def test_same_seed_same_bytes():
    script = [
        (hello(), 0),
        (transcript(1, "the camera and the backpack"), 50),
        (msg("PointHint", 2, {"x": 0.8, "y": 0.7}), 60),
        (transcript(3, "a shiny new tripod"), 90),
    ]
    runs = []
    for _ in range(2):
        eng = SessionEngine("s1", seed=99)
        lines = []
        for message, now in script:
            for out in eng.handle_inbound(message, now):
                lines.append(canonical_json(out.message))
            for out in eng.idle_tick(now + 10):
                lines.append(canonical_json(out.message))
        runs.append("\n".join(lines))
    assert runs[0] == runs[1]
    assert "SceneUpdate" in runs[0]
