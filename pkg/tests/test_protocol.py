import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from talkoverlay import protocol
from talkoverlay.protocol import (
    Outbound,
    ProtocolError,
    canonical_json,
    make_error,
    make_message,
    parse_message,
    validate_envelope,
)


def frame(mtype="TranscriptMsg", payload=None, **over):
    msg = {
        "type": mtype,
        "session_id": "s1",
        "seq": 1,
        "payload": payload if payload is not None else {"text": "hi", "is_final": True},
    }
    msg.update(over)
    return msg


def test_canonical_json_is_stable_and_compact():
    a = canonical_json({"b": 1, "a": [1, 2], "c": "héllo"})
    assert a == '{"a":[1,2],"b":1,"c":"héllo"}'
    assert canonical_json({"a": [1, 2], "c": "héllo", "b": 1}) == a


def test_parse_round_trip():
    msg = frame()
    assert parse_message(json.dumps(msg)) == msg


def test_parse_rejects_non_json():
    with pytest.raises(ProtocolError) as exc:
        parse_message("{nope")
    assert exc.value.code == "parse"


def test_parse_rejects_non_object():
    for raw in ("[1,2]", '"hello"', "42", "null"):
        with pytest.raises(ProtocolError) as exc:
            parse_message(raw)
        assert exc.value.code == "parse"


def test_unknown_type_rejected():
    with pytest.raises(ProtocolError) as exc:
        validate_envelope(frame(mtype="SelfDestruct"))
    assert exc.value.code == "type"


def test_server_types_not_accepted_inbound():
    for mtype in ("SceneUpdate", "GestureDebug", "Error"):
        with pytest.raises(ProtocolError) as exc:
            validate_envelope(frame(mtype=mtype))
        assert exc.value.code == "type"


def test_session_id_required():
    for bad in ("", None, 7):
        with pytest.raises(ProtocolError) as exc:
            validate_envelope(frame(session_id=bad))
        assert exc.value.code == "session"


def test_seq_must_be_nonnegative_int():
    for bad in (-1, 1.5, "3", None, True):
        with pytest.raises(ProtocolError) as exc:
            validate_envelope(frame(seq=bad))
        assert exc.value.code == "seq"
    assert validate_envelope(frame(seq=0))["seq"] == 0


def test_missing_payload_defaults_to_empty():
    msg = validate_envelope(
        {"type": "ClientHello", "session_id": "s1", "seq": 0}
    )
    assert msg["payload"] == {}


def test_payload_must_be_object():
    with pytest.raises(ProtocolError) as exc:
        validate_envelope(frame(payload=[1, 2]))
    assert exc.value.code == "payload"


def test_hello_roles():
    validate_envelope(frame("ClientHello", {"role": "viewer"}, seq=0))
    validate_envelope(frame("ClientHello", {}, seq=0))  # defaults to presenter
    with pytest.raises(ProtocolError):
        validate_envelope(frame("ClientHello", {"role": "admin"}, seq=0))


def test_transcript_payload_validation():
    with pytest.raises(ProtocolError):
        validate_envelope(frame(payload={"text": "hi"}))
    with pytest.raises(ProtocolError):
        validate_envelope(frame(payload={"text": 3, "is_final": True}))
    with pytest.raises(ProtocolError):
        validate_envelope(frame(payload={"text": "hi", "is_final": "yes"}))


def _landmarks():
    return [[0.1, 0.2, 0.0] for _ in range(21)]


def test_hand_frame_payload_validation():
    good = {"side": "left", "landmarks": _landmarks()}
    validate_envelope(frame("HandFrameMsg", good))
    for mutate in (
        lambda p: p.update(side="middle"),
        lambda p: p.update(landmarks=p["landmarks"][:20]),
        lambda p: p["landmarks"].__setitem__(3, [0.1, 0.2]),
        lambda p: p["landmarks"].__setitem__(3, [0.1, 0.2, "z"]),
        lambda p: p["landmarks"].__setitem__(3, [0.1, 0.2, True]),
    ):
        payload = {"side": "left", "landmarks": _landmarks()}
        mutate(payload)
        with pytest.raises(ProtocolError):
            validate_envelope(frame("HandFrameMsg", payload))


def test_frame_payload_validation():
    good = {"width": 4, "height": 2, "pixels_b64": "AAAA"}
    validate_envelope(frame("FrameMsg", good))
    for bad in (
        {"width": 0, "height": 2, "pixels_b64": "AAAA"},
        {"width": 4, "height": -1, "pixels_b64": "AAAA"},
        {"width": "4", "height": 2, "pixels_b64": "AAAA"},
        {"width": 4, "height": 2},
        {"width": 4, "height": 2, "pixels_b64": 9},
    ):
        with pytest.raises(ProtocolError):
            validate_envelope(frame("FrameMsg", bad))


def test_mapping_update_payload_validation():
    good = {"op": "upsert", "entry": {"keyword": "hiv virus", "kind": "image"}}
    validate_envelope(frame("MappingUpdate", good))
    validate_envelope(frame("MappingUpdate", {"op": "delete", "entry": {"keyword": "x"}}))
    for bad in (
        {"op": "replace", "entry": {"keyword": "x"}},
        {"op": "upsert", "entry": "x"},
        {"op": "upsert", "entry": {"keyword": "  "}},
        {"op": "upsert", "entry": {}},
    ):
        with pytest.raises(ProtocolError):
            validate_envelope(frame("MappingUpdate", bad))


def test_point_hint_payload_validation():
    validate_envelope(frame("PointHint", {"x": 0.5, "y": 1}))
    validate_envelope(frame("PointHint", {"x": 0, "y": 0.25, "surface": True}))
    for bad in (
        {"x": 1.5, "y": 0.5},
        {"x": 0.5, "y": -0.1},
        {"x": "mid", "y": 0.5},
        {"x": True, "y": 0.5},
        {"y": 0.5},
        {"x": 0.5, "y": 0.5, "surface": "yes"},
    ):
        with pytest.raises(ProtocolError):
            validate_envelope(frame("PointHint", bad))


def test_make_error_shape():
    msg = make_error("s1", 4, "seq", "went backwards")
    assert msg == {
        "type": "Error",
        "session_id": "s1",
        "seq": 4,
        "payload": {"code": "seq", "detail": "went backwards"},
    }


def test_make_message():
    msg = make_message("SceneUpdate", "s1", 0, {"elements": []})
    assert msg["type"] == "SceneUpdate" and msg["seq"] == 0


def test_outbound_scope_checked():
    Outbound("reply", {})
    Outbound("broadcast", {})
    with pytest.raises(ValueError):
        Outbound("multicast", {})


def test_type_constants_cover_wire_surface():
    assert set(protocol.INBOUND_TYPES) & set(protocol.OUTBOUND_TYPES) == {"MappingUpdate"}
    assert len(protocol.INBOUND_TYPES) == 6 and len(protocol.OUTBOUND_TYPES) == 4


_json_scalars = st.one_of(
    st.none(), st.booleans(), st.integers(), st.floats(allow_nan=False), st.text()
)


@given(
    st.recursive(
        _json_scalars,
        lambda kids: st.lists(kids, max_size=4)
        | st.dictionaries(st.text(max_size=8), kids, max_size=4),
        max_leaves=20,
    )
)
def test_canonical_json_round_trips(value):
    assert json.loads(canonical_json(value)) == value


@given(st.text(max_size=200))
def test_parse_never_raises_anything_else(raw):
    try:
        parse_message(raw)
    except ProtocolError:
        pass
