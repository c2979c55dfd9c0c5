"""Builds the golden traces and their frozen replay timelines.

Run from the repo root:

    python3 tests/golden/make_traces.py

Both the .trace.jsonl inputs and the .expected.jsonl outputs are committed;
tests compare against them byte for byte and never regenerate.  Rerun this
script only for a deliberate behavior change, and review the diff.
"""

import base64
from pathlib import Path

from talkoverlay.protocol import canonical_json
from talkoverlay.replay import replay

HERE = Path(__file__).parent

FINGER_X = (0.30, 0.42, 0.50, 0.58, 0.66)
FINGER_JOINTS = ((3, 4), (6, 8), (10, 12), (14, 16), (18, 20))


def skeleton(dx=0.0, dy=0.0, fingers="uuuuu", pinch_at=None):
    """Hand landmarks: wrist plus five fingers, "u"p or "c"urled.

    pinch_at puts both the thumb and index tips on one spot, which is the
    classifier's pinch midpoint.
    """
    pts = [[round(0.50 + dx, 6), round(0.80 + dy, 6), 0.0] for _ in range(21)]
    for f, (joint, tip) in enumerate(FINGER_JOINTS):
        tip_y = 0.30 if fingers[f] == "u" else 0.70
        pts[joint] = [round(FINGER_X[f] + dx, 6), round(0.55 + dy, 6), 0.0]
        pts[tip] = [round(FINGER_X[f] + dx, 6), round(tip_y + dy, 6), 0.0]
    if pinch_at is not None:
        px, py = pinch_at
        pts[4] = [round(px, 6), round(py, 6), 0.0]
        pts[8] = [round(px, 6), round(py, 6), 0.0]
    return pts


def yellow_blob(x0, y0, size=10, width=20, height=20):
    pixels = bytearray(width * height * 3)
    for y in range(y0, y0 + size):
        for x in range(x0, x0 + size):
            i = (y * width + x) * 3
            pixels[i : i + 3] = bytes((255, 220, 40))
    return {
        "width": width,
        "height": height,
        "pixels_b64": base64.b64encode(bytes(pixels)).decode("ascii"),
    }


def ev(t_ms, mtype, seq, payload, session="golden"):
    return {
        "type": mtype,
        "session_id": session,
        "seq": seq,
        "t_ms": t_ms,
        "payload": payload,
    }


def header(seed):
    return {
        "type": "header",
        "version": 1,
        "seed": seed,
        "config": {},
        "started_at": "2026-08-14T09:00:00Z",
    }


def transcript(t_ms, seq, text):
    return ev(t_ms, "TranscriptMsg", seq, {"text": text, "is_final": True})


def hand(t_ms, seq, side, pts):
    return ev(t_ms, "HandFrameMsg", seq, {"side": side, "landmarks": pts})


def durations_trace():
    """A matched visual with its paired card, plus two plain keyword cards."""
    events = [
        ev(
            0,
            "MappingUpdate",
            1,
            {
                "op": "upsert",
                "entry": {
                    "keyword": "HIV virus",
                    "kind": "image",
                    "url": "https://img.example.org/hiv.png",
                    "show_keyword": True,
                },
            },
        ),
        transcript(1000, 2, "The HIV virus attacks white blood cells"),
        transcript(3000, 3, "I brought my camera today"),
    ]
    return header(20260814), events


def templates_trace():
    """Profile card then a three-item list built across utterances."""
    events = [
        ev(0, "ClientHello", 0, {"role": "presenter"}),
        transcript(500, 1, "Hello everyone, my name is John"),
        transcript(1000, 2, "First, the durability"),
        transcript(2000, 3, "second the battery life"),
        transcript(3000, 4, "third, the price"),
    ]
    return header(7), events


def interaction_trace():
    """Marker tracking, point-to-place, pinch drag, and a swipe dismissal."""
    events = [
        ev(
            0,
            "MappingUpdate",
            1,
            {
                "op": "upsert",
                "entry": {
                    "keyword": "logo",
                    "kind": "image",
                    "url": "https://img.example.org/logo.png",
                    "anchor_hint": "marker:yellow",
                },
            },
        ),
        transcript(100, 2, "our new logo"),
        ev(200, "FrameMsg", 3, yellow_blob(2, 2)),
        ev(300, "FrameMsg", 4, yellow_blob(8, 6)),
    ]
    # Hold a point pose until it fires at the index tip (0.6, 0.2).
    point = skeleton(dx=0.18, dy=-0.10, fingers="cuccc")
    events += [
        hand(400, 5, "right", point),
        hand(520, 6, "right", point),
        hand(650, 7, "right", point),
    ]
    events.append(transcript(800, 8, "the camera"))
    # Grab the placed card, drag it, let go.
    events += [
        hand(900, 9, "right", skeleton(dx=0.18, dy=-0.10)),
        hand(1000, 10, "right", skeleton(dx=0.18, dy=-0.10, pinch_at=(0.6, 0.2))),
        hand(1100, 11, "right", skeleton(dx=-0.12, dy=0.15, pinch_at=(0.3, 0.45))),
        hand(1200, 12, "right", skeleton(dx=-0.12, dy=0.15)),
    ]
    # Open left palm sweeping leftward across the card at 2.5 u/s.
    seq = 13
    for k in range(9):
        pts = skeleton(dx=0.12381 - 0.04 * k, dy=-0.171429)
        events.append(hand(1300 + 16 * k, seq, "left", pts))
        seq += 1
    return header(123), events


def write_trace(name, head, events):
    trace_path = HERE / f"{name}.trace.jsonl"
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(head) + "\n")
        for event in events:
            fh.write(canonical_json(event) + "\n")
    expected_path = HERE / f"{name}.expected.jsonl"
    timeline = replay(str(trace_path), str(expected_path))
    print(f"{name}: {len(events)} events -> {len(timeline)} scene updates")
    for update in timeline:
        els = [
            (el["id"], el["kind"], el["content"][:24], round(el["x"], 3), round(el["y"], 3))
            for el in update["payload"]["elements"]
        ]
        print(f"  t={update['payload']['t_ms']:>6} seq={update['seq']:>2} {els}")


def main():
    for name, (head, events) in {
        "durations": durations_trace(),
        "templates": templates_trace(),
        "interaction": interaction_trace(),
    }.items():
        write_trace(name, head, events)


if __name__ == "__main__":
    main()
