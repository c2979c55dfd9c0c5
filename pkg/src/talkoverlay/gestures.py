"""Gesture classification from 21-landmark hand frames.

Finger curl and pinch are instantaneous per-frame states; the classifier
layers debounce (pointing), hysteresis (pinch), and episode bracketing
(single-pinch drag vs two-hand transform) on top, so downstream consumers
only ever see well-formed Start/Update/End sequences.

All geometry is 2D: z from monocular landmark models is too noisy to gate
interactions on, so it is carried but ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import GestureConfig

WRIST = 0
THUMB_IP = 3
THUMB_TIP = 4
INDEX_PIP = 6
INDEX_TIP = 8
MIDDLE_PIP = 10
MIDDLE_TIP = 12
RING_PIP = 14
RING_TIP = 16
PINKY_PIP = 18
PINKY_TIP = 20

# (tip, reference joint) per finger; the thumb compares against its IP joint.
_FINGER_JOINTS = (
    (THUMB_TIP, THUMB_IP),
    (INDEX_TIP, INDEX_PIP),
    (MIDDLE_TIP, MIDDLE_PIP),
    (RING_TIP, RING_PIP),
    (PINKY_TIP, PINKY_PIP),
)

UPWARD = "Upward"
INWARD = "Inward"

POINT = "Point"
PINCH_START = "PinchStart"
PINCH_MOVE = "PinchMove"
PINCH_END = "PinchEnd"
TWO_HAND_START = "TwoHandStart"
TWO_HAND_UPDATE = "TwoHandUpdate"
TWO_HAND_END = "TwoHandEnd"
SWIPE = "Swipe"

SIDES = ("left", "right")


class StaleFrame(Exception):
    """Frame timestamp did not advance for its hand; frame must be dropped."""


@dataclass(frozen=True)
class HandFrame:
    side: str
    t_ms: int
    landmarks: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be left or right, got {self.side!r}")
        if len(self.landmarks) != 21:
            raise ValueError(f"expected 21 landmarks, got {len(self.landmarks)}")
        clamped = tuple(
            (min(1.0, max(0.0, x)), min(1.0, max(0.0, y)), z)
            for x, y, z in self.landmarks
        )
        object.__setattr__(self, "landmarks", clamped)


@dataclass(frozen=True)
class GestureEvent:
    kind: str
    t_ms: int
    x: float
    y: float
    side: str | None = None
    scale_ratio: float | None = None
    rotation_deg: float | None = None
    velocity: tuple[float, float] | None = None

    def to_payload(self) -> dict:
        payload = {"kind": self.kind, "t_ms": self.t_ms, "x": self.x, "y": self.y}
        if self.side is not None:
            payload["side"] = self.side
        if self.scale_ratio is not None:
            payload["scale_ratio"] = self.scale_ratio
        if self.rotation_deg is not None:
            payload["rotation_deg"] = self.rotation_deg
        if self.velocity is not None:
            payload["vx"], payload["vy"] = self.velocity
        return payload


def _dist(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _midpoint(a: tuple[float, ...], b: tuple[float, ...]) -> tuple[float, float]:
    return ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)


def _norm_angle(deg: float) -> float:
    """Wrap to (-180, 180]."""
    deg = deg % 360.0
    return deg - 360.0 if deg > 180.0 else deg


def finger_states(frame: HandFrame, curl_ratio: float = 1.1) -> tuple[str, ...]:
    """Upward/Inward per finger, thumb first.

    Inward iff dist(wrist, tip) <= dist(wrist, joint) * curl_ratio; the tie
    (degenerate all-equal frame) lands on Inward.
    """
    wrist = frame.landmarks[WRIST]
    states = []
    for tip, joint in _FINGER_JOINTS:
        d_tip = _dist(wrist, frame.landmarks[tip])
        d_joint = _dist(wrist, frame.landmarks[joint])
        states.append(INWARD if d_tip <= d_joint * curl_ratio else UPWARD)
    return tuple(states)


def pinch_distance(frame: HandFrame) -> float:
    return _dist(frame.landmarks[THUMB_TIP], frame.landmarks[INDEX_TIP])


def pinch_midpoint(frame: HandFrame) -> tuple[float, float]:
    return _midpoint(frame.landmarks[THUMB_TIP], frame.landmarks[INDEX_TIP])


class PinchTracker:
    """Hysteresis around the thumb-tip/index-tip distance.

    Engages strictly below on_dist, releases strictly above off_dist, holds
    in between so landmark jitter cannot toggle the state.
    """

    def __init__(self, on_dist: float, off_dist: float):
        if on_dist >= off_dist:
            raise ValueError("on_dist must be below off_dist")
        self.on_dist = on_dist
        self.off_dist = off_dist
        self.pinching = False

    def update(self, dist: float) -> bool:
        if not self.pinching and dist < self.on_dist:
            self.pinching = True
        elif self.pinching and dist > self.off_dist:
            self.pinching = False
        return self.pinching


@dataclass
class _HandState:
    pinch: PinchTracker | None = None  # always set by the classifier
    last_t: int | None = None
    last_landmarks: tuple | None = None
    pinch_mid: tuple[float, float] = (0.5, 0.5)
    point_since: int | None = None
    point_fired: bool = False
    swipe_since: int | None = None
    swipe_sum: tuple[float, float] = (0.0, 0.0)
    swipe_n: int = 0
    swipe_fired: bool = False

    def reset_swipe(self):
        self.swipe_since = None
        self.swipe_sum = (0.0, 0.0)
        self.swipe_n = 0
        self.swipe_fired = False


@dataclass
class _TwoHandEpisode:
    d0: float
    a0: float


class GestureClassifier:
    """Incremental classifier; feed() one frame, get discrete events back.

    Events are well bracketed: a single pinch on one hand is closed with
    PinchEnd before a two-hand episode starts, and when one hand of a
    two-hand episode releases, the survivor is reopened with PinchStart.
    """

    def __init__(self, config: GestureConfig | None = None):
        self.config = config if config is not None else GestureConfig()
        self._hands = {
            side: _HandState(
                pinch=PinchTracker(self.config.pinch_on_dist, self.config.pinch_off_dist)
            )
            for side in SIDES
        }
        self._single: str | None = None  # side with an open single-pinch episode
        self._two: _TwoHandEpisode | None = None
        self.stale_dropped = 0

    def classify(self, frames) -> list[GestureEvent]:
        """Batch form of feed(); stale frames are dropped and counted."""
        events: list[GestureEvent] = []
        for frame in frames:
            try:
                events.extend(self.feed(frame))
            except StaleFrame:
                self.stale_dropped += 1
        return events

    def feed(self, frame: HandFrame) -> list[GestureEvent]:
        side = frame.side
        st = self._hands[side]
        if st.last_t is not None and frame.t_ms <= st.last_t:
            raise StaleFrame(f"{side} frame at {frame.t_ms} after {st.last_t}")
        t = frame.t_ms
        other_side = "right" if side == "left" else "left"
        other = self._hands[other_side]

        events: list[GestureEvent] = []
        states = finger_states(frame, self.config.curl_ratio)
        was_pinching = st.pinch.pinching
        pinching = st.pinch.update(pinch_distance(frame))
        mid = pinch_midpoint(frame)
        st.pinch_mid = mid

        if pinching and not was_pinching:
            events.extend(self._on_pinch_engaged(side, st, other_side, other, t))
        elif pinching and was_pinching:
            events.extend(self._on_pinch_held(side, st, t))
        elif was_pinching and not pinching:
            events.extend(self._on_pinch_released(side, st, other_side, other, t))

        self._track_point(st, frame, states, pinching, events)
        self._track_swipe(st, frame, states, pinching, events)

        st.last_t = t
        st.last_landmarks = frame.landmarks
        return events

    # -- pinch episodes --------------------------------------------------

    def _hand_geometry(self) -> tuple[float, float, tuple[float, float]]:
        """Distance, left->right angle, and center of the two pinch points."""
        left = self._hands["left"].pinch_mid
        right = self._hands["right"].pinch_mid
        d = _dist(left, right)
        angle = math.degrees(math.atan2(right[1] - left[1], right[0] - left[0]))
        return d, angle, _midpoint(left, right)

    def _on_pinch_engaged(self, side, st, other_side, other, t) -> list[GestureEvent]:
        events = []
        if other.pinch.pinching:
            if self._single == other_side:
                events.append(
                    GestureEvent(PINCH_END, t, *other.pinch_mid, side=other_side)
                )
                self._single = None
            d0, a0, center = self._hand_geometry()
            self._two = _TwoHandEpisode(d0=max(d0, 1e-9), a0=a0)
            events.append(
                GestureEvent(
                    TWO_HAND_START, t, *center, scale_ratio=1.0, rotation_deg=0.0
                )
            )
        else:
            self._single = side
            events.append(GestureEvent(PINCH_START, t, *st.pinch_mid, side=side))
        return events

    def _on_pinch_held(self, side, st, t) -> list[GestureEvent]:
        if self._two is not None:
            d, a, center = self._hand_geometry()
            return [
                GestureEvent(
                    TWO_HAND_UPDATE,
                    t,
                    *center,
                    scale_ratio=d / self._two.d0,
                    rotation_deg=_norm_angle(a - self._two.a0),
                )
            ]
        if self._single == side:
            return [GestureEvent(PINCH_MOVE, t, *st.pinch_mid, side=side)]
        return []

    def _on_pinch_released(self, side, st, other_side, other, t) -> list[GestureEvent]:
        events = []
        if self._two is not None:
            _, _, center = self._hand_geometry()
            events.append(GestureEvent(TWO_HAND_END, t, *center))
            self._two = None
            if other.pinch.pinching:
                self._single = other_side
                events.append(
                    GestureEvent(PINCH_START, t, *other.pinch_mid, side=other_side)
                )
        elif self._single == side:
            events.append(GestureEvent(PINCH_END, t, *st.pinch_mid, side=side))
            self._single = None
        return events

    # -- held poses ------------------------------------------------------

    def _track_point(self, st, frame, states, pinching, events):
        pose = (
            not pinching
            and states[1] == UPWARD
            and all(states[i] == INWARD for i in (0, 2, 3, 4))
        )
        if not pose:
            st.point_since = None
            st.point_fired = False
            return
        if st.point_since is None:
            st.point_since = frame.t_ms
            st.point_fired = False
        elif not st.point_fired and frame.t_ms - st.point_since >= self.config.point_hold_ms:
            tip = frame.landmarks[INDEX_TIP]
            events.append(
                GestureEvent(POINT, frame.t_ms, tip[0], tip[1], side=frame.side)
            )
            st.point_fired = True

    def _track_swipe(self, st, frame, states, pinching, events):
        open_hand = not pinching and all(s == UPWARD for s in states)
        if not open_hand or st.last_landmarks is None:
            st.reset_swipe()
            return
        dt_s = (frame.t_ms - st.last_t) / 1000.0
        n = len(frame.landmarks)
        vx = sum(c[0] - p[0] for c, p in zip(frame.landmarks, st.last_landmarks)) / n / dt_s
        vy = sum(c[1] - p[1] for c, p in zip(frame.landmarks, st.last_landmarks)) / n / dt_s
        if math.hypot(vx, vy) <= self.config.swipe_speed:
            st.reset_swipe()
            return
        if st.swipe_since is None:
            st.swipe_since = st.last_t  # motion started within the last interval
        st.swipe_sum = (st.swipe_sum[0] + vx, st.swipe_sum[1] + vy)
        st.swipe_n += 1
        if not st.swipe_fired and frame.t_ms - st.swipe_since >= self.config.swipe_hold_ms:
            cx = sum(p[0] for p in frame.landmarks) / n
            cy = sum(p[1] for p in frame.landmarks) / n
            events.append(
                GestureEvent(
                    SWIPE,
                    frame.t_ms,
                    cx,
                    cy,
                    side=frame.side,
                    velocity=(st.swipe_sum[0] / st.swipe_n, st.swipe_sum[1] / st.swipe_n),
                )
            )
            st.swipe_fired = True
