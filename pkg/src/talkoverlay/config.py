"""Configuration: one flat JSON document with namespaced keys.

Every tunable numeric constant in the engine lives here so that a trace
header can snapshot the exact values a session ran with.  Keys are grouped
by prefix: ``engine.*`` (scene behavior), ``gesture.*`` (classifier
thresholds), ``markers.*`` (color specs), ``server.*`` (service shell).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

CONFIG_ENV_VAR = "TALKOVERLAY_CONFIG"

DEFAULT_MARKER_SPECS = [
    # Calibration values for the two stock post-it colors; override per venue.
    {"name": "lightblue", "rgb_min": [90, 170, 200], "rgb_max": [190, 235, 255], "min_area_px": 100},
    {"name": "yellow", "rgb_min": [200, 170, 0], "rgb_max": [255, 255, 110], "min_area_px": 100},
]

DEFAULTS: dict = {
    # Scene element lifetimes (ms).
    "engine.keyword_duration_ms": 4000,
    "engine.visual_duration_ms": 10000,
    "engine.template_duration_ms": 10000,
    # Auto-placement: alternate sides of the center band, stepping down.
    "engine.placement_x_left": 0.28,
    "engine.placement_x_right": 0.72,
    "engine.placement_y_start": 0.30,
    "engine.placement_y_step": 0.12,
    "engine.placement_y_max": 0.78,
    # Horizontal band reserved for the presenter's face; auto slots stay out.
    "engine.center_band_min": 0.38,
    "engine.center_band_max": 0.62,
    "engine.pending_point_ttl_ms": 3000,
    "engine.grab_release_min_life_ms": 5000,
    "engine.marker_hold_ms": 1000,
    "engine.marker_offset_y": 0.10,
    "engine.default_alpha": 0.75,
    # Nominal element half-extent used for gesture hit-testing (x scale).
    "engine.hit_half_width": 0.10,
    "engine.hit_half_height": 0.06,
    "engine.paired_keyword_offset_y": 0.06,
    # Gesture classifier thresholds.
    "gesture.pinch_on_dist": 0.06,
    "gesture.pinch_off_dist": 0.09,
    "gesture.curl_ratio": 1.1,
    "gesture.point_hold_ms": 250,
    "gesture.swipe_speed": 1.5,
    "gesture.swipe_hold_ms": 120,
    "markers.specs": DEFAULT_MARKER_SPECS,
    "server.host": "127.0.0.1",
    "server.port": 8765,
    "server.tick_interval_ms": 100,
    "server.debug_gestures": False,
    "server.max_suggestions": 5,
    "server.suggestion_fixtures": "",
    "server.suggestion_endpoint": "",
    "server.seed": 0,  # 0 = draw a fresh seed per session
}


class ConfigError(Exception):
    """Invalid or unreadable configuration."""


def load_flat(path: str | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults <- file <- overrides and validate.

    ``path=None`` falls back to the ``TALKOVERLAY_CONFIG`` env var, then to
    pure defaults.  Unknown keys are rejected to catch typos early.
    """
    flat = dict(DEFAULTS)
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        flat.update(loaded)
    if overrides:
        flat.update(overrides)
    _validate(flat)
    return flat


def _validate(flat: dict) -> None:
    unknown = set(flat) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in (
        "engine.keyword_duration_ms",
        "engine.visual_duration_ms",
        "engine.template_duration_ms",
        "engine.pending_point_ttl_ms",
        "engine.grab_release_min_life_ms",
    ):
        if not isinstance(flat[key], int) or flat[key] <= 0:
            raise ConfigError(f"{key} must be a positive integer")
    if not flat["gesture.pinch_on_dist"] < flat["gesture.pinch_off_dist"]:
        raise ConfigError("gesture.pinch_on_dist must be below gesture.pinch_off_dist")
    band = (flat["engine.center_band_min"], flat["engine.center_band_max"])
    for key in ("engine.placement_x_left", "engine.placement_x_right"):
        if band[0] <= flat[key] <= band[1]:
            raise ConfigError(f"{key} falls inside the reserved center band {band}")
    if not isinstance(flat["markers.specs"], list):
        raise ConfigError("markers.specs must be a list")
    for spec in flat["markers.specs"]:
        lo, hi = spec.get("rgb_min"), spec.get("rgb_max")
        if not (isinstance(lo, list) and isinstance(hi, list) and len(lo) == 3 and len(hi) == 3):
            raise ConfigError(f"marker spec {spec.get('name')!r} needs 3-channel rgb_min/rgb_max")
        if any(a > b for a, b in zip(lo, hi)):
            raise ConfigError(f"marker spec {spec.get('name')!r} has rgb_min above rgb_max")
        if spec.get("min_area_px", 1) < 1:
            raise ConfigError(f"marker spec {spec.get('name')!r} min_area_px must be >= 1")


@dataclass(frozen=True)
class EngineConfig:
    keyword_duration_ms: int = 4000
    visual_duration_ms: int = 10000
    template_duration_ms: int = 10000
    placement_x_left: float = 0.28
    placement_x_right: float = 0.72
    placement_y_start: float = 0.30
    placement_y_step: float = 0.12
    placement_y_max: float = 0.78
    pending_point_ttl_ms: int = 3000
    grab_release_min_life_ms: int = 5000
    marker_hold_ms: int = 1000
    marker_offset_y: float = 0.10
    default_alpha: float = 0.75
    hit_half_width: float = 0.10
    hit_half_height: float = 0.06
    paired_keyword_offset_y: float = 0.06

    @staticmethod
    def from_flat(flat: dict) -> "EngineConfig":
        return EngineConfig(
            keyword_duration_ms=flat["engine.keyword_duration_ms"],
            visual_duration_ms=flat["engine.visual_duration_ms"],
            template_duration_ms=flat["engine.template_duration_ms"],
            placement_x_left=flat["engine.placement_x_left"],
            placement_x_right=flat["engine.placement_x_right"],
            placement_y_start=flat["engine.placement_y_start"],
            placement_y_step=flat["engine.placement_y_step"],
            placement_y_max=flat["engine.placement_y_max"],
            pending_point_ttl_ms=flat["engine.pending_point_ttl_ms"],
            grab_release_min_life_ms=flat["engine.grab_release_min_life_ms"],
            marker_hold_ms=flat["engine.marker_hold_ms"],
            marker_offset_y=flat["engine.marker_offset_y"],
            default_alpha=flat["engine.default_alpha"],
            hit_half_width=flat["engine.hit_half_width"],
            hit_half_height=flat["engine.hit_half_height"],
            paired_keyword_offset_y=flat["engine.paired_keyword_offset_y"],
        )

    def placement_y_slots(self) -> list[float]:
        """Vertical slots per side, rounded so serialized coords stay tidy."""
        slots = []
        i = 0
        while True:
            y = round(self.placement_y_start + i * self.placement_y_step, 6)
            if y > self.placement_y_max + 1e-9:
                break
            slots.append(y)
            i += 1
        return slots or [self.placement_y_start]


@dataclass(frozen=True)
class GestureConfig:
    pinch_on_dist: float = 0.06
    pinch_off_dist: float = 0.09
    curl_ratio: float = 1.1
    point_hold_ms: int = 250
    swipe_speed: float = 1.5
    swipe_hold_ms: int = 120

    @staticmethod
    def from_flat(flat: dict) -> "GestureConfig":
        return GestureConfig(
            pinch_on_dist=flat["gesture.pinch_on_dist"],
            pinch_off_dist=flat["gesture.pinch_off_dist"],
            curl_ratio=flat["gesture.curl_ratio"],
            point_hold_ms=flat["gesture.point_hold_ms"],
            swipe_speed=flat["gesture.swipe_speed"],
            swipe_hold_ms=flat["gesture.swipe_hold_ms"],
        )


@dataclass(frozen=True)
class AppConfig:
    """Validated config bundle plus the raw flat snapshot for trace headers."""

    flat: dict = field(default_factory=lambda: dict(DEFAULTS))

    @property
    def engine(self) -> EngineConfig:
        return EngineConfig.from_flat(self.flat)

    @property
    def gesture(self) -> GestureConfig:
        return GestureConfig.from_flat(self.flat)

    @property
    def marker_specs(self) -> list[dict]:
        return self.flat["markers.specs"]

    @staticmethod
    def load(path: str | None = None, overrides: dict | None = None) -> "AppConfig":
        return AppConfig(flat=load_flat(path, overrides))
