"""Color-marker detection: RGB threshold + connected components + centroid.

Pure per-frame function.  Dropout smoothing is not done here; the scene
engine simply holds an element at the marker's last centroid, so a missed
frame costs nothing.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import ndimage

# 4-connectivity: diagonal pixels do not join a component.
_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int32)


class BadFrame(Exception):
    """Pixel buffer inconsistent with the declared geometry."""


@dataclass(frozen=True)
class ColorMarkerSpec:
    name: str
    rgb_min: tuple[int, int, int]
    rgb_max: tuple[int, int, int]
    min_area_px: int = 1

    def __post_init__(self):
        if any(a > b for a, b in zip(self.rgb_min, self.rgb_max)):
            raise ValueError(f"spec {self.name!r}: rgb_min above rgb_max")
        if self.min_area_px < 1:
            raise ValueError(f"spec {self.name!r}: min_area_px must be >= 1")

    @staticmethod
    def from_dict(fields: dict) -> "ColorMarkerSpec":
        return ColorMarkerSpec(
            name=fields["name"],
            rgb_min=tuple(fields["rgb_min"]),
            rgb_max=tuple(fields["rgb_max"]),
            min_area_px=int(fields.get("min_area_px", 1)),
        )


@dataclass(frozen=True)
class FrameBuffer:
    width: int
    height: int
    pixels: bytes  # row-major RGB8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise BadFrame(f"bad geometry {self.width}x{self.height}")
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise BadFrame(
                f"pixel buffer is {len(self.pixels)} bytes, expected {expected}"
            )

    @staticmethod
    def from_base64(width: int, height: int, pixels_b64: str) -> "FrameBuffer":
        try:
            raw = base64.b64decode(pixels_b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise BadFrame(f"undecodable pixel payload: {exc}") from exc
        return FrameBuffer(width=width, height=height, pixels=raw)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )


@dataclass(frozen=True)
class MarkerDetection:
    name: str
    centroid: tuple[float, float]  # normalized (x, y)
    area_px: int


def default_specs() -> list[ColorMarkerSpec]:
    from .config import DEFAULT_MARKER_SPECS

    return [ColorMarkerSpec.from_dict(d) for d in DEFAULT_MARKER_SPECS]


def detect(frame: FrameBuffer, specs: list[ColorMarkerSpec]) -> list[MarkerDetection]:
    """Largest in-range 4-connected component per color spec, if big enough.

    Centroid is the component's pixel-coordinate mean normalized by frame
    size, computed in exact rational arithmetic and rounded once, so a pure
    pixel translation shifts the result by exactly (dx/width, dy/height).
    Equal-area tie goes to the component labeled first (raster order),
    which keeps results deterministic.
    """
    img = frame.as_array().astype(np.int32)
    detections: list[MarkerDetection] = []
    for spec in specs:
        lo = np.array(spec.rgb_min, dtype=np.int32)
        hi = np.array(spec.rgb_max, dtype=np.int32)
        mask = np.all((img >= lo) & (img <= hi), axis=2)
        if not mask.any():
            continue
        labels, count = ndimage.label(mask, structure=_STRUCTURE)
        if count == 0:
            continue
        areas = np.bincount(labels.ravel())[1:]  # skip background label 0
        best = int(np.argmax(areas)) + 1  # argmax takes the first maximum
        area = int(areas[best - 1])
        if area < spec.min_area_px:
            continue
        ys, xs = np.nonzero(labels == best)
        cx = float(Fraction(int(xs.sum()), area * frame.width))
        cy = float(Fraction(int(ys.sum()), area * frame.height))
        detections.append(MarkerDetection(name=spec.name, centroid=(cx, cy), area_px=area))
    return detections
