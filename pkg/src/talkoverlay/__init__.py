"""Speech-driven augmented overlay engine.

Turns live transcript segments into short-lived visual elements, matches
keywords against a presenter-authored mapping table, tracks hand gestures
and color markers, and streams scene updates to clients over a small
websocket protocol.  Replay support makes every session reproducible.
"""

from .config import AppConfig, ConfigError, EngineConfig, GestureConfig
from .keywords import KeywordExtractor, KeywordSpan
from .mapping import MappingEntry, MappingRegistry
from .scene import SceneEngine, SceneSnapshot
from .session import SessionEngine

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "ConfigError",
    "EngineConfig",
    "GestureConfig",
    "KeywordExtractor",
    "KeywordSpan",
    "MappingEntry",
    "MappingRegistry",
    "SceneEngine",
    "SceneSnapshot",
    "SessionEngine",
    "__version__",
]
