"""Deterministic replay: run a recorded inbound trace under a virtual clock.

A trace is JSON-lines: a header line carrying {seed, config, started_at},
then inbound wire messages each stamped with the session-relative t_ms the
server assigned on arrival.  The virtual clock visits every element-expiry
deadline, so removals land at exactly their expires_ms in the output
timeline rather than at whenever the next message happened to arrive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import protocol
from .config import AppConfig, ConfigError
from .mapping import MappingRegistry
from .session import SessionEngine

TRACE_VERSION = 1


class TraceParseError(Exception):
    pass


@dataclass(frozen=True)
class TraceHeader:
    seed: int
    config: dict
    started_at: str


@dataclass(frozen=True)
class SessionTrace:
    header: TraceHeader
    events: list[dict]  # validated inbound messages, each with t_ms


def make_header(seed: int, config: AppConfig, started_at: str) -> dict:
    return {
        "type": "header",
        "version": TRACE_VERSION,
        "seed": seed,
        "config": config.flat,
        "started_at": started_at,
    }


def load_trace(path: str) -> SessionTrace:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in (l.strip() for l in fh) if line]
    if not lines:
        raise TraceParseError(f"{path}: empty trace, header line required")
    header = _parse_header(path, lines[0])
    events: list[dict] = []
    last_t = -1
    session_id: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"{path}:{lineno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise TraceParseError(f"{path}:{lineno}: event must be an object")
        t_ms = raw.get("t_ms")
        if not isinstance(t_ms, int) or t_ms < 0:
            raise TraceParseError(f"{path}:{lineno}: t_ms must be a non-negative integer")
        if t_ms < last_t:
            raise TraceParseError(f"{path}:{lineno}: t_ms {t_ms} regresses below {last_t}")
        last_t = t_ms
        try:
            msg = protocol.validate_envelope(raw)
        except protocol.ProtocolError as exc:
            raise TraceParseError(f"{path}:{lineno}: {exc}") from exc
        if session_id is None:
            session_id = msg["session_id"]
        elif msg["session_id"] != session_id:
            raise TraceParseError(f"{path}:{lineno}: trace mixes sessions")
        msg["t_ms"] = t_ms
        events.append(msg)
    return SessionTrace(
        header=header,
        events=events,
    )


def _parse_header(path: str, line: str) -> TraceHeader:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"{path}:1: {exc.msg}") from exc
    if not isinstance(raw, dict) or raw.get("type") != "header":
        raise TraceParseError(f"{path}:1: first line must be the header")
    if raw.get("version") != TRACE_VERSION:
        raise TraceParseError(f"{path}:1: unsupported trace version {raw.get('version')!r}")
    seed = raw.get("seed")
    if not isinstance(seed, int):
        raise TraceParseError(f"{path}:1: header seed missing")
    config = raw.get("config", {})
    if not isinstance(config, dict):
        raise TraceParseError(f"{path}:1: header config must be an object")
    return TraceHeader(seed=seed, config=config, started_at=str(raw.get("started_at", "")))


def trace_config(trace: SessionTrace) -> AppConfig:
    try:
        return AppConfig.load(overrides=trace.header.config)
    except ConfigError as exc:
        raise TraceParseError(f"bad config in trace header: {exc}") from exc


def run_trace(trace: SessionTrace) -> list[dict]:
    """Feed the trace through a fresh engine; returns all SceneUpdates."""
    config = trace_config(trace)
    session_id = trace.events[0]["session_id"] if trace.events else "replay"
    engine = SessionEngine(
        session_id=session_id,
        config=config,
        registry=MappingRegistry(),
        seed=trace.header.seed,
    )
    timeline: list[dict] = []

    def collect(outbound):
        for item in outbound:
            if item.message["type"] == protocol.SCENE_UPDATE:
                timeline.append(item.message)

    def drain_until(limit_ms: int | None):
        # Visit expiry deadlines in order; limit None means run them all out.
        while True:
            deadline = engine.scene.next_deadline()
            if deadline is None or (limit_ms is not None and deadline > limit_ms):
                return
            collect(engine.idle_tick(deadline))

    for event in trace.events:
        drain_until(event["t_ms"])
        collect(engine.handle_inbound(event, event["t_ms"]))
    drain_until(None)
    return timeline


def replay(trace_path: str, out_path: str) -> list[dict]:
    """Replay a trace file; the timeline echoes the header, then updates.

    Output is canonical JSON-lines, byte-identical for identical traces.
    """
    trace = load_trace(trace_path)
    timeline = run_trace(trace)
    header = make_header(trace.header.seed, trace_config(trace), trace.header.started_at)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(protocol.canonical_json(header))
        fh.write("\n")
        for update in timeline:
            fh.write(protocol.canonical_json(update))
            fh.write("\n")
    return timeline
