"""WebSocket service shell around SessionEngine.

One hub per session: a serialized (locked) engine, a set of connected
clients, and a housekeeping ticker that ages elements out between messages.
The first client to say hello with role=presenter gets the input side;
everyone else is a viewer and receives broadcasts only.
"""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import protocol
from .config import AppConfig
from .mapping import (
    FixtureSuggestionProvider,
    HttpSuggestionProvider,
    MappingRegistry,
    ProviderUnavailable,
    suggest_visuals,
)
from .session import SessionEngine


@dataclass
class SessionHub:
    engine: SessionEngine
    started_monotonic: float
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    clients: dict = field(default_factory=dict)  # WebSocket -> role
    presenter: WebSocket | None = None
    ticker: asyncio.Task | None = None

    def now_ms(self) -> int:
        return int((time.monotonic() - self.started_monotonic) * 1000)


def _make_provider(config: AppConfig):
    endpoint = config.flat.get("server.suggestion_endpoint") or ""
    if endpoint:
        return HttpSuggestionProvider(endpoint)
    fixtures = config.flat.get("server.suggestion_fixtures") or None
    return FixtureSuggestionProvider(fixtures)


def build_app(
    config: AppConfig | None = None,
    registry: MappingRegistry | None = None,
    mapping_path: str | None = None,
    debug_gestures: bool | None = None,
) -> FastAPI:
    config = config if config is not None else AppConfig()
    registry = registry if registry is not None else MappingRegistry()
    if debug_gestures is None:
        debug_gestures = bool(config.flat["server.debug_gestures"])
    app = FastAPI(title="talkoverlay")
    app.state.config = config
    app.state.registry = registry
    app.state.mapping_path = mapping_path
    app.state.debug_gestures = debug_gestures
    app.state.sessions: dict[str, SessionHub] = {}
    app.state.seed_counter = int(config.flat["server.seed"])

    def next_seed() -> int:
        # seed 0 requests per-session seeds; keep them distinct but stable
        # within a server run so /metrics stays interpretable.
        app.state.seed_counter += 1
        base = int(config.flat["server.seed"])
        return base if base != 0 else int(time.time_ns() % 2**31) + app.state.seed_counter

    def get_hub(session_id: str) -> SessionHub:
        hub = app.state.sessions.get(session_id)
        if hub is None:
            engine = SessionEngine(
                session_id=session_id,
                config=config,
                registry=registry,
                seed=next_seed(),
                debug_gestures=debug_gestures,
            )
            hub = SessionHub(engine=engine, started_monotonic=time.monotonic())
            app.state.sessions[session_id] = hub
        if hub.ticker is None or hub.ticker.done():
            hub.ticker = asyncio.get_running_loop().create_task(_run_ticker(hub))
        return hub

    async def _run_ticker(hub: SessionHub):
        interval = config.flat["server.tick_interval_ms"] / 1000.0
        try:
            while True:
                await asyncio.sleep(interval)
                async with hub.lock:
                    outbound = hub.engine.idle_tick(hub.now_ms())
                await _route(hub, None, outbound)
        except asyncio.CancelledError:
            pass

    async def _send(ws: WebSocket, message: dict) -> None:
        try:
            await ws.send_text(protocol.canonical_json(message))
        except RuntimeError:
            pass  # client went away mid-send; disconnect handling cleans up

    async def _route(hub: SessionHub, ws: WebSocket | None, outbound) -> None:
        for item in outbound:
            if item.scope == "reply":
                if ws is not None:
                    await _send(ws, item.message)
            else:
                await asyncio.gather(
                    *(_send(client, item.message) for client in list(hub.clients)),
                    return_exceptions=True,
                )

    def _drop_client(ws: WebSocket) -> None:
        # Session state survives a full disconnect so a presenter reload can
        # rejoin; only the housekeeping ticker stops while nobody listens.
        for hub in app.state.sessions.values():
            if ws in hub.clients:
                del hub.clients[ws]
                if hub.presenter is ws:
                    hub.presenter = None
                if not hub.clients and hub.ticker is not None:
                    hub.ticker.cancel()
                    hub.ticker = None

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        err_seq = 0
        hub: SessionHub | None = None

        async def send_error(session_id: str, code: str, detail: str):
            nonlocal err_seq
            err_seq += 1
            await _send(ws, protocol.make_error(session_id, err_seq, code, detail))

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = protocol.parse_message(raw)
                except protocol.ProtocolError as exc:
                    await send_error("", exc.code, exc.detail)
                    continue

                if msg["type"] == protocol.CLIENT_HELLO:
                    hub = get_hub(msg["session_id"])
                    role = msg["payload"].get("role", "presenter")
                    if role == "presenter" and hub.presenter is None:
                        hub.presenter = ws
                    else:
                        role = "viewer"
                    hub.clients[ws] = role
                    async with hub.lock:
                        outbound = hub.engine.handle_inbound(msg, hub.now_ms())
                    await _route(hub, ws, outbound)
                    continue

                if hub is None or ws not in hub.clients:
                    await send_error(msg["session_id"], "hello", "ClientHello required first")
                    continue
                if hub.presenter is not ws:
                    await send_error(msg["session_id"], "role", "viewers cannot send input")
                    continue
                try:
                    async with hub.lock:
                        outbound = hub.engine.handle_inbound(msg, hub.now_ms())
                except Exception as exc:  # noqa: BLE001 - never drop the socket
                    await send_error(msg["session_id"], "internal", str(exc))
                    continue
                # Error replies from the engine carry seq 0; number them here
                # on the connection's own error stream.
                for item in outbound:
                    if item.message["type"] == protocol.ERROR:
                        err_seq += 1
                        item.message["seq"] = err_seq
                await _route(hub, ws, outbound)
                if (
                    msg["type"] == protocol.MAPPING_UPDATE
                    and app.state.mapping_path
                    and any(
                        o.message["type"] == protocol.MAPPING_UPDATE for o in outbound
                    )
                ):
                    registry.save(app.state.mapping_path)
        except WebSocketDisconnect:
            pass
        finally:
            _drop_client(ws)

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.get("/metrics")
    def metrics():
        return {
            session_id: hub.engine.metrics()
            for session_id, hub in app.state.sessions.items()
        }

    @app.get("/suggest")
    def suggest(keyword: str):
        try:
            provider = _make_provider(config)
            urls = suggest_visuals(
                keyword, provider, limit=config.flat["server.max_suggestions"]
            )
        except ProviderUnavailable as exc:
            return {"keyword": keyword, "urls": [], "error": str(exc)}
        return {"keyword": keyword, "urls": urls}

    return app


def serve(
    config: AppConfig,
    mapping_path: str | None = None,
    port: int | None = None,
    debug_gestures: bool | None = None,
) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    registry = MappingRegistry.load(mapping_path) if mapping_path else MappingRegistry()
    known_markers = {spec["name"] for spec in config.marker_specs}
    for entry in registry.entries():
        if entry.anchor_hint.startswith("marker:"):
            name = entry.anchor_hint.split(":", 1)[1]
            if name not in known_markers:
                raise SystemExit(
                    f"mapping entry {entry.keyword_norm!r} anchors to unconfigured marker {name!r}"
                )
    app = build_app(
        config=config,
        registry=registry,
        mapping_path=mapping_path,
        debug_gestures=debug_gestures,
    )
    uvicorn.run(
        app,
        host=config.flat["server.host"],
        port=port if port is not None else config.flat["server.port"],
        log_level="info",
    )
