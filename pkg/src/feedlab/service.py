"""HTTP + WebSocket interface over session runtimes.

One process hosts many sessions in memory. Feed and dialogue actions are
plain JSON request/response; trigger and blend notifications additionally
stream over a WebSocket push channel so clients need not poll. All endpoint
handlers are async and share one event loop, which serializes calls within a
session in arrival order.
"""

from __future__ import annotations

import asyncio
import time
import uuid
from pathlib import Path

from fastapi import Body, FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import EngineConfig
from .corpus import Corpus, FeedSpec, feed_spec_permutations, synthesize_corpus
from .errors import (
    CapacityError,
    FeedLabError,
    NotFoundError,
    ValidationError,
)
from .session import CONDITIONS, SessionRuntime

MAX_SESSIONS = 256

_STATUS_BY_CODE = {
    "validation": 400,
    "monotonicity": 400,
    "parse": 400,
    "state": 409,
    "capability": 403,
    "not_found": 404,
    "capacity": 503,
    "provider": 502,
    "empty_window": 400,
    "error": 400,
}


def _feed_spec_from_body(body: dict) -> FeedSpec:
    raw = body.get("feed_spec")
    if raw is None:
        return feed_spec_permutations()[0]
    if "preset" in raw:
        presets = feed_spec_permutations()
        index = int(raw["preset"])
        if not 0 <= index < len(presets):
            raise ValidationError(f"feed preset must be in [0, {len(presets) - 1}]")
        return presets[index]
    return FeedSpec.from_dict(raw)


def create_app(config: EngineConfig | None = None,
               corpus: Corpus | None = None) -> FastAPI:
    app = FastAPI(title="feedlab service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    base_config = config or EngineConfig()
    shared_corpus = corpus or synthesize_corpus(seed=11)
    registry: dict = {}

    @app.exception_handler(FeedLabError)
    async def _feedlab_error(_, exc: FeedLabError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    def _get(session_id: str) -> dict:
        entry = registry.get(session_id)
        if entry is None:
            raise NotFoundError(f"no session {session_id!r}")
        return entry

    def _t_ms(entry: dict, body: dict) -> int:
        if body.get("t_ms") is not None:
            return int(body["t_ms"])
        elapsed = int((time.monotonic() - entry["mono0"]) * 1000)
        last = entry["runtime"].stream.last_t_ms()
        return max(elapsed, last)

    @app.get("/health")
    async def health():
        return {"ok": True, "sessions": len(registry)}

    @app.get("/sessions")
    async def list_sessions():
        return {
            "sessions": [
                {
                    "session_id": sid,
                    "condition": entry["runtime"].condition,
                    "created": entry["runtime"].stream.header.wall_clock_start,
                }
                for sid, entry in registry.items()
            ]
        }

    @app.post("/sessions")
    async def create_session(body: dict = Body(default={})):
        condition = body.get("condition")
        if condition not in CONDITIONS:
            raise ValidationError(f"condition must be one of {CONDITIONS}")
        if len(registry) >= MAX_SESSIONS:
            raise CapacityError(f"session capacity {MAX_SESSIONS} reached")
        session_id = body.get("session_id") or uuid.uuid4().hex[:12]
        if session_id in registry:
            raise ValidationError(f"session {session_id!r} already exists")
        seed = int(body.get("seed", 0))
        overrides = body.get("config") or {}
        session_config = base_config.replace(**overrides) if overrides else base_config
        runtime = SessionRuntime(
            session_id=session_id,
            condition=condition,
            corpus=shared_corpus,
            feed_spec=_feed_spec_from_body(body),
            seeds={"feed": seed, "refresh_base": seed + 1000},
            config=session_config,
            log_path=body.get("log_path"),
        )
        registry[session_id] = {"runtime": runtime, "mono0": time.monotonic()}
        return {
            "session_id": session_id,
            "condition": condition,
            "capabilities": runtime.capabilities(),
            "created": runtime.stream.header.wall_clock_start,
            "page": runtime.page(),
            "dialogue": runtime.dialogue_state(),
        }

    @app.delete("/sessions/{session_id}")
    async def close_session(session_id: str):
        entry = _get(session_id)
        entry["runtime"].close()
        del registry[session_id]
        return {"ok": True}

    # -- feed ---------------------------------------------------------------

    @app.get("/sessions/{session_id}/page")
    async def get_page(session_id: str, offset: int = 0, limit: int | None = None):
        return _get(session_id)["runtime"].page(offset=offset, limit=limit)

    @app.post("/sessions/{session_id}/refresh")
    async def pull_refresh(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        result = entry["runtime"].pull_refresh(_t_ms(entry, body))
        result["page"] = entry["runtime"].page()
        return result

    @app.post("/sessions/{session_id}/impressions")
    async def report_impression(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        item_id = body.get("item_id")
        action = body.get("action")
        if not item_id or action not in ("enter", "exit"):
            raise ValidationError("impression body needs item_id and action enter|exit")
        return entry["runtime"].report_impression(item_id, action, _t_ms(entry, body))

    @app.post("/sessions/{session_id}/scroll")
    async def report_scroll(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        if body.get("position_px") is None:
            raise ValidationError("scroll body needs position_px")
        return entry["runtime"].report_scroll(int(body["position_px"]), _t_ms(entry, body))

    @app.post("/sessions/{session_id}/click")
    async def report_click(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        return entry["runtime"].report_click(
            _t_ms(entry, body),
            item_id=body.get("item_id"),
            target=body.get("target"),
        )

    @app.post("/sessions/{session_id}/analyze")
    async def request_analysis(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        return entry["runtime"].request_analysis(_t_ms(entry, body))

    # -- search ---------------------------------------------------------------

    @app.post("/sessions/{session_id}/search")
    async def search(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        query = body.get("query", "")
        return entry["runtime"].search(
            query, _t_ms(entry, body), replace=bool(body.get("replace", False))
        )

    # -- dialogue ---------------------------------------------------------------

    @app.get("/sessions/{session_id}/dialogue")
    async def dialogue_state(session_id: str):
        return _get(session_id)["runtime"].dialogue_state()

    @app.post("/sessions/{session_id}/dialogue/option")
    async def respond_option(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        option_id = body.get("option_id")
        if not option_id:
            raise ValidationError("option body needs option_id")
        return entry["runtime"].respond_option(option_id, _t_ms(entry, body))

    @app.post("/sessions/{session_id}/dialogue/text")
    async def respond_text(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        return entry["runtime"].respond_text(body.get("text", ""), _t_ms(entry, body))

    @app.post("/sessions/{session_id}/dialogue/dismiss")
    async def dismiss(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        return entry["runtime"].dismiss(_t_ms(entry, body))

    # -- notifications, log, metrics ------------------------------------------

    @app.get("/sessions/{session_id}/notifications")
    async def poll_notifications(session_id: str, after: int = 0):
        return {"notifications": _get(session_id)["runtime"].poll_notifications(after)}

    @app.websocket("/sessions/{session_id}/push")
    async def push_channel(websocket: WebSocket, session_id: str):
        await websocket.accept()
        after = int(websocket.query_params.get("after", 0))
        try:
            while True:
                entry = registry.get(session_id)
                if entry is None:
                    await websocket.close()
                    return
                for note in entry["runtime"].poll_notifications(after):
                    await websocket.send_json(note)
                    after = note["seq"]
                await asyncio.sleep(0.05)
        except (WebSocketDisconnect, RuntimeError):
            return

    @app.get("/sessions/{session_id}/events")
    async def get_events(session_id: str, after_seq: int = -1):
        runtime = _get(session_id)["runtime"]
        return {
            "header": runtime.stream.header.to_dict(),
            "events": [
                e.to_dict() for e in runtime.stream.events if e.seq > after_seq
            ],
        }

    @app.get("/sessions/{session_id}/metrics")
    async def get_metrics(session_id: str):
        return _get(session_id)["runtime"].metrics()

    @app.post("/sessions/{session_id}/phase")
    async def mark_phase(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        phase = body.get("phase")
        mark = body.get("mark")
        if not phase or mark not in ("start", "end"):
            raise ValidationError("phase body needs phase and mark start|end")
        return entry["runtime"].mark_phase(phase, mark, _t_ms(entry, body))

    @app.post("/sessions/{session_id}/survey")
    async def record_survey(session_id: str, body: dict = Body(default={})):
        entry = _get(session_id)
        return entry["runtime"].record_survey(body.get("answers", {}), _t_ms(entry, body))

    ui_dist = Path("frontend/dist")
    if ui_dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def main(host: str = "127.0.0.1", port: int = 8777,
         config: EngineConfig | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(config=config), host=host, port=port, log_level="warning")
