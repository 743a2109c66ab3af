"""HTTP and WebSocket surface over the engine."""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine
from .errors import EmptyInput, UnknownSession

logger = logging.getLogger(__name__)


class TurnRequest(BaseModel):
    text: str


def create_app(engine: Engine, frontend_dist: Path | None = None) -> FastAPI:
    app = FastAPI(title="parley", version="0.1.0")

    @app.post("/session")
    def create_session() -> dict:
        session_id, opening = engine.create_session()
        return {"session_id": session_id, "opening": opening}

    @app.post("/session/{session_id}/turn")
    def post_turn(session_id: str, body: TurnRequest) -> dict:
        try:
            reply, debug = engine.post_user_turn(session_id, body.text)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except EmptyInput as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"reply": reply, "debug": debug}

    @app.get("/session/{session_id}/metrics")
    def get_metrics(session_id: str) -> dict:
        try:
            return engine.session_metrics(session_id).to_dict()
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.websocket("/session/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str) -> None:
        """Bidirectional JSON frames. On connect the full transcript is
        replayed so a reconnecting client can rebuild its view."""
        try:
            session = engine.get_session(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        for record in session.records():
            await websocket.send_json(
                {
                    "type": f"{record['speaker']}_turn",
                    "index": record["index"],
                    "text": record["text"],
                    "dialogue_act": record["dialogue_act"],
                    "replay": True,
                }
            )
        await websocket.send_json({"type": "ready"})
        try:
            while True:
                frame = await websocket.receive_json()
                if frame.get("type") != "user_turn" or not frame.get("text"):
                    await websocket.send_json(
                        {"type": "error", "message": "expected {type: user_turn, text}"}
                    )
                    continue
                text = frame["text"]
                reply, debug = engine.post_user_turn(session_id, text)
                # Indices come from the committed turn, not a racy pre-read.
                system_index = debug["turn_index"]
                await websocket.send_json(
                    {"type": "user_turn", "index": system_index - 1, "text": text}
                )
                await websocket.send_json(
                    {"type": "system_turn", "index": system_index, "text": reply}
                )
                await websocket.send_json({"type": "debug_state", "debug": debug})
        except WebSocketDisconnect:
            logger.debug("stream closed for session %s", session_id)

    if frontend_dist is not None and frontend_dist.is_dir():
        app.mount("/ui", StaticFiles(directory=frontend_dist, html=True), name="ui")

    return app
