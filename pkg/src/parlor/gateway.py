"""Operator gateway: WebSocket wire protocol between rooms and clients.

Transport is one JSON message per frame. Every message carries
`schema_version`. Client messages:

    {"schema_version": 1, "type": "join", "room_id": r, "player_id": p}
    {"schema_version": 1, "type": "snapshot_request", "room_id": r, "player_id": p}
    {"schema_version": 1, "type": "whisper", "room_id": r, "player_id": p,
     "agent_id": a, "target_id": t | null, "text": s}
    {"schema_version": 1, "type": "trigger", "room_id": r, "player_id": p,
     "agent_id": a, "bundle_id": b, "target_id": t | null}

Server messages: `ack` (with `of`), `error` (with `code` and `message`),
`snapshot` (full room snapshot), `event` (one broadcast room event, in room
order). Sessions are independent readers/writers; all room mutation happens
on the room runner's single loop.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ParlorError, UnknownAgent, UnknownBundle, ValidationError
from .model import BundleCatalog
from .runtime import Room
from .whisper import WHISPER_MAX_CHARS, Whisper

SCHEMA_VERSION = 1

CLIENT_TYPES = ("join", "whisper", "trigger", "snapshot_request")


class ProtocolError(ParlorError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def server_message(msg_type: str, **payload: Any) -> dict[str, Any]:
    out = {"schema_version": SCHEMA_VERSION, "type": msg_type}
    out.update(payload)
    return out


def error_message(code: str, message: str) -> dict[str, Any]:
    return server_message("error", code=code, message=message)


def encode_message(msg: dict[str, Any]) -> str:
    return json.dumps(msg, sort_keys=True)


def decode_client_message(raw: str) -> dict[str, Any]:
    """Parse and structurally validate one client frame."""
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad_message", f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("bad_message", "message must be an object")
    if obj.get("type") not in CLIENT_TYPES:
        raise ProtocolError("bad_message", f"unknown type {obj.get('type')!r}")
    for key in ("room_id", "player_id"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise ProtocolError("bad_message", f"missing {key}")
    if obj["type"] == "whisper":
        text = obj.get("text")
        if not isinstance(text, str) or not text:
            raise ProtocolError("bad_message", "whisper text must be non-empty")
        if len(text) > WHISPER_MAX_CHARS:
            raise ProtocolError(
                "text_too_long", f"whisper exceeds {WHISPER_MAX_CHARS} characters"
            )
        if not isinstance(obj.get("agent_id"), str):
            raise ProtocolError("bad_message", "whisper needs agent_id")
    if obj["type"] == "trigger":
        if not isinstance(obj.get("agent_id"), str):
            raise ProtocolError("bad_message", "trigger needs agent_id")
        if not isinstance(obj.get("bundle_id"), str):
            raise ProtocolError("bad_message", "trigger needs bundle_id")
    return obj


@dataclass
class Session:
    """One connected client: its identity plus an outbound message queue."""

    player_id: str
    room_id: str
    queue: "asyncio.Queue[dict[str, Any]]" = field(default_factory=asyncio.Queue)
    joined: bool = False


class RoomRunner:
    """Owns one room's event loop; sessions interact only through it."""

    def __init__(self, room: Room, owners: dict[str, str], tick_seconds: float = 0.25):
        self.room = room
        self.owners = owners  # agent id -> player id
        self.tick_seconds = tick_seconds
        self.sessions: list[Session] = []
        self._task: Optional[asyncio.Task] = None
        self.room.subscribe(self._broadcast)

    def _broadcast(self, event) -> None:
        msg = server_message(
            "event", room_id=self.room.room_id, event=event.to_json_dict()
        )
        for session in self.sessions:
            if session.joined:
                session.queue.put_nowait(msg)

    def owned_agent(self, player_id: str) -> Optional[str]:
        for agent_id, owner in self.owners.items():
            if owner == player_id:
                return agent_id
        return None

    def attach(self, session: Session) -> None:
        if session not in self.sessions:
            self.sessions.append(session)

    def detach(self, session: Session) -> None:
        if session in self.sessions:
            self.sessions.remove(session)

    async def run(self) -> None:
        while True:
            await asyncio.sleep(self.tick_seconds)
            self.room.advance_round()

    def start(self) -> None:
        if self._task is None:
            self._task = asyncio.get_event_loop().create_task(self.run())

    def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            self._task = None


def handle_client_message(
    runner: RoomRunner, session: Session, msg: dict[str, Any]
) -> dict[str, Any]:
    """Apply one validated client message; returns the direct response.

    Side effects (whisper/trigger submission) are queued on the room and
    take effect next round; `join` also subscribes the session to the
    event stream.
    """
    msg_type = msg["type"]
    room = runner.room

    if msg_type == "join":
        session.joined = True
        runner.attach(session)
        return server_message(
            "snapshot", room_id=room.room_id, snapshot=room.snapshot()
        )

    if not session.joined:
        return error_message("not_joined", "join the room first")

    if msg_type == "snapshot_request":
        return server_message(
            "snapshot", room_id=room.room_id, snapshot=room.snapshot()
        )

    agent_id = msg.get("agent_id", "")
    if agent_id not in room.agents:
        return error_message("unknown_agent", f"no agent {agent_id!r} in room")
    if runner.owners.get(agent_id) != session.player_id:
        return error_message(
            "not_owner", f"player {session.player_id!r} does not own {agent_id!r}"
        )
    target_id = msg.get("target_id")
    if target_id is not None and target_id not in room.agents:
        return error_message("unknown_agent", f"no agent {target_id!r} in room")

    if msg_type == "whisper":
        w = Whisper(
            player_id=session.player_id,
            agent_id=agent_id,
            target_id=target_id,
            text=msg["text"],
            logical_time=room.logical_clock,
        )
        room.submit_whisper(w)
        return server_message("ack", of="whisper", room_id=room.room_id)

    if msg_type == "trigger":
        try:
            room.submit_trigger(agent_id, msg["bundle_id"], target_id)
        except UnknownBundle:
            return error_message("unknown_bundle", f"no bundle {msg['bundle_id']!r}")
        except ValidationError as exc:
            return error_message("bundle_blocked", str(exc))
        except UnknownAgent as exc:
            return error_message("unknown_agent", str(exc))
        return server_message("ack", of="trigger", room_id=room.room_id)

    return error_message("bad_message", f"unhandled type {msg_type!r}")


def trigger_menu(catalog: BundleCatalog, max_pglv: int) -> list[dict[str, Any]]:
    """Bundle menu for the panel, grouped by pool, content-filtered."""
    menu = []
    for b in catalog.bundles:
        if b.pglv > max_pglv:
            continue
        menu.append({"id": b.id, "name": b.name, "pool": b.pool.value})
    return menu


def create_app(runners: dict[str, RoomRunner]):
    """FastAPI app exposing /ws plus a couple of JSON lookups."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="parlor gateway")

    @app.on_event("startup")
    async def _start_rooms() -> None:
        for runner in runners.values():
            runner.start()

    @app.on_event("shutdown")
    async def _stop_rooms() -> None:
        for runner in runners.values():
            runner.stop()

    @app.get("/rooms")
    async def list_rooms():
        return {
            "rooms": [
                {
                    "room_id": rid,
                    "agents": sorted(r.room.agents),
                    "owners": r.owners,
                }
                for rid, r in sorted(runners.items())
            ]
        }

    @app.get("/rooms/{room_id}/bundles")
    async def list_bundles(room_id: str):
        runner = runners.get(room_id)
        if runner is None:
            return {"error": "unknown_room"}
        return {
            "bundles": trigger_menu(
                runner.room.catalog, runner.room.config.grounding.max_pglv
            )
        }

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        session: Optional[Session] = None
        runner: Optional[RoomRunner] = None
        pump: Optional[asyncio.Task] = None

        async def pump_events(s: Session) -> None:
            while True:
                msg = await s.queue.get()
                await ws.send_text(encode_message(msg))

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = decode_client_message(raw)
                except ProtocolError as exc:
                    await ws.send_text(encode_message(error_message(exc.code, str(exc))))
                    continue
                target_runner = runners.get(msg["room_id"])
                if target_runner is None:
                    await ws.send_text(
                        encode_message(error_message("unknown_room", msg["room_id"]))
                    )
                    continue
                if session is None:
                    session = Session(player_id=msg["player_id"], room_id=msg["room_id"])
                    runner = target_runner
                    pump = asyncio.get_event_loop().create_task(pump_events(session))
                response = handle_client_message(target_runner, session, msg)
                await ws.send_text(encode_message(response))
        except WebSocketDisconnect:
            pass
        finally:
            if pump is not None:
                pump.cancel()
            if runner is not None and session is not None:
                runner.detach(session)

    return app
