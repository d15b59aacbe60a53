"""Web portal: session-scoped HTTP/JSON facade over the wire protocol.

Each page handler performs exactly one broker round trip and returns a
``PageEnvelope``: ``{"data": ..., "times": [...]}`` where every timestamp in
the payload appears as an ``{"utc", "local"}`` pair, localized server-side
with the session's registered UTC offset. Browsers display the strings as
given and never do their own time arithmetic - that class of bug gets fixed
exactly once, here.

Error fidelity: broker ERR codes pass through unchanged (400/404/409/422/500),
transport failures surface as 502, session problems as 401; the body always
says which kind it was.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass
from typing import Any, Optional, Union

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import tz, wire

SESSION_TTL_S = 24 * 3600
_TOKEN_BYTES = 16  # 128 bits


@dataclass
class Session:
    token: str
    tz_offset_min: int
    broker_addr: tuple[str, int]
    created_at: float
    last_used: float


class SessionStore:
    """Token -> session, with idle expiry. All access under one lock."""

    def __init__(self, ttl_s: float = SESSION_TTL_S):
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, tz_offset_min: int, broker_addr: tuple[str, int]) -> Session:
        now = time.time()
        session = Session(
            token=secrets.token_hex(_TOKEN_BYTES),
            tz_offset_min=tz_offset_min,
            broker_addr=broker_addr,
            created_at=now,
            last_used=now,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def lookup(self, token: str) -> Session | None:
        now = time.time()
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if now - session.last_used > self.ttl_s:
                del self._sessions[token]
                return None
            session.last_used = now
            return session

    def drop(self, token: str) -> bool:
        with self._lock:
            return self._sessions.pop(token, None) is not None


class LoginBody(BaseModel):
    tz_offset_min: int
    broker: Optional[str] = None


class QosBody(BaseModel):
    deadline: str
    budget: Union[str, float, int]
    optimization: str


class ControlBody(BaseModel):
    action: str


def _fail(status: int, kind: str, message: str, code: int | None = None) -> HTTPException:
    return HTTPException(
        status_code=status,
        detail={"kind": kind, "code": code if code is not None else status, "message": message},
    )


class _Pager:
    """Collects every {utc, local} pair emitted while building one page."""

    def __init__(self, offset_min: int):
        self.offset_min = offset_min
        self.times: list[dict[str, str]] = []

    def pair(self, epoch: float) -> dict[str, str]:
        entry = {"utc": tz.iso_utc(epoch), "local": tz.localize(epoch, self.offset_min)}
        self.times.append(entry)
        return entry

    def pair_iso(self, utc_iso: str) -> dict[str, str]:
        return self.pair(tz.parse_iso(utc_iso))

    def envelope(self, data: Any) -> dict[str, Any]:
        return {"data": data, "times": self.times}


def create_app(
    default_broker: str = "127.0.0.1:9000",
    session_ttl_s: float = SESSION_TTL_S,
    call_timeout_s: float = 5.0,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="gmon portal", version="0.1.0")
    store = SessionStore(ttl_s=session_ttl_s)

    def call_broker(addr: tuple[str, int], verb: str, *args: str) -> wire.OkResponse:
        """The single broker round trip a handler is allowed."""
        try:
            with wire.BrokerClient(addr, timeout=call_timeout_s) as client:
                return client.call(verb, *args)
        except wire.BrokerError as exc:
            raise _fail(exc.code, "broker", exc.message, code=exc.code) from None
        except wire.TransportError as exc:
            raise _fail(502, "transport", str(exc)) from None
        except wire.MalformedResponse as exc:
            raise _fail(502, "transport", f"garbled reply: {exc}") from None

    def require_session(
        x_session_token: Optional[str] = Header(default=None),
    ) -> Session:
        if not x_session_token:
            raise _fail(401, "session", "missing X-Session-Token header")
        session = store.lookup(x_session_token)
        if session is None:
            raise _fail(401, "session", "unknown or expired session")
        return session

    # -- session ---------------------------------------------------------

    @app.post("/api/login")
    def login(body: LoginBody):
        try:
            offset = tz.check_offset(body.tz_offset_min)
        except ValueError as exc:
            raise _fail(422, "validation", str(exc)) from None
        try:
            addr = wire.parse_addr(body.broker or default_broker)
        except ValueError as exc:
            raise _fail(422, "validation", str(exc)) from None
        reply = call_broker(addr, "HELLO")
        version = reply.records[0][0] if reply.records else "?"
        if version != wire.PROTOCOL_VERSION:
            raise _fail(502, "transport", f"broker speaks protocol {version!r}, need {wire.PROTOCOL_VERSION!r}")
        session = store.create(offset, addr)
        pager = _Pager(offset)
        return pager.envelope(
            {
                "token": session.token,
                "tz_offset_min": offset,
                "server_time": pager.pair(time.time()),
            }
        )

    @app.post("/api/logout")
    def logout(session: Session = Depends(require_session)):
        store.drop(session.token)
        return {"data": {"ok": True}, "times": []}

    # -- pages -----------------------------------------------------------

    @app.get("/api/experiments")
    def experiments(session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "EXP-LIST")
        pager = _Pager(session.tz_offset_min)
        rows = [
            {"id": r[0], "name": r[1], "state": r[2]}
            for r in reply.records
            if len(r) >= 3
        ]
        return pager.envelope({"experiments": rows})

    @app.get("/api/experiments/{exp_id}/status")
    def status(exp_id: str, session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "EXP-STATUS", exp_id)
        pager = _Pager(session.tz_offset_min)
        data: dict[str, Any] = {"nodes": []}
        for record in reply.records:
            tag = record[0]
            if tag == "exp":
                data["experiment"] = {"id": record[1], "name": record[2], "state": record[3]}
            elif tag == "qos":
                data["qos"] = {
                    "deadline": pager.pair_iso(record[1]),
                    "budget": record[2],
                    "optimization": record[3],
                }
            elif tag == "progress":
                data["progress"] = {
                    "budget_spent": record[1],
                    "time_remaining_s": float(record[2]),
                }
            elif tag == "counts":
                counts = {
                    "Ready": int(record[1]),
                    "Running": int(record[2]),
                    "Completed": int(record[3]),
                    "Failed": int(record[4]),
                }
                data["jobs"] = {
                    "counts": counts,
                    "restart_all_available": counts["Failed"] > 0,
                }
            elif tag == "node":
                data["nodes"].append(_node_json(record[1:]))
        return pager.envelope(data)

    @app.get("/api/experiments/{exp_id}/qos")
    def qos_get(exp_id: str, session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "QOS-GET", exp_id)
        record = reply.records[0]
        pager = _Pager(session.tz_offset_min)
        return pager.envelope(
            {
                "deadline": pager.pair_iso(record[0]),
                "budget": record[1],
                "optimization": record[2],
            }
        )

    @app.put("/api/experiments/{exp_id}/qos")
    def qos_set(exp_id: str, body: QosBody, session: Session = Depends(require_session)):
        deadline_epoch = _parse_deadline_input(body.deadline, session.tz_offset_min)
        reply = call_broker(
            session.broker_addr,
            "QOS-SET",
            exp_id,
            tz.iso_utc(deadline_epoch),
            str(body.budget),
            body.optimization,
        )
        record = reply.records[0]
        pager = _Pager(session.tz_offset_min)
        return pager.envelope(
            {
                "feasibility": {
                    "verdict": record[0],
                    "time_ok": record[1] == "true",
                    "budget_ok": record[2] == "true",
                    "est_completion": pager.pair_iso(record[3]),
                    "est_cost": record[4],
                    "message": record[5],
                }
            }
        )

    @app.post("/api/experiments/{exp_id}/control")
    def control(exp_id: str, body: ControlBody, session: Session = Depends(require_session)):
        verb = {
            "Start": "EXP-START",
            "Stop": "EXP-STOP",
            "Shutdown": "EXP-SHUTDOWN",
        }.get(body.action)
        if verb is None:
            raise _fail(422, "validation", f"unknown action {body.action!r}")
        reply = call_broker(session.broker_addr, verb, exp_id)
        record = reply.records[0]
        return {"data": {"id": record[0], "state": record[1]}, "times": []}

    @app.get("/api/experiments/{exp_id}/jobs")
    def jobs(
        exp_id: str,
        offset: int = 0,
        limit: int = 50,
        state: Optional[str] = None,
        session: Session = Depends(require_session),
    ):
        args = [exp_id, str(offset), str(limit)]
        if state is not None:
            args.append(state)
        reply = call_broker(session.broker_addr, "JOB-LIST", *args)
        pager = _Pager(session.tz_offset_min)
        total = 0
        rows = []
        for record in reply.records:
            if record[0] == "total":
                total = int(record[1])
            else:
                rows.append(_job_json(record))
        return pager.envelope(
            {"total": total, "offset": offset, "limit": limit, "jobs": rows}
        )

    @app.get("/api/experiments/{exp_id}/jobs/{job_id}")
    def job_detail(exp_id: str, job_id: str, session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "JOB-INFO", exp_id, job_id)
        pager = _Pager(session.tz_offset_min)
        job = _job_json(reply.records[0])
        job["est_cpu_s"] = float(reply.records[0][8])
        events = []
        for record in reply.records[1:]:
            if record[0] != "event":
                continue
            events.append(
                {
                    "kind": record[1],
                    "at": pager.pair_iso(record[2]),
                    "node": record[3] or None,
                    "cpu_seconds": float(record[4]) if record[4] else None,
                }
            )
        return pager.envelope({"job": job, "events": events})

    @app.post("/api/experiments/{exp_id}/jobs/{job_id}/restart")
    def restart_job(exp_id: str, job_id: str, session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "JOB-RESTART", exp_id, job_id)
        record = reply.records[0]
        return {"data": {"id": record[0], "state": record[1]}, "times": []}

    @app.post("/api/experiments/{exp_id}/restart-failed")
    def restart_failed(exp_id: str, session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "JOB-RESTART-FAILED", exp_id)
        return {"data": {"restarted": int(reply.records[0][0])}, "times": []}

    @app.get("/api/resources")
    def resources(session: Session = Depends(require_session)):
        reply = call_broker(session.broker_addr, "RES-LIST")
        pager = _Pager(session.tz_offset_min)
        return pager.envelope({"nodes": [_node_json(r) for r in reply.records]})

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _job_json(record: tuple[str, ...]) -> dict[str, Any]:
    return {
        "id": record[0],
        "name": record[1],
        "state": record[2],
        "assigned_node": record[3] or None,
        "execution_time_s": float(record[4]) if record[4] else None,
        "cost": record[5],
        "attempts": int(record[6]),
        "remarks": record[7],
    }


def _node_json(record: tuple[str, ...]) -> dict[str, Any]:
    return {
        "id": record[0],
        "server_name": record[1],
        "hostname": record[2],
        "rate": float(record[3]),
        "speed": float(record[4]),
        "capacity": int(record[5]),
        "status": record[6],
        "assigned_count": int(record[7]),
        "completed_count": int(record[8]),
        "remarks": record[9],
    }


def _parse_deadline_input(text: str, offset_min: int) -> float:
    """Absolute ISO passes through; naive strings mean session-local time."""
    try:
        return tz.parse_iso(text)
    except ValueError:
        pass
    try:
        naive = tz.parse_naive(text)
    except ValueError:
        raise _fail(422, "validation", f"bad deadline {text!r}") from None
    from datetime import timedelta, timezone as dt_timezone

    return naive.replace(tzinfo=dt_timezone(timedelta(minutes=offset_min))).timestamp()
