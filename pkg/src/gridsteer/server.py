"""TCP front end: verb table, arg parsing, and the command loop.

Connection handlers run on socketserver threads but never touch broker
state; each request becomes a closure on the command queue and the single
command thread executes it (tick first, then the operation). Responses
travel back through a Future.
"""

from __future__ import annotations

import queue
import socketserver
import sys
import threading
import traceback
from concurrent.futures import Future
from decimal import Decimal

from . import tz
from .broker import Broker
from .model import (
    DomainError,
    ExperimentAction,
    GridNode,
    InvalidState,
    InvalidTransition,
    Job,
    JobState,
    NotFound,
    Optimization,
    QoSParams,
    ValidationError,
)
from .money import fmt_money, parse_money
from .wire import (
    ERR_BAD_REQUEST,
    ERR_CONFLICT,
    ERR_INTERNAL,
    ERR_INVALID,
    ERR_NOT_FOUND,
    MAX_LINE,
    ErrResponse,
    MalformedLine,
    OkResponse,
    Request,
    Response,
    encode_response,
    parse_request,
)

_COMMAND_TIMEOUT_S = 30.0
_IDLE_TIMEOUT_S = 300.0

_MODES = {
    "time": Optimization.TIME_MIN,
    "timemin": Optimization.TIME_MIN,
    "cost": Optimization.COST_MIN,
    "costmin": Optimization.COST_MIN,
}


class _ArgError(ValueError):
    """Wrong argument shape for a verb; maps to ERR 400."""


def _need(args: tuple[str, ...], count: int, usage: str) -> None:
    if len(args) != count:
        raise _ArgError(f"expected {count} argument(s): {usage}")


def _parse_deadline(text: str) -> float:
    try:
        return tz.parse_iso(text)
    except ValueError as exc:
        raise ValidationError("deadline", str(exc)) from None


def _parse_budget(text: str) -> Decimal:
    try:
        amount = parse_money(text)
    except ValueError as exc:
        raise ValidationError("budget", str(exc)) from None
    if amount < 0:
        raise ValidationError("budget", "must be >= 0")
    return amount


def _parse_mode(text: str) -> Optimization:
    mode = _MODES.get(text.strip().lower())
    if mode is None:
        raise ValidationError("optimization", f"unknown mode {text!r}")
    return mode


def _parse_state(text: str) -> JobState:
    for state in JobState:
        if state.value == text:
            return state
    raise ValidationError("state", f"unknown job state {text!r}")


def _parse_int_field(text: str, field_name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValidationError(field_name, f"not an integer: {text!r}") from None


def _fmt_opt_float(value: float | None) -> str:
    return "" if value is None else repr(value)


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _job_row(job: Job) -> tuple[str, ...]:
    return (
        job.id,
        job.name,
        job.state.value,
        job.assigned_node or "",
        _fmt_opt_float(job.execution_time),
        fmt_money(job.cost_incurred),
        str(job.attempts),
        job.remarks,
    )


def _node_row(node: GridNode) -> tuple[str, ...]:
    return (
        node.id,
        node.server_name,
        node.hostname,
        repr(node.rate),
        repr(node.speed),
        str(node.capacity),
        node.status.value,
        str(node.assigned_count),
        str(node.completed_count),
        node.remarks,
    )


# -- verb handlers ----------------------------------------------------------


def _h_hello(broker: Broker, args) -> OkResponse:
    _need(args, 0, "HELLO")
    return OkResponse(((broker.hello(),),))


def _h_exp_create(broker: Broker, args) -> OkResponse:
    if len(args) < 5:
        raise _ArgError("expected: EXP-CREATE name deadline budget mode job=est ...")
    name, deadline_text, budget_text, mode_text = args[:4]
    qos = QoSParams(
        deadline=_parse_deadline(deadline_text),
        budget=_parse_budget(budget_text),
        optimization=_parse_mode(mode_text),
    )
    specs: list[tuple[str, float]] = []
    for i, spec in enumerate(args[4:]):
        job_name, sep, est_text = spec.partition("=")
        if not sep:
            raise ValidationError(f"jobs[{i}]", f"expected name=est_cpu_s, got {spec!r}")
        try:
            est = float(est_text)
        except ValueError:
            raise ValidationError(
                f"jobs[{i}].est_cpu_s", f"not a number: {est_text!r}"
            ) from None
        specs.append((job_name, est))
    exp = broker.create_experiment(name, qos, specs)
    return OkResponse(((exp.id,),))


def _h_exp_list(broker: Broker, args) -> OkResponse:
    _need(args, 0, "EXP-LIST")
    return OkResponse(
        tuple((e.id, e.name, e.state.value) for e in broker.list_experiments())
    )


def _control(action: ExperimentAction):
    def handler(broker: Broker, args) -> OkResponse:
        _need(args, 1, f"EXP-{action.value.upper()} experiment_id")
        exp = broker.control(args[0], action)
        return OkResponse(((exp.id, exp.state.value),))

    return handler


def _h_exp_status(broker: Broker, args) -> OkResponse:
    _need(args, 1, "EXP-STATUS experiment_id")
    st = broker.experiment_status(args[0])
    records: list[tuple[str, ...]] = [
        ("exp", st.experiment_id, st.name, st.state.value),
        (
            "qos",
            tz.iso_utc(st.qos.deadline),
            fmt_money(st.qos.budget),
            st.qos.optimization.value,
        ),
        ("progress", fmt_money(st.budget_spent), repr(st.time_remaining_s)),
        ("counts",) + tuple(str(st.counts[s]) for s in JobState),
    ]
    records.extend(("node",) + _node_row(n) for n in st.nodes)
    return OkResponse(tuple(records))


def _h_qos_set(broker: Broker, args) -> OkResponse:
    _need(args, 4, "QOS-SET experiment_id deadline budget mode")
    qos = QoSParams(
        deadline=_parse_deadline(args[1]),
        budget=_parse_budget(args[2]),
        optimization=_parse_mode(args[3]),
    )
    report = broker.set_qos(args[0], qos)
    return OkResponse(
        ((
            report.verdict.value,
            _fmt_bool(report.time_ok),
            _fmt_bool(report.budget_ok),
            tz.iso_utc(report.est_completion),
            fmt_money(report.est_cost),
            report.message,
        ),)
    )


def _h_qos_get(broker: Broker, args) -> OkResponse:
    _need(args, 1, "QOS-GET experiment_id")
    qos = broker.get_qos(args[0])
    return OkResponse(
        ((tz.iso_utc(qos.deadline), fmt_money(qos.budget), qos.optimization.value),)
    )


def _h_job_list(broker: Broker, args) -> OkResponse:
    if len(args) not in (3, 4):
        raise _ArgError("expected: JOB-LIST experiment_id offset limit [state]")
    offset = _parse_int_field(args[1], "offset")
    limit = _parse_int_field(args[2], "limit")
    state = _parse_state(args[3]) if len(args) == 4 else None
    total, jobs = broker.list_jobs(args[0], offset=offset, limit=limit, state=state)
    records = [("total", str(total), str(offset), str(limit))]
    records.extend(_job_row(j) for j in jobs)
    return OkResponse(tuple(records))


def _h_job_info(broker: Broker, args) -> OkResponse:
    _need(args, 2, "JOB-INFO experiment_id job_id")
    job, events = broker.job_info(args[0], args[1])
    records = [_job_row(job) + (repr(job.est_cpu_s),)]
    records.extend(
        (
            "event",
            ev.kind.value,
            tz.iso_utc(ev.at),
            ev.node or "",
            _fmt_opt_float(ev.cpu_seconds),
        )
        for ev in events
    )
    return OkResponse(tuple(records))


def _h_job_restart(broker: Broker, args) -> OkResponse:
    _need(args, 2, "JOB-RESTART experiment_id job_id")
    job = broker.restart_job(args[0], args[1])
    return OkResponse(((job.id, job.state.value),))


def _h_job_restart_failed(broker: Broker, args) -> OkResponse:
    _need(args, 1, "JOB-RESTART-FAILED experiment_id")
    count = broker.restart_failed(args[0])
    return OkResponse(((str(count),),))


def _h_res_list(broker: Broker, args) -> OkResponse:
    _need(args, 0, "RES-LIST")
    return OkResponse(tuple(_node_row(n) for n in broker.list_resources()))


VERB_TABLE = {
    "HELLO": _h_hello,
    "EXP-CREATE": _h_exp_create,
    "EXP-LIST": _h_exp_list,
    "EXP-START": _control(ExperimentAction.START),
    "EXP-STOP": _control(ExperimentAction.STOP),
    "EXP-SHUTDOWN": _control(ExperimentAction.SHUTDOWN),
    "EXP-STATUS": _h_exp_status,
    "QOS-SET": _h_qos_set,
    "QOS-GET": _h_qos_get,
    "JOB-LIST": _h_job_list,
    "JOB-INFO": _h_job_info,
    "JOB-RESTART": _h_job_restart,
    "JOB-RESTART-FAILED": _h_job_restart_failed,
    "RES-LIST": _h_res_list,
}


def serve_request(broker: Broker, req: Request) -> Response:
    """Tick, run one verb, translate failures. Command-thread only."""
    try:
        handler = VERB_TABLE.get(req.verb)
        if handler is None:
            return ErrResponse(ERR_BAD_REQUEST, f"unknown verb {req.verb}")
        broker.tick()
        return handler(broker, req.args)
    except NotFound as exc:
        return ErrResponse(ERR_NOT_FOUND, str(exc))
    except (InvalidTransition, InvalidState) as exc:
        return ErrResponse(ERR_CONFLICT, str(exc))
    except ValidationError as exc:
        return ErrResponse(ERR_INVALID, str(exc))
    except _ArgError as exc:
        return ErrResponse(ERR_BAD_REQUEST, str(exc))
    except DomainError as exc:
        return ErrResponse(ERR_INVALID, str(exc))
    except Exception as exc:  # pragma: no cover - genuine bugs
        traceback.print_exc(file=sys.stderr)
        return ErrResponse(ERR_INTERNAL, f"internal error: {type(exc).__name__}")


class _Handler(socketserver.StreamRequestHandler):
    timeout = _IDLE_TIMEOUT_S

    def handle(self):
        server: _TcpServer = self.server  # type: ignore[assignment]
        while True:
            try:
                line = self.rfile.readline(MAX_LINE + 1)
            except (OSError, ValueError):
                return
            if not line:
                return
            if not line.endswith(b"\n"):
                self._respond(ErrResponse(ERR_BAD_REQUEST, "line too long or unterminated"))
                return  # framing is lost; drop the connection
            try:
                req = parse_request(line)
            except MalformedLine as exc:
                self._respond(ErrResponse(ERR_BAD_REQUEST, str(exc)))
                continue
            resp = server.broker_server.execute(req)
            if not self._respond(resp):
                return

    def _respond(self, resp: Response) -> bool:
        try:
            self.wfile.write(encode_response(resp))
            return True
        except (OSError, ValueError):
            return False


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    broker_server: "BrokerServer"


class BrokerServer:
    """Listener + command loop + optional wall-clock ticker."""

    def __init__(
        self,
        broker: Broker,
        host: str = "127.0.0.1",
        port: int = 9000,
        tick_interval_s: float | None = None,
    ):
        self.broker = broker
        self._queue: "queue.Queue[tuple | None]" = queue.Queue()
        self._tcp = _TcpServer((host, port), _Handler)
        self._tcp.broker_server = self
        self._threads: list[threading.Thread] = []
        self._tick_interval_s = tick_interval_s
        self._stop = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> None:
        self._threads = [
            threading.Thread(target=self._command_loop, name="grb-commands", daemon=True),
            threading.Thread(target=self._tcp.serve_forever, name="grb-listener", daemon=True),
        ]
        if self._tick_interval_s:
            self._threads.append(
                threading.Thread(target=self._ticker, name="grb-ticker", daemon=True)
            )
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        self._tcp.shutdown()
        self._tcp.server_close()
        self._queue.put(None)
        for t in self._threads:
            t.join(timeout=5.0)

    def execute(self, req: Request) -> Response:
        """Called from connection threads: queue the request, await the reply."""
        future: Future = Future()
        self._queue.put((req, future))
        try:
            return future.result(timeout=_COMMAND_TIMEOUT_S)
        except TimeoutError:
            return ErrResponse(ERR_INTERNAL, "command timed out")

    def _command_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            req, future = item
            if req is None:  # bare tick from the ticker thread
                try:
                    self.broker.tick()
                except Exception:  # pragma: no cover
                    traceback.print_exc(file=sys.stderr)
                continue
            future.set_result(serve_request(self.broker, req))

    def _ticker(self) -> None:
        while not self._stop.wait(self._tick_interval_s):
            self._queue.put((None, None))

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
