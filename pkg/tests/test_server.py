"""Live TCP coverage: every verb, the error taxonomy, framing recovery,
and request serialization under concurrent clients."""

import socket
import threading

import pytest

from gridsteer.broker import Broker
from gridsteer.clock import VirtualClock
from gridsteer.model import JobState
from gridsteer.nodesim import EventLog, GridSim
from gridsteer.server import BrokerServer
from gridsteer.tz import iso_utc
from gridsteer.wire import MAX_LINE, BrokerClient, BrokerError, ErrResponse, Request

from randgrid import T0, mk_nodes

DEADLINE = iso_utc(T0 + 400)


@pytest.fixture()
def farm():
    """A two-node grid behind a live server on an ephemeral port."""
    configs = mk_nodes([("econ-a", 1.0, 1.0), ("fast-b", 3.0, 2.0)])
    log = EventLog(None)
    sim = GridSim(configs, seed=42, start=T0, log=log)
    clock = VirtualClock(T0)
    broker = Broker(sim, clock, log=log)
    with BrokerServer(broker, port=0) as server:
        with BrokerClient(server.address) as client:
            yield client, clock, server


def create_sweep(client, mode="cost", jobs=4):
    args = ["sweep", DEADLINE, "1000.00", mode]
    args += [f"p{i}=100" for i in range(1, jobs + 1)]
    return client.call("EXP-CREATE", *args).records[0][0]


# ------------------------------------------------------------------- verbs


def test_hello(farm):
    client, clock, _ = farm
    assert client.call("HELLO").records == (("1",),)


def test_create_list_and_qos_round_trip(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client, mode="CostMin")  # mode tokens are case-blind
    assert exp_id == "exp1"
    assert client.call("EXP-LIST").records == ((exp_id, "sweep", "Configured"),)
    assert client.call("QOS-GET", exp_id).records == (
        (DEADLINE, "1000.00", "CostMin"),
    )


def test_full_run_over_the_wire(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client, mode="cost")
    assert client.call("EXP-START", exp_id).records == ((exp_id, "Running"),)
    # virtual time: nothing finishes until the clock moves; cost mode keeps
    # the expensive node idle, so the cheap one works the queue alone
    counts = _counts(client, exp_id)
    assert counts == {"Ready": 3, "Running": 1, "Completed": 0, "Failed": 0}
    # each status request ticks the broker at the new virtual instant,
    # standing in for the wall-clock ticker a real deployment runs
    for step, done in [(100, 1), (200, 2), (300, 3), (400, 4)]:
        clock.advance_to(T0 + step)
        assert _counts(client, exp_id)["Completed"] == done
    counts = _counts(client, exp_id)
    assert counts == {"Ready": 0, "Running": 0, "Completed": 4, "Failed": 0}
    status = {r[0]: r for r in client.call("EXP-STATUS", exp_id).records}
    assert status["progress"][1] == "400.00"
    assert status["exp"][3] == "Running"


def _counts(client, exp_id):
    records = {r[0]: r for r in client.call("EXP-STATUS", exp_id).records}
    values = [int(x) for x in records["counts"][1:]]
    return dict(zip([s.value for s in JobState], values))


def test_exp_status_record_shape(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client)
    records = client.call("EXP-STATUS", exp_id).records
    tags = [r[0] for r in records]
    assert tags == ["exp", "qos", "progress", "counts", "node", "node"]
    qos = records[1]
    assert qos[1:] == (DEADLINE, "1000.00", "CostMin")
    node_ids = [r[1] for r in records if r[0] == "node"]
    assert node_ids == ["econ-a", "fast-b"]


def test_job_list_paging_over_the_wire(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client, jobs=7)
    resp = client.call("JOB-LIST", exp_id, "2", "3")
    assert resp.records[0] == ("total", "7", "2", "3")
    assert [r[0] for r in resp.records[1:]] == ["j0003", "j0004", "j0005"]
    ready_only = client.call("JOB-LIST", exp_id, "0", "50", "Ready")
    assert ready_only.records[0][1] == "7"


def test_job_info_and_restart_conflict(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client)
    info = client.call("JOB-INFO", exp_id, "j0002").records
    assert info[0][0] == "j0002" and info[0][2] == "Ready"
    assert info[0][-1] == "100.0"  # trailing field: estimated cpu seconds
    with pytest.raises(BrokerError) as exc:
        client.call("JOB-RESTART", exp_id, "j0002")
    assert exc.value.code == 409
    assert client.call("JOB-RESTART-FAILED", exp_id).records == (("0",),)


def test_qos_set_reports_feasibility(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client)
    row = client.call(
        "QOS-SET", exp_id, iso_utc(T0 + 200), "1000.00", "time"
    ).records[0]
    verdict, time_ok, budget_ok, est_completion, est_cost, message = row
    assert verdict == "Feasible"
    assert (time_ok, budget_ok) == ("true", "true")
    assert est_completion == iso_utc(T0 + 150)
    assert est_cost == "550.00"
    assert "estimated completion" in message
    # and the new knobs stuck
    assert client.call("QOS-GET", exp_id).records[0][2] == "TimeMin"


def test_stop_and_shutdown(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client)
    client.call("EXP-START", exp_id)
    assert client.call("EXP-STOP", exp_id).records == ((exp_id, "Stopped"),)
    assert client.call("EXP-SHUTDOWN", exp_id).records == ((exp_id, "Shutdown"),)
    with pytest.raises(BrokerError) as exc:
        client.call("EXP-START", exp_id)
    assert exc.value.code == 409


def test_res_list(farm):
    client, clock, _ = farm
    rows = client.call("RES-LIST").records
    assert [r[0] for r in rows] == ["econ-a", "fast-b"]
    assert rows[0][3] == "1.0" and rows[1][4] == "2.0"  # rate, speed
    assert rows[0][6] == "Up"


# ----------------------------------------------------------- error taxonomy


def test_error_codes(farm):
    client, clock, _ = farm
    exp_id = create_sweep(client)

    def code_of(*args):
        resp = client.call_raw(Request(args[0], tuple(args[1:])))
        assert isinstance(resp, ErrResponse), args
        return resp.code, resp.message

    code, msg = code_of("NO-SUCH-VERB")
    assert code == 400 and msg == "unknown verb NO-SUCH-VERB"
    assert code_of("HELLO", "extra")[0] == 400
    assert code_of("EXP-STATUS")[0] == 400
    assert code_of("EXP-STATUS", "exp99")[0] == 404
    assert code_of("JOB-INFO", exp_id, "j9999")[0] == 404
    assert code_of("EXP-STOP", exp_id)[0] == 409  # configured, not running
    assert code_of("EXP-CREATE", "x", DEADLINE, "12.x34", "cost", "a=1")[0] == 422
    assert code_of("EXP-CREATE", "x", "yesterday", "10", "cost", "a=1")[0] == 422
    assert code_of("EXP-CREATE", "x", DEADLINE, "10", "fastest", "a=1")[0] == 422
    assert code_of("EXP-CREATE", "x", DEADLINE, "10", "cost", "a=ten")[0] == 422
    assert code_of("EXP-CREATE", "x", DEADLINE, "10", "cost", "broken")[0] == 422
    assert code_of("JOB-LIST", exp_id, "zero", "50")[0] == 422
    assert code_of("JOB-LIST", exp_id, "0", "9999")[0] == 422
    assert code_of("JOB-LIST", exp_id, "0", "50", "Sleeping")[0] == 422
    assert code_of("QOS-SET", exp_id, DEADLINE, "-5", "cost")[0] == 422
    # the connection survived all of that
    assert client.call("HELLO").records == (("1",),)


# ------------------------------------------------------------------ framing


def test_malformed_line_gets_400_and_connection_survives(farm):
    client, clock, server = farm
    with socket.create_connection(server.address, timeout=5.0) as raw:
        reader = raw.makefile("rb")
        raw.sendall(b"hello lowercase\n")
        assert reader.readline().startswith(b"ERR\t400\t")
        raw.sendall(b"HELLO\n")
        assert reader.readline() == b"OK\t1\n"
        assert reader.readline() == b"1\n"


def test_oversize_line_gets_400_then_close(farm):
    client, clock, server = farm
    with socket.create_connection(server.address, timeout=5.0) as raw:
        reader = raw.makefile("rb")
        raw.sendall(b"HELLO\t" + b"x" * (MAX_LINE + 64) + b"\n")
        line = reader.readline()
        assert line.startswith(b"ERR\t400\t") and b"too long" in line
        assert reader.readline() == b""  # server dropped the connection


def test_non_utf8_line_gets_400(farm):
    client, clock, server = farm
    with socket.create_connection(server.address, timeout=5.0) as raw:
        reader = raw.makefile("rb")
        raw.sendall(b"HELLO\t\xff\xfe\n")
        assert reader.readline().startswith(b"ERR\t400\t")


def test_empty_connection_close_is_quiet(farm):
    client, clock, server = farm
    with socket.create_connection(server.address, timeout=5.0):
        pass  # connect and hang up without sending anything
    assert client.call("HELLO").records == (("1",),)


# -------------------------------------------------------------- concurrency


def test_concurrent_clients_serialize_cleanly(farm):
    client, clock, server = farm
    exp_id = create_sweep(client, jobs=6)
    client.call("EXP-START", exp_id)
    errors = []

    def worker(n):
        try:
            with BrokerClient(server.address) as c:
                for _ in range(25):
                    rows = c.call("EXP-STATUS", exp_id).records
                    counts = next(r for r in rows if r[0] == "counts")
                    assert sum(int(x) for x in counts[1:]) == 6
                    c.call("EXP-LIST")
                    c.call("RES-LIST")
        except Exception as exc:  # surface on the main thread
            errors.append((n, exc))

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30)
    assert errors == []


def test_server_stop_refuses_new_connections():
    configs = mk_nodes([("solo", 1.0, 1.0)])
    sim = GridSim(configs, seed=1, start=T0, log=EventLog(None))
    broker = Broker(sim, VirtualClock(T0), log=sim.log)
    server = BrokerServer(broker, port=0)
    server.start()
    addr = server.address
    with BrokerClient(addr) as client:
        assert client.call("HELLO").records == (("1",),)
    server.stop()
    with pytest.raises(Exception):
        with socket.create_connection(addr, timeout=1.0) as s:
            s.sendall(b"HELLO\n")
            if s.makefile("rb").readline() == b"":
                raise ConnectionError("closed")
