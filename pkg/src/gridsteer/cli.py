"""Command-line entry points: grbd (broker daemon), gmond (web portal),
gmon-cli (one-shot wire client).

Flags beat environment variables beat defaults. Relevant environment:
GRIDSTEER_LISTEN, GRIDSTEER_SEED, GRIDSTEER_EVENT_LOG, GRIDSTEER_BROKER,
GRIDSTEER_GRB, GRIDSTEER_HTTP, GRIDSTEER_STATIC.
"""

from __future__ import annotations

import argparse
import os
import signal
import sys
import threading

from . import tz, wire
from .broker import Broker, drive_to_completion
from .clock import VirtualClock
from .model import ExperimentAction, JobState
from .money import fmt_money
from .nodesim import EventLog
from .scenario import SchemaError, load_scenario
from .server import BrokerServer


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(name, fallback)


def grbd_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="grbd", description="Grid broker daemon: runs a scenario and serves the wire protocol."
    )
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument(
        "--listen",
        default=_env("GRIDSTEER_LISTEN", f"127.0.0.1:{wire.DEFAULT_PORT}"),
        help="host:port to serve on (default 127.0.0.1:9000)",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument(
        "--clock",
        choices=("virtual", "real"),
        default=None,
        help="override the scenario clock mode",
    )
    parser.add_argument(
        "--event-log",
        default=_env("GRIDSTEER_EVENT_LOG"),
        help="append event lines to this file ('-' for stdout)",
    )
    parser.add_argument(
        "--tick-interval",
        type=float,
        default=0.25,
        help="wall seconds between background ticks (real clock mode)",
    )
    parser.add_argument(
        "--run-to-completion",
        action="store_true",
        help="batch mode: start the experiment, drive the virtual clock until done, print a summary, exit",
    )
    parser.add_argument(
        "--max-sim-s",
        type=float,
        default=None,
        help="stop driving after this much simulated time (batch mode)",
    )
    args = parser.parse_args(argv)

    seed_env = _env("GRIDSTEER_SEED")
    seed_override = args.seed if args.seed is not None else (
        int(seed_env) if seed_env else None
    )

    try:
        sc = load_scenario(args.scenario)
    except (OSError, SchemaError) as exc:
        print(f"grbd: cannot load scenario: {exc}", file=sys.stderr)
        return 2
    from dataclasses import replace as dc_replace

    if seed_override is not None:
        sc = dc_replace(sc, seed=seed_override)
    if args.clock is not None:
        sc = dc_replace(sc, clock_mode=args.clock)

    log_stream = None
    if args.event_log == "-":
        log_stream = sys.stdout
    elif args.event_log:
        log_stream = open(args.event_log, "w", encoding="utf-8")
    log = EventLog(log_stream)

    clock = sc.make_clock()
    sim = sc.make_sim(log=log)
    broker = Broker(sim, clock, log=log)
    exp = broker.create_experiment(sc.experiment_name, sc.qos, list(sc.job_specs))

    if args.run_to_completion:
        if sc.clock_mode != "virtual":
            print("grbd: --run-to-completion needs a virtual clock scenario", file=sys.stderr)
            return 2
        broker.control(exp.id, ExperimentAction.START)
        outcome = drive_to_completion(broker, clock, max_sim_s=args.max_sim_s)
        _print_summary(broker, exp.id, outcome)
        if log_stream not in (None, sys.stdout):
            log_stream.close()
        return 0

    try:
        host, port = wire.parse_addr(args.listen)
    except ValueError as exc:
        print(f"grbd: {exc}", file=sys.stderr)
        return 2
    interval = args.tick_interval if sc.clock_mode == "real" else None
    server = BrokerServer(broker, host=host, port=port, tick_interval_s=interval)
    server.start()
    bound_host, bound_port = server.address
    print(f"grbd listening on {bound_host}:{bound_port} (experiment {exp.id})", flush=True)

    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    stop.wait()
    server.stop()
    if log_stream not in (None, sys.stdout):
        log_stream.close()
    return 0


def _print_summary(broker: Broker, exp_id: str, outcome: str) -> None:
    st = broker.experiment_status(exp_id)
    counts = " ".join(f"{s.value.lower()}={st.counts[s]}" for s in JobState)
    print(f"outcome\t{outcome}")
    print(f"experiment\t{st.experiment_id}\t{st.name}\t{st.state.value}")
    print(f"time\t{tz.iso_utc(broker.clock.now())}")
    print(f"spent\t{fmt_money(st.budget_spent)}")
    print(f"counts\t{counts}")


def gmond_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gmond", description="Web monitoring portal over a running broker."
    )
    parser.add_argument(
        "--listen",
        default=_env("GRIDSTEER_HTTP", "127.0.0.1:8080"),
        help="host:port for HTTP (default 127.0.0.1:8080)",
    )
    parser.add_argument(
        "--grb",
        default=_env("GRIDSTEER_GRB", f"127.0.0.1:{wire.DEFAULT_PORT}"),
        help="default broker address offered at login",
    )
    parser.add_argument(
        "--static",
        default=_env("GRIDSTEER_STATIC"),
        help="directory with the built browser UI (served at /)",
    )
    parser.add_argument("--session-ttl", type=float, default=24 * 3600)
    args = parser.parse_args(argv)

    try:
        host, port = wire.parse_addr(args.listen, default_port=8080)
    except ValueError as exc:
        print(f"gmond: {exc}", file=sys.stderr)
        return 2
    if args.static and not os.path.isdir(args.static):
        print(f"gmond: static dir {args.static!r} does not exist", file=sys.stderr)
        return 2

    from .portal import create_app

    app = create_app(
        default_broker=args.grb,
        session_ttl_s=args.session_ttl,
        static_dir=args.static,
    )
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def gmon_cli_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gmon-cli",
        description="Send one wire-protocol request to a broker and print the records.",
    )
    parser.add_argument(
        "--broker",
        default=_env("GRIDSTEER_BROKER", f"127.0.0.1:{wire.DEFAULT_PORT}"),
        help="broker host:port (default 127.0.0.1:9000)",
    )
    parser.add_argument("--timeout", type=float, default=5.0)
    parser.add_argument("verb", help="protocol verb, e.g. EXP-LIST")
    parser.add_argument("args", nargs="*", help="verb arguments")
    args = parser.parse_args(argv)

    try:
        addr = wire.parse_addr(args.broker)
    except ValueError as exc:
        print(f"gmon-cli: {exc}", file=sys.stderr)
        return 2

    try:
        resp = wire.call(addr, wire.Request(args.verb.upper(), tuple(args.args)), timeout=args.timeout)
    except ValueError as exc:
        print(f"gmon-cli: {exc}", file=sys.stderr)
        return 2
    except wire.TransportError as exc:
        print(f"gmon-cli: transport error: {exc}", file=sys.stderr)
        return 2
    except wire.MalformedResponse as exc:
        print(f"gmon-cli: garbled reply: {exc}", file=sys.stderr)
        return 2

    if isinstance(resp, wire.ErrResponse):
        print(f"ERR {resp.code} {resp.message}", file=sys.stderr)
        return 1
    for record in resp.records:
        print("\t".join(record))
    return 0
