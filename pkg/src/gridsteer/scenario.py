"""Scenario files: JSON descriptions of a node farm plus one experiment.

Validation is strict and path-precise: unknown keys, wrong types, and bad
values all raise SchemaError naming the exact location (``nodes[2].speed``).
A scenario that loads is a scenario that runs.

Timestamps accept absolute ISO-8601 ('2002-11-18T00:00:00Z') or offsets
relative to the clock start ('T+400').
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Any

from . import tz
from .clock import RealClock, VirtualClock
from .model import GridNode, Optimization, QoSParams
from .money import parse_money
from .nodesim import EventLog, GridSim, NodeConfig


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Scenario:
    seed: int
    clock_mode: str              # "virtual" | "real"
    start: float                 # epoch seconds
    clock_speed: float           # sim seconds per wall second (real mode)
    node_configs: tuple[NodeConfig, ...]
    experiment_name: str
    qos: QoSParams
    job_specs: tuple[tuple[str, float], ...]

    def make_clock(self):
        if self.clock_mode == "real":
            return RealClock(self.start, self.clock_speed)
        return VirtualClock(self.start)

    def make_sim(self, log: EventLog | None = None) -> GridSim:
        return GridSim(list(self.node_configs), seed=self.seed, start=self.start, log=log)


def load_scenario(path: str) -> Scenario:
    """Read and validate one scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc}") from None
    return parse_scenario(raw)


def parse_scenario(raw: Any) -> Scenario:
    root = _obj(raw, "$", {"seed", "clock", "nodes", "experiment"})
    seed = _int(_require(root, "seed", "$"), "$.seed")

    clock_raw = root.get("clock")
    if clock_raw is None:
        raise SchemaError("$.clock", "missing")
    clock = _obj(clock_raw, "$.clock", {"mode", "start", "speed"})
    mode = _str(clock.get("mode", "virtual"), "$.clock.mode")
    if mode not in ("virtual", "real"):
        raise SchemaError("$.clock.mode", f"must be 'virtual' or 'real', got {mode!r}")
    start = _abs_time(_str(_require(clock, "start", "$.clock"), "$.clock.start"), "$.clock.start")
    speed = _num(clock.get("speed", 1.0), "$.clock.speed")
    if speed <= 0:
        raise SchemaError("$.clock.speed", "must be positive")

    nodes_raw = root.get("nodes")
    if not isinstance(nodes_raw, list) or not nodes_raw:
        raise SchemaError("$.nodes", "must be a non-empty list")
    configs = tuple(
        _parse_node(item, f"$.nodes[{i}]", start) for i, item in enumerate(nodes_raw)
    )
    seen: set[str] = set()
    for i, cfg in enumerate(configs):
        if cfg.node.id in seen:
            raise SchemaError(f"$.nodes[{i}].id", f"duplicate node id {cfg.node.id!r}")
        seen.add(cfg.node.id)

    exp_raw = root.get("experiment")
    if exp_raw is None:
        raise SchemaError("$.experiment", "missing")
    exp = _obj(exp_raw, "$.experiment", {"name", "qos", "jobs"})
    name = _str(_require(exp, "name", "$.experiment"), "$.experiment.name")
    if not name:
        raise SchemaError("$.experiment.name", "must not be empty")

    qos_obj = _obj(
        _require(exp, "qos", "$.experiment"),
        "$.experiment.qos",
        {"deadline", "budget", "optimization"},
    )
    deadline = _time(
        _str(_require(qos_obj, "deadline", "$.experiment.qos"), "$.experiment.qos.deadline"),
        "$.experiment.qos.deadline",
        start,
    )
    budget = _money(
        _require(qos_obj, "budget", "$.experiment.qos"), "$.experiment.qos.budget"
    )
    mode_text = _str(
        _require(qos_obj, "optimization", "$.experiment.qos"),
        "$.experiment.qos.optimization",
    )
    try:
        optimization = Optimization(mode_text)
    except ValueError:
        raise SchemaError(
            "$.experiment.qos.optimization",
            f"must be 'TimeMin' or 'CostMin', got {mode_text!r}",
        ) from None

    jobs_raw = exp.get("jobs")
    if not isinstance(jobs_raw, list) or not jobs_raw:
        raise SchemaError("$.experiment.jobs", "must be a non-empty list")
    job_specs = []
    for i, item in enumerate(jobs_raw):
        jpath = f"$.experiment.jobs[{i}]"
        job = _obj(item, jpath, {"name", "est_cpu_s"})
        jname = _str(_require(job, "name", jpath), f"{jpath}.name")
        est = _num(_require(job, "est_cpu_s", jpath), f"{jpath}.est_cpu_s")
        if est <= 0:
            raise SchemaError(f"{jpath}.est_cpu_s", "must be positive")
        job_specs.append((jname, est))

    return Scenario(
        seed=seed,
        clock_mode=mode,
        start=start,
        clock_speed=speed,
        node_configs=configs,
        experiment_name=name,
        qos=QoSParams(deadline=deadline, budget=budget, optimization=optimization),
        job_specs=tuple(job_specs),
    )


def _parse_node(raw: Any, path: str, start: float) -> NodeConfig:
    allowed = {
        "id", "server_name", "hostname", "rate", "speed",
        "capacity", "fail_prob", "jitter", "outages", "remarks",
    }
    obj = _obj(raw, path, allowed)
    node_id = _str(_require(obj, "id", path), f"{path}.id")
    if not node_id:
        raise SchemaError(f"{path}.id", "must not be empty")
    rate = _num(_require(obj, "rate", path), f"{path}.rate")
    if rate < 0:
        raise SchemaError(f"{path}.rate", "must be >= 0")
    speed = _num(_require(obj, "speed", path), f"{path}.speed")
    if speed <= 0:
        raise SchemaError(f"{path}.speed", "must be positive")
    capacity = _int(obj.get("capacity", 1), f"{path}.capacity")
    if capacity < 1:
        raise SchemaError(f"{path}.capacity", "must be >= 1")
    fail_prob = _num(obj.get("fail_prob", 0.0), f"{path}.fail_prob")
    if not 0.0 <= fail_prob <= 1.0:
        raise SchemaError(f"{path}.fail_prob", "must be within [0, 1]")
    jitter = _num(obj.get("jitter", 0.0), f"{path}.jitter")
    if not 0.0 <= jitter < 1.0:
        raise SchemaError(f"{path}.jitter", "must be within [0, 1)")

    outages_raw = obj.get("outages", [])
    if not isinstance(outages_raw, list):
        raise SchemaError(f"{path}.outages", "must be a list of [start, end] pairs")
    outages = []
    for i, pair in enumerate(outages_raw):
        opath = f"{path}.outages[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(opath, "must be a [start, end] pair")
        w_start = _time(_str(pair[0], f"{opath}[0]"), f"{opath}[0]", start)
        w_end = _time(_str(pair[1], f"{opath}[1]"), f"{opath}[1]", start)
        if not w_start < w_end:
            raise SchemaError(opath, "start must be before end")
        outages.append((w_start, w_end))

    node = GridNode(
        id=node_id,
        server_name=_str(obj.get("server_name", node_id), f"{path}.server_name"),
        hostname=_str(obj.get("hostname", node_id), f"{path}.hostname"),
        rate=rate,
        speed=speed,
        capacity=capacity,
        remarks=_str(obj.get("remarks", ""), f"{path}.remarks"),
    )
    return NodeConfig(
        node=node, fail_prob=fail_prob, jitter=jitter, outages=tuple(outages)
    )


# -- leaf validators ---------------------------------------------------------


def _obj(raw: Any, path: str, allowed: set[str]) -> dict:
    if not isinstance(raw, dict):
        raise SchemaError(path, "must be an object")
    for key in raw:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}", "unknown key")
    return raw


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing")
    return obj[key]


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, "must be a string")
    return value


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, "must be a number")
    if value != value or value in (float("inf"), float("-inf")):
        raise SchemaError(path, "must be finite")
    return float(value)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "must be an integer")
    return value


def _money(value: Any, path: str) -> Decimal:
    if not isinstance(value, str):
        raise SchemaError(path, "must be a string amount like '100.00'")
    try:
        amount = parse_money(value)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None
    if amount < 0:
        raise SchemaError(path, "must be >= 0")
    return amount


def _abs_time(text: str, path: str) -> float:
    try:
        return tz.parse_iso(text)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def _time(text: str, path: str, start: float) -> float:
    """Absolute ISO-8601 or 'T+<seconds>' relative to the clock start."""
    if not isinstance(text, str):
        raise SchemaError(path, "must be a timestamp string")
    if text.startswith("T+"):
        try:
            delta = float(text[2:])
        except ValueError:
            raise SchemaError(path, f"bad relative time {text!r}") from None
        return start + delta
    return _abs_time(text, path)
