"""Deterministic discrete-event simulation of grid nodes.

Runs entirely on the caller's clock: ``advance(until)`` replays everything
scheduled up to ``until`` and hands back the events in causal order. Given
the same node configs and seed, the event stream and the log are identical
byte for byte, run after run - that determinism is a contract, not a happy
accident, so randomness comes from a documented portable LCG rather than
``random.Random``.

Stochastic model per dispatch (exactly two draws, jitter then failure):

    duration = (est_cpu_s / speed) * uniform[1 - jitter, 1 + jitter)
    fails    = next_float() < fail_prob      # failure surfaces at 0.5 * duration

Outages are fixed [start, end) windows: the node goes Down at start (killing
whatever it was running), Up at end. Events at one instant order as
NodeDown < NodeUp < JobFailed < JobDone, then by job id, then node id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Optional

from .model import GridNode, NodeStatus, NotFound
from .rng import Lcg64
from .tz import iso_utc


class SimEventKind(str, Enum):
    NODE_DOWN = "NodeDown"
    NODE_UP = "NodeUp"
    JOB_FAILED = "JobFailed"
    JOB_DONE = "JobDone"


_RANK = {
    SimEventKind.NODE_DOWN: 0,
    SimEventKind.NODE_UP: 1,
    SimEventKind.JOB_FAILED: 2,
    SimEventKind.JOB_DONE: 3,
}

# log verbs per event kind; dispatch/cancel get their own
_LOG_KIND = {
    SimEventKind.NODE_DOWN: "NODE-DOWN",
    SimEventKind.NODE_UP: "NODE-UP",
    SimEventKind.JOB_FAILED: "JOB-FAILED",
    SimEventKind.JOB_DONE: "JOB-DONE",
}

FAIL_REASON_FAULT = "failure"
FAIL_REASON_NODE_DOWN = "node-down"


@dataclass(frozen=True)
class SimEvent:
    at: float
    kind: SimEventKind
    node_id: str
    job_id: str = ""
    cpu_seconds: float = 0.0
    reason: str = ""


@dataclass(frozen=True)
class NodeConfig:
    """Static node description plus its stochastic behavior."""

    node: GridNode
    fail_prob: float = 0.0
    jitter: float = 0.0
    outages: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.fail_prob <= 1.0:
            raise ValueError(f"fail_prob {self.fail_prob} outside [0, 1]")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError(f"jitter {self.jitter} outside [0, 1)")
        if self.node.speed <= 0:
            raise ValueError("node speed must be positive")
        if self.node.capacity < 1:
            raise ValueError("node capacity must be >= 1")
        for start, end in self.outages:
            if not start < end:
                raise ValueError(f"outage [{start}, {end}) is empty")
        object.__setattr__(self, "outages", _normalize_outages(self.outages))


def _normalize_outages(
    windows: tuple[tuple[float, float], ...]
) -> tuple[tuple[float, float], ...]:
    """Sort and merge overlapping or touching windows."""
    merged: list[tuple[float, float]] = []
    for start, end in sorted(windows):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return tuple(merged)


class EventLog:
    """Append-only sink: one TAB-separated line per state-changing event."""

    def __init__(self, stream: Optional[IO[str]]):
        self._stream = stream

    def write(self, at: float, kind: str, job: str, node: str, extra: str = "") -> None:
        if self._stream is None:
            return
        self._stream.write(f"{iso_utc(at)}\t{kind}\t{job or '-'}\t{node or '-'}\t{extra}\n")
        self._stream.flush()


@dataclass
class _Flight:
    node_id: str
    until: float      # when the scheduled outcome (done or fail) fires
    seq: int          # heap entry id, for cancellation
    duration: float   # full wall duration drawn at dispatch


class GridSim:
    """Event-driven node farm under a virtual clock the caller advances."""

    def __init__(
        self,
        configs: list[NodeConfig],
        seed: int,
        start: float,
        log: EventLog | None = None,
    ):
        self.now = start
        self.log = log or EventLog(None)
        self._rng = Lcg64(seed)
        self.nodes: dict[str, GridNode] = {}
        self._configs: dict[str, NodeConfig] = {}
        self._busy: dict[str, int] = {}
        self._onboard: dict[str, set[str]] = {}  # node id -> in-flight job ids
        self._inflight: dict[str, _Flight] = {}
        self._heap: list[tuple] = []  # (at, rank, job_id, node_id, seq, kind, cpu, reason)
        self._cancelled: set[int] = set()
        self._seq = 0

        for cfg in configs:
            node = cfg.node
            if node.id in self.nodes:
                raise ValueError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
            self._configs[node.id] = cfg
            self._busy[node.id] = 0
            self._onboard[node.id] = set()
            for w_start, w_end in cfg.outages:
                if w_end <= start:
                    continue
                if w_start <= start:
                    node.status = NodeStatus.DOWN
                else:
                    self._push(w_start, SimEventKind.NODE_DOWN, "", node.id)
                self._push(w_end, SimEventKind.NODE_UP, "", node.id)

    def _push(
        self,
        at: float,
        kind: SimEventKind,
        job_id: str,
        node_id: str,
        cpu: float = 0.0,
        reason: str = "",
    ) -> int:
        self._seq += 1
        heapq.heappush(
            self._heap, (at, _RANK[kind], job_id, node_id, self._seq, kind, cpu, reason)
        )
        return self._seq

    # -- queries ----------------------------------------------------------

    def next_event_at(self) -> float | None:
        while self._heap and self._heap[0][4] in self._cancelled:
            entry = heapq.heappop(self._heap)
            self._cancelled.discard(entry[4])
        return self._heap[0][0] if self._heap else None

    def busy_map(self) -> dict[str, list[float]]:
        """Per node, the instants its occupied slots come free."""
        out: dict[str, list[float]] = {nid: [] for nid in self.nodes}
        for flight in self._inflight.values():
            out[flight.node_id].append(flight.until)
        return out

    def free_slot_total(self) -> int:
        return sum(
            node.capacity - self._busy[nid]
            for nid, node in self.nodes.items()
            if node.status is NodeStatus.UP
        )

    # -- commands ---------------------------------------------------------

    def dispatch(self, job_id: str, est_cpu_s: float, node_id: str) -> bool:
        """Try to start a job now. False when the node is Down or full.

        Consumes exactly two random draws on acceptance, zero on refusal.
        """
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFound("node", node_id)
        if job_id in self._inflight:
            raise ValueError(f"job {job_id!r} already in flight")
        if node.status is not NodeStatus.UP:
            return False
        if self._busy[node_id] >= node.capacity:
            return False

        cfg = self._configs[node_id]
        u_jitter = self._rng.next_float()
        u_fail = self._rng.next_float()
        duration = (est_cpu_s / node.speed) * (1.0 - cfg.jitter + 2.0 * cfg.jitter * u_jitter)
        if u_fail < cfg.fail_prob:
            until = self.now + 0.5 * duration
            seq = self._push(until, SimEventKind.JOB_FAILED, job_id, node_id,
                             reason=FAIL_REASON_FAULT)
        else:
            until = self.now + duration
            seq = self._push(until, SimEventKind.JOB_DONE, job_id, node_id,
                             cpu=duration * node.speed)
        self._busy[node_id] += 1
        self._onboard[node_id].add(job_id)
        self._inflight[job_id] = _Flight(node_id, until, seq, duration)
        self.log.write(self.now, "DISPATCH", job_id, node_id, f"dur={duration!r}")
        return True

    def cancel(self, job_id: str) -> bool:
        """Abort an in-flight job; its slot frees immediately."""
        flight = self._inflight.pop(job_id, None)
        if flight is None:
            return False
        self._cancelled.add(flight.seq)
        self._busy[flight.node_id] -= 1
        self._onboard[flight.node_id].discard(job_id)
        self.log.write(self.now, "CANCEL", job_id, flight.node_id)
        return True

    def advance(self, until: float) -> list[SimEvent]:
        """Play the simulation forward to ``until`` (inclusive).

        The clock lands on ``until`` even past the last event; it never
        rewinds.
        """
        if until < self.now:
            raise ValueError(f"clock cannot rewind from {self.now} to {until}")
        out: list[SimEvent] = []
        heap = self._heap
        while heap and heap[0][0] <= until:
            at, _rank, job_id, node_id, seq, kind, cpu, reason = heapq.heappop(heap)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            node = self.nodes[node_id]
            if kind is SimEventKind.NODE_DOWN:
                node.status = NodeStatus.DOWN
                # everything running here dies at this same instant
                for victim in self._onboard[node_id]:
                    flight = self._inflight.pop(victim)
                    self._cancelled.add(flight.seq)
                    self._busy[node_id] -= 1
                    self._push(at, SimEventKind.JOB_FAILED, victim, node_id,
                               reason=FAIL_REASON_NODE_DOWN)
                self._onboard[node_id].clear()
                event = SimEvent(at, kind, node_id)
            elif kind is SimEventKind.NODE_UP:
                node.status = NodeStatus.UP
                event = SimEvent(at, kind, node_id)
            elif kind is SimEventKind.JOB_FAILED:
                self._forget(job_id, node_id)
                event = SimEvent(at, kind, node_id, job_id=job_id, reason=reason)
            else:  # JOB_DONE
                self._forget(job_id, node_id)
                event = SimEvent(at, kind, node_id, job_id=job_id, cpu_seconds=cpu)
            out.append(event)
            extra = ""
            if kind is SimEventKind.JOB_DONE:
                extra = f"cpu={cpu!r}"
            elif kind is SimEventKind.JOB_FAILED:
                extra = reason
            self.log.write(at, _LOG_KIND[kind], job_id, node_id, extra)
        self.now = until
        return out

    def _forget(self, job_id: str, node_id: str) -> None:
        if job_id in self._inflight:
            del self._inflight[job_id]
            self._busy[node_id] -= 1
            self._onboard[node_id].discard(job_id)
